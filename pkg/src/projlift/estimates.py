"""Growth-rate statistics shared by every estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class GrowthEstimate:
    """A growth rate in nats per step with its across-repetition error bar.

    ``stderr`` is the sample standard deviation over repetitions divided by
    sqrt(repetitions); zero for exact (deterministic) values.
    """

    value: float
    stderr: float
    horizon: int
    repetitions: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    def separated_from(self, other: "GrowthEstimate", sigmas: float = 3.0) -> bool:
        """True when the two values differ by more than ``sigmas`` combined
        standard errors (the resolution rule used by every dichotomy)."""
        return abs(self.value - other.value) > sigmas * combined_stderr(self, other)


def combined_stderr(a: GrowthEstimate, b: GrowthEstimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def from_samples(values, horizon: int) -> GrowthEstimate:
    """Mean and standard error across independent repetition values."""
    n = len(values)
    if n == 0:
        raise ValueError("no repetition values")
    mean = math.fsum(values) / n
    if n == 1:
        return GrowthEstimate(mean, 0.0, horizon, 1)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return GrowthEstimate(mean, math.sqrt(var / n), horizon, n)
