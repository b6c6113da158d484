"""Random product trajectories and Lyapunov-exponent estimators.

All statistical entry points take an integer ``seed`` and average over
``reps`` independent repetitions; repetition r draws from the generator
derived from (seed, r), so results do not depend on the worker-pool size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ensembles import (
    BlockSystem,
    MatrixEnsemble,
    draw_stack,
    quotient_ensemble,
    restrict_to_invariant,
)
from .estimates import GrowthEstimate, from_samples
from .linalg import operator_norm
from .parallel import child_seed, rep_map, spawn_rng

# rescale the running product whenever its largest entry leaves this window
_RESCALE_HI = 1.0


def product_trajectory(ens: MatrixEnsemble, n: int, rng: np.random.Generator):
    """Yield (M_k, logscale_k) with L_k = X_k ... X_1 = exp(logscale_k) M_k.

    The product is rescaled by its largest-magnitude entry at every step and
    the log scale accumulates in extended precision, so entries never
    overflow for any ensemble with finite first moment.
    """
    if n < 1:
        raise ValueError("trajectory length must be >= 1")
    atoms, idx = draw_stack(ens, rng, n)
    m = np.eye(ens.dim)
    logscale = np.longdouble(0.0)
    for s in range(n):
        m = atoms[idx[s]] @ m
        top = np.max(np.abs(m))
        if not np.isfinite(top) or top == 0.0:
            raise FloatingPointError("product renormalization failed")
        if top > _RESCALE_HI or top < 1.0 / _RESCALE_HI:
            m = m / top
            logscale += np.log(np.longdouble(top))
        yield m.copy(), float(logscale)


def top_exponent(ens: MatrixEnsemble, n: int, reps: int, seed: int) -> GrowthEstimate:
    """Mean over repetitions of (1/n) log ||L_n|| (operator norm)."""
    if reps < 1:
        raise ValueError("need at least one repetition")

    def one(rng):
        atoms, idx = draw_stack(ens, rng, n)
        m, logscale = kernels.left_product(atoms, idx)
        return (logscale + math.log(operator_norm(m))) / n

    return from_samples(rep_map(one, reps, seed), n)


def spectrum(ens: MatrixEnsemble, n: int, reps: int, seed: int) -> list[GrowthEstimate]:
    """Full Lyapunov spectrum by per-step re-orthonormalization.

    Each repetition pushes an orthonormal frame through the product and
    accumulates per-direction log stretches; directions are paired across
    repetitions by frame index and the result is sorted nonincreasing.
    The value sum equals the same-draw average of log |det X| exactly (up
    to compensated-summation roundoff).
    """

    def one(rng):
        atoms, idx = draw_stack(ens, rng, n)
        return kernels.spectrum_accum(atoms, idx) / n

    per_rep = np.stack(rep_map(one, reps, seed))
    means = per_rep.mean(axis=0)
    order = np.argsort(-means, kind="stable")
    return [from_samples(per_rep[:, j].tolist(), n) for j in order]


def vector_growth(ens: MatrixEnsemble, v, n: int, reps: int, seed: int) -> GrowthEstimate:
    """Mean over repetitions of (1/n) log(||L_n v|| / ||v||)."""
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(v) == 0.0:
        raise ValueError("direction must be nonzero")

    def one(rng):
        atoms, idx = draw_stack(ens, rng, n)
        return kernels.vector_lognorm(atoms, idx, v) / n

    return from_samples(rep_map(one, reps, seed), n)


@dataclass(frozen=True)
class SubspaceExponents:
    lambda1_W: GrowthEstimate
    lambda1_Q: GrowthEstimate
    spectrum_W: list[GrowthEstimate]
    spectrum_Q: list[GrowthEstimate]


def subspace_exponents(bs: BlockSystem, ens: MatrixEnsemble, n: int, reps: int,
                       seed: int) -> SubspaceExponents:
    """Spectra of the restricted (W) and quotient (V/W) ensembles."""
    spec_w = spectrum(restrict_to_invariant(bs, ens), n, reps, child_seed(seed, 0))
    spec_q = spectrum(quotient_ensemble(bs, ens), n, reps, child_seed(seed, 1))
    return SubspaceExponents(spec_w[0], spec_q[0], spec_w, spec_q)


def uniform_growth_floor(ens: MatrixEnsemble, n: int, v_samples: int, seed: int,
                         reps: int = 20) -> float:
    """Smallest direction-averaged growth rate over a direction menu.

    Directions: every standard basis vector plus ``v_samples`` uniformly
    random unit vectors.  Each repetition reuses one sampled product for all
    directions (common random numbers); the floor is the minimum over
    directions of the repetition mean of (1/n) log ||L_n v||.
    """
    d = ens.dim
    dir_rng = spawn_rng(seed, 10_000)
    dirs = [np.eye(d)[i] for i in range(d)]
    for _ in range(v_samples):
        v = dir_rng.normal(size=d)
        dirs.append(v / np.linalg.norm(v))

    def one(rng):
        atoms, idx = draw_stack(ens, rng, n)
        return [kernels.vector_lognorm(atoms, idx, v) / n for v in dirs]

    per_rep = np.asarray(rep_map(one, reps, seed))  # (reps, n_dirs)
    return float(per_rep.mean(axis=0).min())
