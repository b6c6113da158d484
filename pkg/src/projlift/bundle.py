"""The fibered chart on the complement of an invariant projective subspace.

A projective point outside P(W) splits, in the adapted basis, into a unit
quotient direction theta and a fiber coordinate t in W scaled by the
quotient component; block-triangular matrices act by an affine skew map
    theta' = C theta / ||C theta||,   t' = (A t + B theta) / ||C theta||.
The chart is singular on P(W): points with quotient component below the
cutoff are rejected rather than silently renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ensembles import BlockSystem, MatrixEnsemble, draw_stack
from .estimates import GrowthEstimate, from_samples
from .linalg import gauge_N, operator_norm, proj_normalize
from .parallel import rep_map

# quotient components smaller than this count as "inside P(W)"
CHART_CUTOFF = 1e-10


class ChartError(ValueError):
    """Point inside or numerically too close to P(W)."""


@dataclass(frozen=True)
class BundleState:
    """A chart point (theta, t): unit quotient direction plus fiber vector.

    The +-1 ambiguity is resolved by the projective sign rule applied to
    theta, with t flipping jointly.
    """

    theta: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        t = np.asarray(self.t, dtype=float)
        n = np.linalg.norm(theta)
        if n == 0.0 or not np.all(np.isfinite(theta)) or not np.all(np.isfinite(t)):
            raise ChartError("invalid chart coordinates")
        theta = theta / n
        lead = int(np.argmax(np.abs(theta)))
        if theta[lead] < 0:
            theta = -theta
            t = -t
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "t", t.copy())

    @property
    def drift(self) -> float:
        return math.log(float(np.linalg.norm(self.t)) + 1.0)

    def close_to(self, other: "BundleState", tol: float = 1e-12) -> bool:
        return (np.max(np.abs(self.theta - other.theta)) <= tol
                and np.max(np.abs(self.t - other.t)) <= tol)


def split_point(p, bs: BlockSystem) -> BundleState:
    """Chart coordinates of a projective point outside P(W)."""
    p = proj_normalize(p)
    xi = bs.adapted_basis.T @ p
    r = bs.r
    xi_w, xi_q = xi[:r], xi[r:]
    nq = float(np.linalg.norm(xi_q))
    if nq <= CHART_CUTOFF:
        raise ChartError("point lies in (or too close to) the invariant subspace")
    return BundleState(xi_q / nq, xi_w / nq)


def join_state(s: BundleState, bs: BlockSystem) -> np.ndarray:
    """Projective point of a chart state; inverse of :func:`split_point`."""
    vec = np.concatenate([s.t, s.theta])
    return proj_normalize(bs.adapted_basis @ vec)


def cocycle_step(g, s: BundleState, bs: BlockSystem) -> BundleState:
    """One step of the skew action of ``g`` on (theta, t)."""
    a, b, c = bs.blocks(g)
    ct = c @ s.theta
    nc = float(np.linalg.norm(ct))
    if nc <= 1e-300:
        raise ChartError("quotient action collapsed the direction")
    t_new = (a @ s.t + b @ s.theta) / nc
    if not np.all(np.isfinite(t_new)):
        raise ChartError("non-finite fiber image")
    return BundleState(ct / nc, t_new)


def drift_value(s: BundleState) -> float:
    """The recurrence functional log(||t|| + 1)."""
    return s.drift


@dataclass(frozen=True)
class DriftCheck:
    delta: float
    bound: float
    ok: bool


def drift_step_bound_check(g, s: BundleState, bs: BlockSystem,
                           slack: float = 1e-9) -> DriftCheck:
    """Per-step drift increment against the gauge bound log 3 + 2 log N(g)."""
    delta = drift_value(cocycle_step(g, s, bs)) - drift_value(s)
    bound = math.log(3.0) + 2.0 * math.log(gauge_N(g))
    return DriftCheck(delta, bound, delta <= bound + slack)


@dataclass(frozen=True)
class BundleTrace:
    """A fibered trajectory: per-step drift, log fiber norm and quotient
    direction, plus the final chart point in scale-split form (escaping
    trajectories have log fiber norms far beyond float range for ||t||)."""

    drift: np.ndarray = field(repr=False)
    log_t: np.ndarray = field(repr=False)
    thetas: np.ndarray = field(repr=False)
    final_theta: np.ndarray = field(repr=False)
    final_t_dir: np.ndarray = field(repr=False)
    final_log_t: float

    @property
    def steps(self) -> int:
        return len(self.drift)

    def final_state(self) -> BundleState:
        if self.final_log_t > 700.0:
            raise ChartError("final fiber norm exceeds float range; "
                             "use final_t_dir/final_log_t")
        scale = 0.0 if self.final_log_t == -math.inf else math.exp(self.final_log_t)
        return BundleState(self.final_theta, scale * self.final_t_dir)


def _split_fiber(t: np.ndarray):
    nt = float(np.linalg.norm(t))
    if nt == 0.0:
        return np.zeros_like(t), -math.inf
    return t / nt, math.log(nt)


def bundle_trajectory(bs: BlockSystem, ens: MatrixEnsemble, state: BundleState,
                      n: int, rng: np.random.Generator) -> BundleTrace:
    """Run the skew action for ``n`` sampled steps from ``state``."""
    if ens.is_finite:
        a, b, c = bs.block_stacks(ens)
        idx = ens.sample_indices(rng, n)
    else:
        mats = [ens.sample(rng) for _ in range(n)]
        blocks = [bs.blocks(g) for g in mats]
        a = np.ascontiguousarray(np.stack([blk[0] for blk in blocks]))
        b = np.ascontiguousarray(np.stack([blk[1] for blk in blocks]))
        c = np.ascontiguousarray(np.stack([blk[2] for blk in blocks]))
        idx = np.arange(n, dtype=np.int64)
    t_dir, log_t = _split_fiber(state.t)
    drift, log_t_trace, thetas, theta_f, t_dir_f, log_t_f = kernels.bundle_trace(
        a, b, c, idx, state.theta, t_dir, log_t
    )
    return BundleTrace(drift, log_t_trace, thetas, theta_f, t_dir_f, float(log_t_f))


def fiber_contraction_rate(bs: BlockSystem, ens: MatrixEnsemble, theta0,
                           n: int, reps: int, seed: int) -> GrowthEstimate:
    """Estimate of (1/n) log( ||A(L_n)|| / ||C(L_n) theta0|| ).

    Negative beyond the error bar means the affine fiber maps contract along
    trajectories over the direction theta0; the caller must keep theta0 out
    of the slow filtration of the quotient.
    """
    theta0 = np.asarray(theta0, dtype=float)

    def one(rng):
        if ens.is_finite:
            a, _, c = bs.block_stacks(ens)
            idx = ens.sample_indices(rng, n)
        else:
            mats = [ens.sample(rng) for _ in range(n)]
            blocks = [bs.blocks(g) for g in mats]
            a = np.ascontiguousarray(np.stack([blk[0] for blk in blocks]))
            c = np.ascontiguousarray(np.stack([blk[2] for blk in blocks]))
            idx = np.arange(n, dtype=np.int64)
        a_mat, a_scale, log_c = kernels.fiber_rates(a, c, idx, theta0)
        return (a_scale + math.log(operator_norm(a_mat)) - log_c) / n

    return from_samples(rep_map(one, reps, seed), n)
