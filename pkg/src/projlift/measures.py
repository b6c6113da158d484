"""Empirical stationary measures, weak-convergence surrogates, and the
contraction/expansion regime classifier for lifts past an invariant
projective subspace.

Weak convergence is probed through a fixed seeded dictionary of bounded
Lipschitz bump functions; the resulting discrepancy has an empirical noise
floor (measured on same-law clouds, see the tests) rather than a
theorem-backed rate.  Regime verdicts are withheld whenever an exponent
comparison is closer than the requested number of combined standard
errors: near-critical systems come back indeterminate, never as a guess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .bundle import BundleState, BundleTrace, bundle_trajectory, join_state
from .ensembles import (
    BlockSystem,
    MatrixEnsemble,
    draw_stack,
    quotient_ensemble,
    restrict_to_invariant,
)
from .estimates import GrowthEstimate, combined_stderr
from .fkh import (
    FiltrationError,
    FkhReport,
    candidate_invariant_subspaces,
    find_invariant_subspace,
    fkh_estimate,
)
from .linalg import (
    Subspace,
    canonicalize_rows,
    principal_angle_distance,
    proj_distance_many,
    proj_normalize,
    rank_span,
)
from .parallel import child_seed, spawn_rng

DICT_RADII = (0.1, 0.3, 0.6)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """A weighted point cloud on projective space (rows are canonical unit
    representatives; weights normalized to total mass one)."""

    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = canonicalize_rows(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (pts.shape[0],):
            raise ValueError("one weight per point required")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("weights must have positive finite total")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w / total)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @staticmethod
    def point_mass(p) -> "EmpiricalMeasure":
        p = proj_normalize(p)
        return EmpiricalMeasure(p[None, :], np.array([1.0]))

    def support_span(self, tol: float = 1e-8) -> Subspace:
        return rank_span(self.points, tol)

    def mass_within(self, p, radius: float) -> float:
        """Total weight within projective distance ``radius`` of ``p``."""
        d = proj_distance_many(self.points, proj_normalize(p))
        return float(self.weights[d <= radius].sum())

    def mass_near_subspace(self, s: Subspace, radius: float) -> float:
        """Total weight of points within ``radius`` of P(s) (distance =
        norm of the component orthogonal to s)."""
        resid = self.points - self.points @ s.basis @ s.basis.T
        return float(self.weights[np.linalg.norm(resid, axis=1) <= radius].sum())


def cesaro_empirical(ens: MatrixEnsemble, x, n: int, samples_per_step: int,
                     rng: np.random.Generator) -> EmpiricalMeasure:
    """Sampled Cesaro averages: ``samples_per_step`` fresh products L_i for
    every horizon i <= n, each recorded at L_i x with equal weight."""
    if n < 1:
        raise ValueError("need n >= 1")
    x = proj_normalize(x)
    pts = np.empty((n * samples_per_step, ens.dim))
    row = 0
    for i in range(1, n + 1):
        for _ in range(samples_per_step):
            atoms, idx = draw_stack(ens, rng, i)
            pts[row] = kernels.apply_word(atoms, idx, x)
            row += 1
    return EmpiricalMeasure(pts, np.full(row, 1.0 / row))


def birkhoff_empirical(ens: MatrixEnsemble, x, n: int, burn_in: int,
                       rng: np.random.Generator) -> EmpiricalMeasure:
    """Single-trajectory occupation measure after ``burn_in`` steps."""
    if not 0 <= burn_in < n:
        raise ValueError("need n > burn_in >= 0")
    x = proj_normalize(x)
    atoms, idx = draw_stack(ens, rng, n)
    pts = kernels.birkhoff_points(atoms, idx, x, burn_in)
    return EmpiricalMeasure(pts, np.full(len(pts), 1.0 / len(pts)))


def push_forward(ens: MatrixEnsemble, m: EmpiricalMeasure,
                 rng: np.random.Generator) -> EmpiricalMeasure:
    """One sampled convolution step: each cloud point moves by its own draw."""
    if ens.is_finite:
        idx = ens.sample_indices(rng, m.size)
        moved = np.einsum("nij,nj->ni", ens.atoms[idx], m.points)
    else:
        moved = np.stack([ens.sample(rng) @ p for p in m.points])
    return EmpiricalMeasure(moved, m.weights.copy())


def cocycle_average(ens: MatrixEnsemble, m: EmpiricalMeasure,
                    inner_samples: int = 0,
                    rng: Optional[np.random.Generator] = None) -> GrowthEstimate:
    """The norm-cocycle drift of the cloud: E_nu E_mu log(||g v|| / ||v||).

    Exact atom sum for finite support; ``inner_samples`` Monte Carlo draws
    per evaluation otherwise.  The error bar treats cloud points as the
    repetition unit (weighted effective sample size), which understates the
    error for strongly autocorrelated occupation clouds.
    """
    if m.size == 0:
        raise ValueError("empty cloud")
    if ens.dim != m.ambient_dim:
        raise ValueError("dimension mismatch between ensemble and cloud")
    per_point = np.zeros(m.size)
    if ens.is_finite:
        for w, g in zip(ens.weights, ens.atoms):
            per_point += w * np.log(np.linalg.norm(m.points @ g.T, axis=1))
    else:
        if rng is None or inner_samples < 1:
            raise ValueError("sampler ensembles need rng and inner_samples >= 1")
        for _ in range(inner_samples):
            g = ens.sample(rng)
            per_point += np.log(np.linalg.norm(m.points @ g.T, axis=1))
        per_point /= inner_samples
    value = float(np.dot(m.weights, per_point))
    n_eff = 1.0 / float(np.sum(m.weights**2))
    var = float(np.dot(m.weights, (per_point - value) ** 2))
    stderr = math.sqrt(var / max(n_eff, 1.0))
    return GrowthEstimate(value, stderr, 1, max(int(round(n_eff)), 1))


def _dictionary(dim: int, dict_size: int, dict_seed: int):
    rng = spawn_rng(dict_seed, 77)
    centers = canonicalize_rows(rng.normal(size=(dict_size, dim)))
    radii = np.array([DICT_RADII[i % len(DICT_RADII)] for i in range(dict_size)])
    return centers, radii


def _dict_integrals(m: EmpiricalMeasure, centers: np.ndarray,
                    radii: np.ndarray) -> np.ndarray:
    cos = np.clip(m.points @ centers.T, -1.0, 1.0)
    dist = np.sqrt(np.maximum(0.0, 1.0 - cos * cos))
    phi = np.maximum(0.0, 1.0 - dist / radii[None, :])
    return m.weights @ phi


def discrepancy(m1: EmpiricalMeasure, m2: EmpiricalMeasure,
                dict_size: int = 64, dict_seed: int = 0) -> float:
    """Bounded-Lipschitz surrogate for the weak distance of two clouds:
    the largest integral gap over a fixed seeded dictionary of bump
    functions max(0, 1 - proj_distance(., p)/r)."""
    if m1.ambient_dim != m2.ambient_dim:
        raise ValueError("clouds live in different dimensions")
    centers, radii = _dictionary(m1.ambient_dim, dict_size, dict_seed)
    i1 = _dict_integrals(m1, centers, radii)
    i2 = _dict_integrals(m2, centers, radii)
    return float(np.max(np.abs(i1 - i2)))


# ---------------------------------------------------------------------------
# tightness / escape


@dataclass(frozen=True)
class TightnessReport:
    radius_grid: list[float]
    escape_fractions: list[float]
    trend: str  # recurrent | escaping | unresolved
    first_third_mean: float
    last_third_mean: float
    trace: BundleTrace = field(repr=False)

    def escape_fraction(self, radius: float) -> float:
        for r, f in zip(self.radius_grid, self.escape_fractions):
            if abs(r - radius) <= 1e-12:
                return f
        raise KeyError(f"radius {radius} not in the grid")


# drift-trend thresholds (nats): empirical knobs, see the noise-floor tests
ESCAPE_DELTA = 2.0
RECURRENT_DELTA = 0.5


def tightness_diagnostic(bs: BlockSystem, ens: MatrixEnsemble, x: BundleState,
                         n: int, radius_grid, rng: np.random.Generator) -> TightnessReport:
    """Escape-time profile of one fibered trajectory.

    For each radius R the fraction of steps with drift above R; the trend
    compares mean drift over the first and last thirds of the trajectory.
    """
    trace = bundle_trajectory(bs, ens, x, n, rng)
    fractions = [float(np.mean(trace.drift > r)) for r in radius_grid]
    third = max(1, n // 3)
    first = float(np.mean(trace.drift[:third]))
    last = float(np.mean(trace.drift[-third:]))
    delta = last - first
    if delta > ESCAPE_DELTA:
        trend = "escaping"
    elif delta <= RECURRENT_DELTA:
        trend = "recurrent"
    else:
        trend = "unresolved"
    return TightnessReport(list(map(float, radius_grid)), fractions, trend, first, last, trace)


# ---------------------------------------------------------------------------
# regime classification


@dataclass(frozen=True)
class LiftClassification:
    regime: str   # contracting | purely-expanding | mixed | critical-indeterminate
    alpha_bar: GrowthEstimate
    lambda1_W: Optional[GrowthEstimate]
    beta_levels_W: list[float]
    verdict: str  # unique-lift-exists | lift-iff-complement |
    #               lift-iff-partial-complement | indeterminate
    witness: Optional[Subspace]
    notes: str = ""


def _quotient_part(bs: BlockSystem, space: Subspace) -> np.ndarray:
    """Rows = images of the basis of ``space`` in quotient coordinates."""
    return (bs.adapted_basis.T @ space.basis)[bs.r:, :].T


def _embed_in_W(bs: BlockSystem, sub_of_w: Subspace) -> Subspace:
    """A subspace of W given in restricted coordinates, as an ambient one."""
    if sub_of_w.dim == 0:
        return Subspace.zero(bs.ambient)
    return Subspace(bs.adapted_basis[:, : bs.r] @ sub_of_w.basis)


def _witness_candidates(bs: BlockSystem, ens: MatrixEnsemble,
                        base_measure: EmpiricalMeasure, n: int,
                        seed: int) -> list[Subspace]:
    """Invariant subspaces that could carry a lift: closures of the seed
    menu plus the closure of the span of a converged occupation cloud."""
    if not ens.is_finite:
        return []
    cands = candidate_invariant_subspaces(ens, n, child_seed(seed, 61))
    theta0 = base_measure.points[int(np.argmax(base_measure.weights))]
    start = join_state(BundleState(theta0, np.zeros(bs.r)), bs)
    try:
        cloud = birkhoff_empirical(ens, start, n, n // 2, spawn_rng(seed, 62))
        tail = cloud.support_span(1e-8)
        closure = find_invariant_subspace(
            ens, [tail.basis[:, j] for j in range(tail.dim)]
        )
        if 0 < closure.dim:
            cands.append(closure)
    except (ValueError, FloatingPointError, RuntimeError):
        pass
    return cands


def _find_witness(bs: BlockSystem, ens: MatrixEnsemble,
                  base_measure: EmpiricalMeasure, required_core: Subspace,
                  n: int, seed: int) -> Optional[Subspace]:
    """An invariant subspace whose intersection with W is exactly the
    required core and whose quotient image spans the base support."""
    support = base_measure.support_span()
    best = None
    for cand in _witness_candidates(bs, ens, base_measure, n, seed):
        inter = cand.intersect(bs.invariant)
        if inter.dim != required_core.dim:
            continue
        if inter.dim > 0 and principal_angle_distance(inter, required_core) > 1e-6:
            continue
        qpart = _quotient_part(bs, cand)
        if np.linalg.norm(qpart) < 1e-12:
            continue
        qspan = rank_span(qpart, 1e-8)
        if qspan.dim != support.dim:
            continue
        if principal_angle_distance(qspan, support) > 1e-6:
            continue
        if best is None or cand.dim < best.dim:
            best = cand
    return best


def classify_regime(bs: BlockSystem, ens: MatrixEnsemble,
                    base_measure: EmpiricalMeasure, n: int, reps: int,
                    seed: int, sigmas: float = 3.0) -> LiftClassification:
    """Place the pair (base stationary cloud, invariant subspace) in the
    contraction/expansion trichotomy and report the lift verdict.

    The cocycle average of the base cloud is compared against the growth
    levels of the restricted ensemble; any comparison closer than
    ``sigmas`` combined standard errors downgrades the answer to
    critical-indeterminate.  Expanding verdicts search for the invariant
    witness subspace required for a lift to exist.
    """
    if base_measure.ambient_dim != bs.quotient_dim:
        raise ValueError("base cloud must live on the quotient projective space")
    alpha = cocycle_average(quotient_ensemble(bs, ens), base_measure)
    try:
        report_w: FkhReport = fkh_estimate(
            restrict_to_invariant(bs, ens), n, reps, child_seed(seed, 60)
        )
    except (FiltrationError, ValueError, RuntimeError) as exc:
        return LiftClassification(
            regime="critical-indeterminate", alpha_bar=alpha, lambda1_W=None,
            beta_levels_W=[], verdict="indeterminate",
            witness=None, notes=f"filtration estimation failed: {exc}",
        )
    betas = report_w.estimates
    for est in betas:
        if abs(alpha.value - est.value) <= sigmas * combined_stderr(alpha, est):
            return LiftClassification(
                regime="critical-indeterminate", alpha_bar=alpha,
                lambda1_W=betas[0], beta_levels_W=[e.value for e in betas],
                verdict="indeterminate", witness=None,
                notes="cocycle average not separated from a growth level of W",
            )
    levels = [e.value for e in betas]
    if alpha.value > levels[0]:
        return LiftClassification(
            regime="contracting", alpha_bar=alpha, lambda1_W=betas[0],
            beta_levels_W=levels, verdict="unique-lift-exists", witness=None,
            notes=report_w.method_notes,
        )
    if alpha.value < levels[-1]:
        witness = _find_witness(bs, ens, base_measure, Subspace.zero(bs.ambient),
                                n, child_seed(seed, 63))
        return LiftClassification(
            regime="purely-expanding", alpha_bar=alpha, lambda1_W=betas[0],
            beta_levels_W=levels, verdict="lift-iff-complement", witness=witness,
            notes="witness found" if witness is not None else "no witness found",
        )
    # smallest level still above alpha (0-based j0 = 1-based level j); the
    # witness must meet W exactly in the flag space below that level
    j0 = max(i for i, lv in enumerate(levels) if lv > alpha.value)
    core = _embed_in_W(bs, report_w.space_below(j0 + 1))
    witness = _find_witness(bs, ens, base_measure, core, n, child_seed(seed, 64))
    return LiftClassification(
        regime="mixed", alpha_bar=alpha, lambda1_W=betas[0],
        beta_levels_W=levels, verdict="lift-iff-partial-complement",
        witness=witness,
        notes="witness found" if witness is not None else "no witness found",
    )


# ---------------------------------------------------------------------------
# uniqueness probe


@dataclass(frozen=True)
class UniquenessReport:
    discrepancies: np.ndarray = field(repr=False)  # (k, k) pairwise
    max_discrepancy: float = 0.0


def uniqueness_probe(bs: BlockSystem, ens: MatrixEnsemble, starts, n: int,
                     seed: int, burn_in: Optional[int] = None,
                     dict_size: int = 64, dict_seed: int = 0) -> UniquenessReport:
    """Occupation clouds from several chart starts and their pairwise
    weak-distance surrogates; a small maximum backs uniqueness of the lift."""
    starts = list(starts)
    if len(starts) < 2:
        raise ValueError("need at least two starts")
    if burn_in is None:
        burn_in = n // 10
    clouds = [
        birkhoff_empirical(ens, join_state(s, bs), n, burn_in, spawn_rng(seed, i))
        for i, s in enumerate(starts)
    ]
    k = len(clouds)
    mat = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            mat[i, j] = mat[j, i] = discrepancy(clouds[i], clouds[j],
                                                dict_size, dict_seed)
    return UniquenessReport(mat, float(mat.max()))
