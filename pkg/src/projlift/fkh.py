"""Deterministic growth filtration of a matrix ensemble.

For a measure with finite first moment there is a flag of invariant
subspaces V = F_1 > F_2 > ... > F_k > 0 and rates beta_1 > ... > beta_k
(Furstenberg--Kifer--Hennion) such that vectors in F_i \\ F_{i+1} grow at
rate beta_i.  The filtration is not computable from generic trajectories
alone (a generic vector only ever shows beta_1), so this module searches
the invariant-subspace lattice first (orbit-span closure from a seed menu)
and measures exponents second.  Completeness of the search is only
guaranteed for designed ensembles; that limitation is inherent and is
surfaced in ``method_notes``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ensembles import BlockSystem, MatrixEnsemble, restrict_to_invariant, transpose_ensemble
from .estimates import GrowthEstimate, combined_stderr
from .linalg import Subspace, principal_angle_distance, rank_span
from .lyapunov import top_exponent
from .parallel import child_seed, spawn_rng

NESTING_ANGLE_TOL = 1e-6


class ClosureError(RuntimeError):
    """Orbit-span closure failed to stabilize within the word budget."""


class FiltrationError(RuntimeError):
    """The measured exponents/subspaces are mutually inconsistent."""


def find_invariant_subspace(ens: MatrixEnsemble, seeds, tol: float = 1e-8,
                            max_words: int = 64) -> Subspace:
    """Smallest subspace containing ``seeds`` and closed under the support.

    Iterates span(S u g S) until the numerical rank stabilizes, then
    verifies closure: every atom maps every basis vector within
    tol * ||g b|| of the subspace.
    """
    if not ens.is_finite:
        raise ValueError("orbit-span closure needs a finite-support ensemble")
    seeds = [np.asarray(s, dtype=float) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed vector")
    space = rank_span(seeds, tol)
    for _ in range(max_words):
        cols = [space.basis[:, j] for j in range(space.dim)]
        images = [g @ b for g in ens.atoms for b in cols]
        grown = rank_span(cols + images, tol)
        if grown.dim == space.dim:
            closed = all(
                grown.distance_to(g @ b) <= tol * np.linalg.norm(g @ b)
                for g in ens.atoms
                for b in (grown.basis[:, j] for j in range(grown.dim))
            )
            if closed:
                return grown
        space = grown
        if space.dim == ens.dim:
            return space
    raise ClosureError(f"no stabilization within {max_words} iterations")


@dataclass(frozen=True)
class FkhReport:
    """Estimated growth filtration: strictly decreasing exponents beta_i and
    the nested invariant subspaces carrying them (F_1 = full space)."""

    exponents: list[float]
    filtration: list[Subspace]
    estimates: list[GrowthEstimate] = field(repr=False)
    method_notes: str = ""

    def __post_init__(self):
        if len(self.exponents) != len(self.filtration):
            raise FiltrationError("exponent/filtration length mismatch")
        dims = [s.dim for s in self.filtration]
        if any(d2 >= d1 for d1, d2 in zip(dims, dims[1:])):
            raise FiltrationError(f"filtration dims not strictly decreasing: {dims}")
        if any(b2 >= b1 for b1, b2 in zip(self.exponents, self.exponents[1:])):
            raise FiltrationError("exponents not strictly decreasing")
        for big, small in zip(self.filtration, self.filtration[1:]):
            if not big.contains(small, NESTING_ANGLE_TOL):
                raise FiltrationError("filtration is not nested")

    @property
    def levels(self) -> int:
        return len(self.exponents)

    def space_below(self, i: int) -> Subspace:
        """F_{i+1}, with F_{levels+1} = 0 by convention (i is 1-based)."""
        if i < self.levels:
            return self.filtration[i]
        return Subspace.zero(self.filtration[0].ambient_dim)


def _word_eigvector_seeds(ens: MatrixEnsemble, max_len: int = 3,
                          max_words: int = 120) -> list[np.ndarray]:
    """Eigenvector directions of short words in the support atoms; complex
    pairs contribute their real and imaginary parts."""
    atoms = list(ens.atoms)
    words: list[np.ndarray] = []
    for length in range(1, max_len + 1):
        for combo in itertools.product(range(len(atoms)), repeat=length):
            w = atoms[combo[0]]
            for i in combo[1:]:
                w = atoms[i] @ w
            words.append(w)
            if len(words) >= max_words:
                break
        if len(words) >= max_words:
            break
    seeds = []
    for w in words:
        vals, vecs = np.linalg.eig(w)
        for j, lam in enumerate(vals):
            v = vecs[:, j]
            if abs(lam.imag) <= 1e-9 * max(abs(lam), 1.0):
                seeds.append(np.real(v))
            else:
                seeds.append(np.real(v))
                seeds.append(np.imag(v))
    return [s / np.linalg.norm(s) for s in seeds if np.linalg.norm(s) > 1e-12]


def _singular_direction_seeds(ens: MatrixEnsemble, n: int, seed: int) -> list[np.ndarray]:
    """Extremal singular directions of sampled products at a few horizons."""
    seeds = []
    for h_idx, horizon in enumerate(h for h in (100, 1000, 10_000) if h <= max(n, 100)):
        rng = spawn_rng(seed, 20_000 + h_idx)
        idx = ens.sample_indices(rng, horizon)
        m, _ = kernels.left_product(ens.atoms, idx)
        u, _, vh = np.linalg.svd(m)
        seeds.extend([u[:, 0], u[:, -1], vh[0], vh[-1]])
    return seeds


def _dedupe(spaces: list[Subspace]) -> list[Subspace]:
    kept: list[Subspace] = []
    for s in spaces:
        duplicate = any(
            s.dim == t.dim and principal_angle_distance(s, t) < 1e-8 for t in kept
        )
        if not duplicate:
            kept.append(s)
    return kept


def candidate_invariant_subspaces(ens: MatrixEnsemble, n: int, seed: int,
                                  extra_seeds=(), span_tol: float = 1e-8,
                                  max_words: int = 64) -> list[Subspace]:
    """Proper invariant subspaces reachable from the standard seed menu:
    basis vectors, eigenvectors of words up to length three, extremal
    singular directions of medium-horizon products, and caller extras."""
    d = ens.dim
    menu: list[np.ndarray] = [np.eye(d)[i] for i in range(d)]
    menu += _word_eigvector_seeds(ens)
    menu += _singular_direction_seeds(ens, n, seed)
    menu += [np.asarray(v, dtype=float) for v in extra_seeds]
    found: list[Subspace] = []
    for v in menu:
        try:
            space = find_invariant_subspace(ens, [v], tol=span_tol, max_words=max_words)
        except ClosureError:
            continue
        if 0 < space.dim < d:
            found.append(space)
    return _dedupe(found)


def _restricted_top(ens: MatrixEnsemble, space: Subspace, n: int, reps: int,
                    seed: int, span_tol: float) -> GrowthEstimate:
    bs = BlockSystem.from_subspace(space, block_tol=max(1e-7, 10 * span_tol))
    return top_exponent(restrict_to_invariant(bs, ens), n, reps, seed)


def fkh_estimate(ens: MatrixEnsemble, n: int, reps: int, seed: int,
                 bs_hint: BlockSystem | None = None, merge_sigma: float = 4.0,
                 span_tol: float = 1e-8, max_words: int = 64) -> FkhReport:
    """Estimate the growth filtration of a finite-support ensemble.

    Candidate invariant subspaces come from orbit-span closures of a seed
    menu; each candidate's restricted top exponent is measured, exponent
    levels closer than ``merge_sigma`` combined standard errors are merged
    (their spans are joined), and levels are stacked top-down into a nested
    flag.  ``bs_hint`` contributes its invariant subspace to the menu.
    """
    if not ens.is_finite:
        raise ValueError("filtration estimation needs a finite-support ensemble")
    d = ens.dim
    extra = []
    if bs_hint is not None:
        extra = [bs_hint.invariant.basis[:, j] for j in range(bs_hint.invariant.dim)]
    candidates = candidate_invariant_subspaces(
        ens, n, child_seed(seed, 1), extra_seeds=extra, span_tol=span_tol,
        max_words=max_words,
    )
    top = top_exponent(ens, n, reps, child_seed(seed, 2))
    measured = [
        (s, _restricted_top(ens, s, n, reps, child_seed(seed, 3 + i), span_tol))
        for i, s in enumerate(candidates)
    ]

    filtration = [Subspace.full(d)]
    estimates = [top]
    notes = [f"{len(candidates)} candidate invariant subspaces"]
    current_space = filtration[0]
    current_est = top
    pool = list(measured)
    level_tag = 100
    while True:
        pool = [
            (s, e) for s, e in pool
            if current_space.contains(s, NESTING_ANGLE_TOL)
            and current_est.value - e.value > merge_sigma * combined_stderr(current_est, e)
        ]
        if not pool:
            break
        peak = max(pool, key=lambda se: se[1].value)
        group = [
            (s, e) for s, e in pool
            if peak[1].value - e.value <= merge_sigma * combined_stderr(peak[1], e)
        ]
        if len(group) == 1:
            merged_space, merged_est = group[0]
        else:
            cols = np.hstack([s.basis for s, _ in group])
            merged_space = rank_span(cols.T, span_tol)
            merged_est = _restricted_top(ens, merged_space, n, reps,
                                         child_seed(seed, level_tag), span_tol)
            notes.append(f"merged {len(group)} candidates at level {merged_est.value:+.4f}")
        level_tag += 1
        if merged_space.dim >= current_space.dim:
            raise FiltrationError(
                "merged level does not shrink the flag; exponent levels unresolved"
            )
        filtration.append(merged_space)
        estimates.append(merged_est)
        current_space, current_est = merged_space, merged_est
        pool = [(s, e) for s, e in pool if (s, e) not in group]
    return FkhReport(
        exponents=[e.value for e in estimates],
        filtration=filtration,
        estimates=estimates,
        method_notes="; ".join(notes),
    )


def transpose_dual_space(ens: MatrixEnsemble, r: int, n: int, reps: int,
                         seed: int, merge_sigma: float = 4.0) -> Subspace:
    """The dual support space at filtration level r of the ensemble.

    Computes the filtration of the transposed ensemble, finds the largest
    index r' whose transpose exponent is not below beta_r (up to combined
    error), and returns the orthogonal complement of the transpose space
    below r' intersected with F_r.  For r = 1 this is the subspace that
    carries every stationary mass with top cocycle average.
    """
    report_t = fkh_estimate(transpose_ensemble(ens), n, reps, child_seed(seed, 51),
                            merge_sigma=merge_sigma)
    if r == 1:
        f_r = Subspace.full(ens.dim)
        beta_r = report_t.estimates[0]  # transpose shares the top exponent
    else:
        report_mu = fkh_estimate(ens, n, reps, child_seed(seed, 52),
                                 merge_sigma=merge_sigma)
        if r > report_mu.levels:
            raise FiltrationError(
                f"level {r} exceeds detected filtration length {report_mu.levels}"
            )
        f_r = report_mu.filtration[r - 1]
        beta_r = report_mu.estimates[r - 1]
    r_prime = 1
    for i, est in enumerate(report_t.estimates, start=1):
        if est.value >= beta_r.value - merge_sigma * combined_stderr(est, beta_r):
            r_prime = i
    below = report_t.space_below(r_prime)
    perp = below.complement()
    if f_r.dim == ens.dim:
        return perp
    return perp.intersect(f_r)
