"""Designed ensembles with known exponents, filtrations and witnesses.

These are the shipped examples every diagnostic is calibrated against:
each constructor documents the designed ground truth (expected growth
rates, invariant subspaces) so tests can assert against construction
rather than against another estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import (
    BlockSystem,
    MatrixEnsemble,
    build_affine_embedding,
    finite_ensemble,
    register_builder,
)
from .linalg import Subspace
from .parallel import spawn_rng


def scalar_zero_exponent() -> MatrixEnsemble:
    """dim-1 atoms {2, 1/2} with equal weights: E log = 0."""
    return finite_ensemble(np.array([[[2.0]], [[0.5]]]), label="scalar{2,1/2}")


def rotation2d(angle: float = 1.0) -> MatrixEnsemble:
    c, s = math.cos(angle), math.sin(angle)
    return finite_ensemble(np.array([[[c, -s], [s, c]]]), label=f"rot({angle})")


def isometry_ensemble(dim: int = 3, n_atoms: int = 3, seed: int = 5) -> MatrixEnsemble:
    """Random orthogonal atoms: the whole spectrum vanishes."""
    rng = spawn_rng(seed, 40)
    atoms = []
    for _ in range(n_atoms):
        q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
        atoms.append(q * np.sign(np.diag(r)))
    return finite_ensemble(np.stack(atoms), label=f"isometries[{dim}]")


def random_invertible_pair(dim: int = 3, seed: int = 11,
                           max_gauge: float = 25.0) -> MatrixEnsemble:
    """Two seeded Gaussian atoms, redrawn until decently conditioned."""
    from .linalg import gauge_N

    rng = spawn_rng(seed, 42)
    atoms = []
    while len(atoms) < 2:
        g = rng.normal(size=(dim, dim))
        try:
            if gauge_N(g) <= max_gauge:
                atoms.append(g)
        except Exception:
            continue
    return finite_ensemble(np.stack(atoms), label=f"gauss-pair[{dim},{seed}]")


def irreducible_proximal_2x2() -> MatrixEnsemble:
    """Positive atoms acting strongly irreducibly and proximally on R^2."""
    atoms = np.array([
        [[2.0, 1.0], [1.0, 1.0]],
        [[1.0, 1.0], [1.0, 2.0]],
    ])
    return finite_ensemble(atoms, label="positive-pair")


def affine_scalar(elog_a: float, spread: float = 0.5):
    """Scalar affine recursion t -> a t + b embedded in GL(2).

    |a| takes the two values exp(elog_a +- spread) with equal weights, so
    E log|a| = elog_a by design; the translations +1/-1 rule out a common
    fixed point.  Returns (ensemble, block system); the invariant line is
    the first coordinate and the designed fiber growth rate is elog_a.
    """
    linear = finite_ensemble(
        np.array([[[math.exp(elog_a + spread)]], [[math.exp(elog_a - spread)]]]),
        label=f"scalar(Elog={elog_a:+.2f})",
    )
    return build_affine_embedding(linear, np.array([[1.0], [-1.0]]))


def _rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class DesignedSystem:
    """An ensemble with its block system and construction ground truth."""

    ens: MatrixEnsemble
    bs: BlockSystem
    truth: dict


def expanding_with_complement() -> DesignedSystem:
    """Block-diagonal ensemble on R^4 with an invariant rotating complement.

    W = span(e1, e2) carries the two growth levels +0.5 and +0.2; the
    complement W' = span(e3, e4) is a conformal rotation-scale block with
    rate -0.1 = the quotient cocycle average, so the base average sits
    strictly below every growth level of W (purely expanding) and W' is the
    witness carrying the unique lift.  The blocks are exactly coordinate-
    aligned on purpose: an expanding invariant subspace is numerically
    repelling, so any basis-rotation rounding would eject trajectories
    started on P(W').
    """
    a1 = [math.exp(0.5 + 0.4), math.exp(0.5 - 0.4)]
    a2 = [math.exp(0.2 + 0.3), math.exp(0.2 - 0.3)]
    s = [math.exp(-0.1 + 0.25), math.exp(-0.1 - 0.25)]
    phi = [0.9, -1.3]
    atoms = np.zeros((2, 4, 4))
    for i in range(2):
        atoms[i][:2, :2] = np.diag([a1[i], a2[i]])
        atoms[i][2:, 2:] = s[i] * _rotation_matrix(phi[i])
    ens = finite_ensemble(atoms, label="complement-blocks")
    bs = BlockSystem.coordinate(4, 2)
    return DesignedSystem(ens, bs, {
        "beta_W": [0.5, 0.2], "alpha_quotient": -0.1,
        "w_prime": Subspace.span_of_coords(4, [2, 3]),
    })


def mixed_with_partial_complement() -> DesignedSystem:
    """Upper-triangular triple with growth levels of W straddling the
    quotient average.

    W = span(e1, e2) has levels +0.3 (on e1) and -0.3 (on e2); the quotient
    rate is 0, so a lift requires an invariant subspace meeting W exactly
    in the slow layer span(e2).  W' = span(e2, e3) is that witness, and the
    fiber recursion inside it contracts on average at -0.3.
    """
    a = [math.exp(0.3 + 0.4), math.exp(0.3 - 0.4)]
    b = [math.exp(-0.3 + 0.3), math.exp(-0.3 - 0.3)]
    c = [math.exp(0.0 + 0.35), math.exp(0.0 - 0.35)]
    coupling = [1.0, -1.0]
    atoms = np.zeros((2, 3, 3))
    for i in range(2):
        atoms[i] = [[a[i], 0.0, 0.0],
                    [0.0, b[i], coupling[i]],
                    [0.0, 0.0, c[i]]]
    ens = finite_ensemble(atoms, label="mixed-triple")
    bs = BlockSystem.coordinate(3, 2)
    return DesignedSystem(ens, bs, {
        "beta_W": [0.3, -0.3], "alpha_quotient": 0.0,
        "w_prime": Subspace.span_of_coords(3, [1, 2]),
        "f2_W_ambient": Subspace.span_of_coords(3, [1]),
    })


def two_block_floor() -> DesignedSystem:
    """Diagonal two-block ensemble whose smallest growth level is -0.2."""
    a = [math.exp(-0.2 + 0.5), math.exp(-0.2 - 0.5)]
    c = [math.exp(0.1 + 0.3), math.exp(0.1 - 0.3)]
    atoms = np.stack([np.diag([a[i], c[i]]) for i in range(2)])
    ens = finite_ensemble(atoms, label="two-block-floor")
    return DesignedSystem(ens, BlockSystem.coordinate(2, 1),
                          {"beta_min": -0.2, "beta_levels": [0.1, -0.2]})


def transpose_support_example() -> DesignedSystem:
    """Upper-triangular pair whose transpose filtration is explicit.

    The fast direction e1 (rate +0.25) dominates the quotient rate -0.25;
    the transposed (lower-triangular) ensemble preserves span(e2) with the
    slow rate, so the dual support space at the top level is span(e1) and
    top-average occupation clouds must concentrate there.
    """
    a = [math.exp(0.25 + 0.4), math.exp(0.25 - 0.4)]
    c = [math.exp(-0.25 + 0.3), math.exp(-0.25 - 0.3)]
    coupling = [1.0, -1.0]
    atoms = np.zeros((2, 2, 2))
    for i in range(2):
        atoms[i] = [[a[i], coupling[i]], [0.0, c[i]]]
    ens = finite_ensemble(atoms, label="transpose-support")
    return DesignedSystem(ens, BlockSystem.coordinate(2, 1),
                          {"v1": Subspace.span_of_coords(2, [0])})


register_builder("scalar_zero_exponent", lambda: scalar_zero_exponent())
register_builder("rotation2d", rotation2d)
register_builder("isometries", isometry_ensemble)
register_builder("gauss_pair", random_invertible_pair)
register_builder("positive_pair", lambda: irreducible_proximal_2x2())
register_builder("affine_scalar", lambda elog_a, spread=0.5: affine_scalar(elog_a, spread)[0])
register_builder("complement_blocks", lambda: expanding_with_complement().ens)
register_builder("mixed_triple", lambda: mixed_with_partial_complement().ens)
register_builder("two_block_floor", lambda: two_block_floor().ens)
register_builder("transpose_support", lambda: transpose_support_example().ens)
