"""Driving measures on GL(d, R): definition, sampling, and the algebra of
derived ensembles (transpose, block restriction/quotient, exterior powers,
affine and semisimple-times-unipotent constructions).

An ensemble is either finitely supported (stacked atom array + weights) or
sampler-defined (a callable drawing one matrix per call from a Generator).
Finite support is the fully featured path; samplers cover continuous laws
and support every trajectory-based estimator through :func:`draw_stack`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .estimates import GrowthEstimate, from_samples
from .linalg import (
    LinAlgError,
    Subspace,
    gauge_N,
    operator_norm,
    wedge_index,
    wedge_power,
)

# |det g| must exceed this times ||g||^d for an atom to count as invertible
INVERTIBILITY_TOL = 1e-12


class EnsembleError(ValueError):
    """Invalid ensemble definition or an invariance violation."""


@dataclass(frozen=True)
class MatrixEnsemble:
    """A probability measure on invertible d x d real matrices.

    Exactly one of (``weights``, ``atoms``) / ``sampler`` is populated.
    ``builder`` records a registered constructor call so that generated
    families round-trip through JSON definition files.
    """

    dim: int
    weights: Optional[np.ndarray] = None
    atoms: Optional[np.ndarray] = None
    sampler: Optional[Callable[[np.random.Generator], np.ndarray]] = field(
        default=None, repr=False
    )
    label: str = ""
    builder: Optional[dict] = None

    def __post_init__(self):
        if (self.atoms is None) == (self.sampler is None):
            raise EnsembleError("ensemble needs atoms+weights or a sampler, not both")
        if self.atoms is not None:
            atoms = np.ascontiguousarray(np.asarray(self.atoms, dtype=float))
            if atoms.ndim != 3 or atoms.shape[1:] != (self.dim, self.dim):
                raise EnsembleError(f"atoms must have shape (k, {self.dim}, {self.dim})")
            if not np.all(np.isfinite(atoms)):
                raise EnsembleError("non-finite atom entries")
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (atoms.shape[0],):
                raise EnsembleError("one weight per atom required")
            if np.any(w <= 0):
                raise EnsembleError("weights must be positive")
            if abs(w.sum() - 1.0) > 1e-12:
                raise EnsembleError("weights must sum to 1 within 1e-12")
            for g in atoms:
                # relative smallest-singular-value test: a determinant-based
                # inequality misreads high-dimensional exterior-power atoms
                # whose det is 1 while ||g||^dim is astronomically large
                s = np.linalg.svd(g, compute_uv=False)
                if s[-1] <= INVERTIBILITY_TOL * s[0]:
                    raise EnsembleError("atom is numerically singular")
            object.__setattr__(self, "atoms", atoms)
            object.__setattr__(self, "weights", w / w.sum())

    @property
    def is_finite(self) -> bool:
        return self.atoms is not None

    @property
    def n_atoms(self) -> int:
        return 0 if self.atoms is None else self.atoms.shape[0]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One matrix distributed per the ensemble, advancing ``rng``."""
        if self.is_finite:
            k = rng.choice(self.n_atoms, p=self.weights)
            return self.atoms[k]
        g = np.asarray(self.sampler(rng), dtype=float)
        if g.shape != (self.dim, self.dim) or not np.all(np.isfinite(g)):
            raise EnsembleError("sampler produced a non-conforming matrix")
        gauge_N(g)  # raises when singular
        return g

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if not self.is_finite:
            raise EnsembleError("index sampling needs finite support")
        return rng.choice(self.n_atoms, size=n, p=self.weights).astype(np.int64)


def finite_ensemble(atoms, weights=None, label: str = "", builder=None) -> MatrixEnsemble:
    """Finite-support ensemble; uniform weights when none are given."""
    atoms = np.asarray(atoms, dtype=float)
    if atoms.ndim == 2:
        atoms = atoms[None, :, :]
    k = atoms.shape[0]
    if weights is None:
        weights = np.full(k, 1.0 / k)
    return MatrixEnsemble(dim=atoms.shape[1], weights=np.asarray(weights, dtype=float),
                          atoms=atoms, label=label, builder=builder)


def dirac(g, label: str = "") -> MatrixEnsemble:
    return finite_ensemble(np.asarray(g, dtype=float)[None, :, :], [1.0], label=label)


def draw_stack(ens: MatrixEnsemble, rng: np.random.Generator, n: int):
    """(atom stack, index array) feeding one length-n trajectory kernel.

    Finite support reuses the stored stack; samplers materialize n draws.
    """
    if ens.is_finite:
        return ens.atoms, ens.sample_indices(rng, n)
    mats = np.stack([ens.sample(rng) for _ in range(n)])
    return np.ascontiguousarray(mats), np.arange(n, dtype=np.int64)


def first_moment(ens: MatrixEnsemble, n_samples: int = 10_000,
                 rng: Optional[np.random.Generator] = None) -> GrowthEstimate:
    """E log N(g): exact weighted sum over finite support, Monte Carlo with
    a standard error for sampler ensembles."""
    if ens.is_finite:
        val = float(np.dot(ens.weights, [math.log(gauge_N(g)) for g in ens.atoms]))
        return GrowthEstimate(val, 0.0, 1, 1)
    if rng is None:
        raise EnsembleError("sampler ensembles need an rng for first_moment")
    vals = [math.log(gauge_N(ens.sample(rng))) for _ in range(n_samples)]
    return from_samples(vals, 1)


def transpose_ensemble(ens: MatrixEnsemble) -> MatrixEnsemble:
    """Image of the ensemble under the transpose map, weights preserved."""
    label = f"{ens.label}^t" if ens.label else "transpose"
    if ens.is_finite:
        return MatrixEnsemble(dim=ens.dim, weights=ens.weights.copy(),
                              atoms=np.ascontiguousarray(ens.atoms.transpose(0, 2, 1)),
                              label=label)
    base = ens.sampler
    return MatrixEnsemble(dim=ens.dim, sampler=lambda rng: np.asarray(base(rng)).T,
                          label=label)


def wedge_ensemble(ens: MatrixEnsemble, k: int) -> MatrixEnsemble:
    """Atomwise/samplewise k-th exterior power."""
    if not 1 <= k <= ens.dim:
        raise EnsembleError(f"wedge order {k} out of range 1..{ens.dim}")
    label = f"wedge{k}({ens.label})" if ens.label else f"wedge{k}"
    if ens.is_finite:
        watoms = np.stack([wedge_power(g, k) for g in ens.atoms])
        return MatrixEnsemble(dim=watoms.shape[1], weights=ens.weights.copy(),
                              atoms=watoms, label=label)
    base = ens.sampler
    newdim = math.comb(ens.dim, k)
    return MatrixEnsemble(dim=newdim, sampler=lambda rng: wedge_power(base(rng), k),
                          label=label)


# ---------------------------------------------------------------------------
# block systems


@dataclass(frozen=True)
class BlockSystem:
    """An invariant subspace W < R^d with an adapted orthogonal basis.

    The first r columns of ``adapted_basis`` span W; conjugating any matrix
    of the driving ensemble into this basis must leave the lower-left
    (d-r) x r block below ``block_tol`` times the matrix norm.
    """

    invariant: Subspace
    adapted_basis: np.ndarray = field(repr=False)
    block_tol: float = 1e-9

    def __post_init__(self):
        q = np.asarray(self.adapted_basis, dtype=float)
        d = self.invariant.ambient_dim
        if q.shape != (d, d):
            raise EnsembleError("adapted basis must be square of the ambient dimension")
        if np.max(np.abs(q.T @ q - np.eye(d))) > 1e-10:
            raise EnsembleError("adapted basis is not orthogonal")
        w_cols = Subspace(q[:, : self.invariant.dim])
        from .linalg import principal_angle_distance

        if principal_angle_distance(w_cols, self.invariant) > 1e-9:
            raise EnsembleError("first columns of the adapted basis must span W")
        object.__setattr__(self, "adapted_basis", q)

    @property
    def ambient(self) -> int:
        return self.invariant.ambient_dim

    @property
    def r(self) -> int:
        return self.invariant.dim

    @property
    def quotient_dim(self) -> int:
        return self.ambient - self.r

    @staticmethod
    def coordinate(ambient: int, r: int, block_tol: float = 0.0) -> "BlockSystem":
        """W = span(e_1..e_r) with the identity as adapted basis."""
        return BlockSystem(Subspace.span_of_coords(ambient, range(r)),
                           np.eye(ambient), block_tol)

    @staticmethod
    def from_subspace(w: Subspace, block_tol: float = 1e-9) -> "BlockSystem":
        comp = w.complement()
        q = np.hstack([w.basis, comp.basis])
        return BlockSystem(w, q, block_tol)

    def to_adapted(self, g) -> np.ndarray:
        q = self.adapted_basis
        return q.T @ np.asarray(g, dtype=float) @ q

    def blocks(self, g):
        """(A, B, C) of the conjugated matrix; raises when the lower-left
        leak exceeds ``block_tol`` relative to ||g||."""
        m = self.to_adapted(g)
        r = self.r
        leak = float(np.linalg.norm(m[r:, :r], 2)) if 0 < r < self.ambient else 0.0
        if leak > self.block_tol * max(operator_norm(g), 1e-300):
            raise EnsembleError(
                f"invariance violation: lower-left block norm {leak:.3e}"
            )
        return m[:r, :r], m[:r, r:], m[r:, r:]

    def block_stacks(self, ens: MatrixEnsemble):
        """Stacked (A, B, C) blocks of every atom, validated."""
        if not ens.is_finite:
            raise EnsembleError("block stacks need finite support")
        ab, bb, cb = [], [], []
        for g in ens.atoms:
            a, b, c = self.blocks(g)
            ab.append(a)
            bb.append(b)
            cb.append(c)
        return (np.ascontiguousarray(np.stack(ab)),
                np.ascontiguousarray(np.stack(bb)),
                np.ascontiguousarray(np.stack(cb)))


def restrict_to_invariant(bs: BlockSystem, ens: MatrixEnsemble) -> MatrixEnsemble:
    """The r x r ensemble of A-blocks (action on W)."""
    label = f"{ens.label}|W" if ens.label else "restricted"
    if ens.is_finite:
        a, _, _ = bs.block_stacks(ens)
        return MatrixEnsemble(dim=bs.r, weights=ens.weights.copy(), atoms=a, label=label)
    base = ens.sampler
    return MatrixEnsemble(dim=bs.r, sampler=lambda rng: bs.blocks(base(rng))[0], label=label)


def quotient_ensemble(bs: BlockSystem, ens: MatrixEnsemble) -> MatrixEnsemble:
    """The (d-r) x (d-r) ensemble of C-blocks (action on V/W)."""
    label = f"{ens.label}|V/W" if ens.label else "quotient"
    if ens.is_finite:
        _, _, c = bs.block_stacks(ens)
        return MatrixEnsemble(dim=bs.quotient_dim, weights=ens.weights.copy(),
                              atoms=c, label=label)
    base = ens.sampler
    return MatrixEnsemble(dim=bs.quotient_dim,
                          sampler=lambda rng: bs.blocks(base(rng))[2], label=label)


# ---------------------------------------------------------------------------
# constructions


def build_affine_embedding(linear: MatrixEnsemble, translations):
    """Embed x -> A x + b into GL(d+1) as [[A, b], [0, 1]].

    ``translations`` is one vector (shared by all atoms), one vector per
    atom, or a callable(rng) -> vector which makes the result sampler-kind.
    Returns the embedded ensemble and the BlockSystem for W = R^d x {0},
    whose lower-left block vanishes identically.
    """
    d = linear.dim
    bs = BlockSystem.coordinate(d + 1, d, block_tol=0.0)
    label = f"affine({linear.label})" if linear.label else "affine"

    def embed(a, b):
        g = np.zeros((d + 1, d + 1))
        g[:d, :d] = a
        g[:d, d] = b
        g[d, d] = 1.0
        return g

    if callable(translations):
        if not linear.is_finite:
            base = linear.sampler
            samp = lambda rng: embed(base(rng), np.asarray(translations(rng), dtype=float))
        else:
            atoms, weights = linear.atoms, linear.weights

            def samp(rng, atoms=atoms, weights=weights):
                k = rng.choice(len(weights), p=weights)
                return embed(atoms[k], np.asarray(translations(rng), dtype=float))

        return MatrixEnsemble(dim=d + 1, sampler=samp, label=label), bs

    trans = np.asarray(translations, dtype=float)
    if not linear.is_finite:
        raise EnsembleError("fixed translations need a finite linear part")
    if trans.ndim == 1:
        trans = np.tile(trans, (linear.n_atoms, 1))
    if trans.shape != (linear.n_atoms, d):
        raise EnsembleError("one translation per atom required")
    atoms = np.stack([embed(a, b) for a, b in zip(linear.atoms, trans)])
    return MatrixEnsemble(dim=d + 1, weights=linear.weights.copy(), atoms=atoms,
                          label=label), bs


# SL2(C) inside SL4(R): J is the complex structure the atoms must commute with
J4 = np.array([
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
])


def complex_to_real4(m: np.ndarray) -> np.ndarray:
    """Realize a complex 2x2 matrix on R^4 = C^2 (coordinates x1+ix2, x3+ix4)."""
    out = np.empty((4, 4))
    for i in range(2):
        for j in range(2):
            w = m[i, j]
            out[2 * i:2 * i + 2, 2 * j:2 * j + 2] = [[w.real, -w.imag],
                                                     [w.imag, w.real]]
    return out


def build_sl2c_ensemble(atom_count: int = 4, seed: int = 2024,
                        lie_scale: float = 0.55) -> MatrixEnsemble:
    """Finite ensemble of SL2(C) elements realized in SL4(R).

    Two generic one-parameter elements exp(xi_1), exp(xi_2) (xi traceless
    complex, Gaussian) plus short random words in them; generically this
    generates a Zariski-dense subgroup.  Every atom commutes with J4 and has
    unit determinant (enforced by a scalar renormalization).
    """
    if atom_count < 2:
        raise EnsembleError("need at least two atoms")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(90,)))

    def random_element() -> np.ndarray:
        z = rng.normal(size=6) * lie_scale
        a, b, c = z[0] + 1j * z[1], z[2] + 1j * z[3], z[4] + 1j * z[5]
        xi = np.array([[a, b], [c, -a]])
        g = scipy.linalg.expm(complex_to_real4(xi))
        return g / abs(np.linalg.det(g)) ** 0.25

    gens = [random_element(), random_element()]
    atoms = list(gens)
    while len(atoms) < atom_count:
        length = int(rng.integers(2, 4))
        word = np.eye(4)
        for _ in range(length):
            word = gens[int(rng.integers(0, 2))] @ word
        atoms.append(word / abs(np.linalg.det(word)) ** 0.25)
    return finite_ensemble(np.stack(atoms), label=f"sl2c[{atom_count},{seed}]",
                           builder={"name": "sl2c",
                                    "params": {"atom_count": atom_count, "seed": seed,
                                               "lie_scale": lie_scale}})


# ---------------------------------------------------------------------------
# definition files

BUILDERS: dict[str, Callable[..., MatrixEnsemble]] = {
    "sl2c": build_sl2c_ensemble,
}


def register_builder(name: str, fn: Callable[..., MatrixEnsemble]) -> None:
    BUILDERS[name] = fn


def ensemble_to_json(ens: MatrixEnsemble) -> dict:
    if ens.builder is not None:
        return {"dim": ens.dim, "label": ens.label, "builder": ens.builder}
    if not ens.is_finite:
        raise EnsembleError("sampler ensembles without a builder cannot be serialized")
    return {
        "dim": ens.dim,
        "label": ens.label,
        "atoms": [
            {"weight": float(w), "matrix": [float(x) for x in g.ravel()]}
            for w, g in zip(ens.weights, ens.atoms)
        ],
    }


def ensemble_from_json(doc: dict) -> MatrixEnsemble:
    if "builder" in doc:
        spec = doc["builder"]
        name = spec["name"]
        if name not in BUILDERS:
            raise EnsembleError(f"unknown ensemble builder {name!r}")
        return BUILDERS[name](**spec.get("params", {}))
    d = int(doc["dim"])
    weights, atoms = [], []
    for entry in doc["atoms"]:
        weights.append(float(entry["weight"]))
        flat = np.asarray(entry["matrix"], dtype=float)
        atoms.append(flat.reshape(d, d))
    return MatrixEnsemble(dim=d, weights=np.asarray(weights), atoms=np.stack(atoms),
                          label=doc.get("label", ""))


def save_ensemble(ens: MatrixEnsemble, path) -> None:
    with open(path, "w") as fh:
        json.dump(ensemble_to_json(ens), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_ensemble(path) -> MatrixEnsemble:
    with open(path) as fh:
        return ensemble_from_json(json.load(fh))
