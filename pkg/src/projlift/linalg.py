"""Dense linear-algebra primitives: projective points, exterior powers,
tolerant span/rank machinery.

Everything here is a pure function on immutable inputs (arrays are never
mutated), so the whole module is thread-safe.  Double precision throughout;
operator norms go through singular values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

# Relative rank cutoff used whenever a caller does not pick its own.
DEFAULT_RANK_TOL = 1e-8


class LinAlgError(ValueError):
    """Raised on invalid numerical input (zero/non-finite vectors,
    singular matrices, dimension mismatches)."""


def _as_matrix(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2:
        raise LinAlgError(f"expected a matrix, got ndim={g.ndim}")
    if not np.all(np.isfinite(g)):
        raise LinAlgError("matrix has non-finite entries")
    return g


def _as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise LinAlgError(f"expected a vector, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise LinAlgError("vector has non-finite entries")
    return v


def proj_normalize(v) -> np.ndarray:
    """Canonical unit representative of the line through ``v``.

    Normalizes to Euclidean norm one and fixes the sign so that the
    coordinate of largest absolute value is strictly positive (ties broken
    by lowest index).  Idempotent, and invariant under ``v -> -v``.
    """
    v = _as_vector(v)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise LinAlgError("cannot projectivize the zero vector")
    u = v / n
    lead = int(np.argmax(np.abs(u)))
    if u[lead] < 0:
        u = -u
    return u


def canonicalize_rows(points: np.ndarray) -> np.ndarray:
    """Vectorized ``proj_normalize`` over the rows of an (N, d) array."""
    pts = np.asarray(points, dtype=float)
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise LinAlgError("zero row cannot be projectivized")
    pts = pts / norms
    lead = np.argmax(np.abs(pts), axis=1)
    signs = np.sign(pts[np.arange(len(pts)), lead])
    return pts * signs[:, None]


def proj_distance(p, q) -> float:
    """Sine of the angle between two projective points: sqrt(1 - <p,q>^2).

    Expects unit vectors (as produced by :func:`proj_normalize`); the value
    lies in [0, 1], is symmetric, and vanishes iff the lines coincide.
    Evaluated through the shorter chord, 2 sin(theta/2), which stays
    accurate for nearly identical lines where 1 - <p,q>^2 cancels.
    """
    p = _as_vector(p)
    q = _as_vector(q)
    if p.shape != q.shape:
        raise LinAlgError(f"dimension mismatch: {p.shape} vs {q.shape}")
    chord = min(float(np.linalg.norm(p - q)), float(np.linalg.norm(p + q)))
    return min(1.0, chord * math.sqrt(max(0.0, 1.0 - 0.25 * chord * chord)))


def proj_distance_many(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Projective distances from each row of ``points`` to ``q``."""
    c = np.clip(points @ q, -1.0, 1.0)
    return np.sqrt(np.maximum(0.0, 1.0 - c * c))


def wedge_index(d: int, k: int) -> list[tuple[int, ...]]:
    """Lexicographic basis e_{i1} ^ ... ^ e_{ik}, i1 < ... < ik of the k-th
    exterior power of R^d."""
    return list(itertools.combinations(range(d), k))


def wedge_power(g, k: int) -> np.ndarray:
    """Matrix of the induced action of ``g`` on the k-th exterior power.

    Basis order is lexicographic (:func:`wedge_index`); entries are k x k
    minors, so the map is multiplicative: wedge(gh) = wedge(g) wedge(h).
    """
    g = _as_matrix(g)
    d = g.shape[0]
    if g.shape[1] != d:
        raise LinAlgError("wedge_power needs a square matrix")
    if not 1 <= k <= d:
        raise LinAlgError(f"k={k} out of range 1..{d}")
    if k == 1:
        return g.copy()
    combos = wedge_index(d, k)
    m = len(combos)
    out = np.empty((m, m))
    for b, cols in enumerate(combos):
        sub = g[:, cols]
        for a, rows in enumerate(combos):
            out[a, b] = np.linalg.det(sub[rows, :])
    return out


def operator_norm(g) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(g, dtype=float), 2))


def gauge_N(g, sv_tol: float = 1e-13) -> float:
    """max(||g||, ||g^-1||) through the singular values; always >= 1."""
    g = _as_matrix(g)
    s = np.linalg.svd(g, compute_uv=False)
    if s[-1] <= sv_tol * s[0]:
        raise LinAlgError("matrix is numerically singular")
    return float(max(s[0], 1.0 / s[-1]))


@dataclass(frozen=True)
class Subspace:
    """A linear subspace stored through an orthonormal column basis.

    ``basis`` has shape (ambient_dim, dim); a zero-dimensional space is a
    (d, 0) array.  The orthonormality defect must stay below 1e-10.
    """

    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise LinAlgError("basis must be a 2-d array (columns = vectors)")
        object.__setattr__(self, "basis", b)
        if b.shape[1] > 0:
            gram = b.T @ b
            if np.max(np.abs(gram - np.eye(b.shape[1]))) > 1e-10:
                raise LinAlgError("basis columns are not orthonormal")

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @staticmethod
    def zero(ambient_dim: int) -> "Subspace":
        return Subspace(np.zeros((ambient_dim, 0)))

    @staticmethod
    def full(ambient_dim: int) -> "Subspace":
        return Subspace(np.eye(ambient_dim))

    @staticmethod
    def span_of_coords(ambient_dim: int, coords) -> "Subspace":
        b = np.zeros((ambient_dim, len(coords)))
        for j, i in enumerate(coords):
            b[i, j] = 1.0
        return Subspace(b)

    def project(self, v: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ v)

    def distance_to(self, v: np.ndarray) -> float:
        """Euclidean distance from ``v`` to the subspace."""
        return float(np.linalg.norm(v - self.project(v)))

    def complement(self) -> "Subspace":
        """Orthogonal complement."""
        if self.dim == 0:
            return Subspace.full(self.ambient_dim)
        if self.dim == self.ambient_dim:
            return Subspace.zero(self.ambient_dim)
        # rows of vh past the rank span the kernel of basis^T
        _, _, vh = np.linalg.svd(self.basis.T, full_matrices=True)
        return Subspace(vh[self.dim:].T)

    def contains(self, other: "Subspace", tol: float = 1e-8) -> bool:
        if other.dim == 0:
            return True
        if other.dim > self.dim:
            return False
        resid = other.basis - self.basis @ (self.basis.T @ other.basis)
        return float(np.linalg.norm(resid, 2)) <= tol

    def intersect(self, other: "Subspace", tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Numerical intersection: kernel directions of the stacked
        orthogonal projectors onto the two complements."""
        if self.ambient_dim != other.ambient_dim:
            raise LinAlgError("ambient dimension mismatch")
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim)
        # v is in both spaces iff it loses no norm under either projection;
        # singular vectors of [P1; P2] with value ~sqrt(2) span the intersection
        stacked = np.vstack([self.basis @ self.basis.T, other.basis @ other.basis.T])
        _, s, vh = np.linalg.svd(stacked, full_matrices=False)
        keep = s > math.sqrt(2.0) * (1.0 - 1e-8)
        if not np.any(keep):
            return Subspace.zero(self.ambient_dim)
        return Subspace(vh[keep].T)


def rank_span(vectors, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Orthonormal basis of the span of ``vectors`` (rows or a list of 1-d
    arrays), keeping singular directions above ``tol`` relative to the top
    singular value."""
    arr = np.asarray(list(vectors) if not isinstance(vectors, np.ndarray) else vectors,
                     dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.size == 0 or arr.shape[0] == 0:
        raise LinAlgError("rank_span of an empty family")
    if not np.all(np.isfinite(arr)):
        raise LinAlgError("non-finite vector in rank_span input")
    _, s, vh = np.linalg.svd(arr, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise LinAlgError("rank_span of the zero family")
    keep = s > tol * s[0]
    return Subspace(vh[keep].T)


def principal_angle_distance(s1: Subspace, s2: Subspace) -> float:
    """Sine of the largest principal angle between two subspaces of equal
    dimension; zero iff they coincide.

    Computed as the norm of the projection residual ||(I - P1) B2||_2, which
    stays accurate near zero angle (the arccos-of-singular-values route
    bottoms out at sqrt(machine eps))."""
    if s1.ambient_dim != s2.ambient_dim:
        raise LinAlgError("ambient dimension mismatch")
    if s1.dim != s2.dim:
        raise LinAlgError(f"subspace dimension mismatch: {s1.dim} vs {s2.dim}")
    if s1.dim == 0:
        return 0.0
    resid = s2.basis - s1.basis @ (s1.basis.T @ s2.basis)
    return min(1.0, float(np.linalg.norm(resid, 2)))
