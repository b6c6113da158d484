"""Numba-compiled inner loops for trajectory simulation.

Every kernel takes a pre-sampled index array into a stacked atom array
(k, d, d), so all randomness stays outside in numpy Generators and the
loops themselves are deterministic, GIL-free and reusable across threads.
Log accumulators use Kahan compensation: the spectrum/determinant identity
is asserted to 1e-9 after 1e5 steps, which plain summation does not leave
room for.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_FLAGS = dict(cache=True, nogil=True, fastmath=False)


@njit(**_FLAGS)
def left_product(atoms, idx):
    """Running left product L_n = X_n ... X_1 with per-step max-entry
    rescaling.  Returns (M, logscale) with L_n = exp(logscale) * M."""
    d = atoms.shape[1]
    M = np.eye(d)
    logscale = 0.0
    comp = 0.0
    for s in range(idx.shape[0]):
        M = atoms[idx[s]] @ M
        m = np.max(np.abs(M))
        if not (m > 0.0) or not np.isfinite(m):
            raise ValueError("product renormalization failed (singular or non-finite step)")
        M /= m
        y = np.log(m) - comp
        t = logscale + y
        comp = (t - logscale) - y
        logscale = t
    return M, logscale


@njit(**_FLAGS)
def spectrum_accum(atoms, idx):
    """Per-direction log stretches of an orthonormal frame pushed through
    the product, re-orthonormalized by modified Gram-Schmidt at every step.

    Returns acc (d,) with acc[j]/n the j-th Lyapunov estimate; the column
    sum equals sum_s log|det atoms[idx_s]| up to roundoff.
    """
    d = atoms.shape[1]
    Q = np.eye(d)
    B = np.empty((d, d))
    acc = np.zeros(d)
    comp = np.zeros(d)
    for s in range(idx.shape[0]):
        g = atoms[idx[s]]
        for i in range(d):
            for j in range(d):
                acc_ij = 0.0
                for m in range(d):
                    acc_ij += g[i, m] * Q[m, j]
                B[i, j] = acc_ij
        for j in range(d):
            for i in range(j):
                r = 0.0
                for m in range(d):
                    r += B[m, i] * B[m, j]
                for m in range(d):
                    B[m, j] -= r * B[m, i]
            nrm = 0.0
            for m in range(d):
                nrm += B[m, j] * B[m, j]
            nrm = np.sqrt(nrm)
            if not (nrm > 0.0) or not np.isfinite(nrm):
                raise ValueError("degenerate stretch in orthonormalization")
            for m in range(d):
                B[m, j] /= nrm
            y = np.log(nrm) - comp[j]
            t = acc[j] + y
            comp[j] = (t - acc[j]) - y
            acc[j] = t
        Q[:] = B
    return acc


@njit(**_FLAGS)
def vector_lognorm(atoms, idx, v0):
    """Accumulated log(||L_n v0|| / ||v0||), renormalizing v at every step."""
    v = v0 / np.linalg.norm(v0)
    total = 0.0
    comp = 0.0
    for s in range(idx.shape[0]):
        v = atoms[idx[s]] @ v
        nrm = np.linalg.norm(v)
        if not (nrm > 0.0) or not np.isfinite(nrm):
            raise ValueError("vector growth underflow/overflow")
        v /= nrm
        y = np.log(nrm) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


@njit(**_FLAGS)
def apply_word(atoms, idx, v0):
    """Unit direction of X_{idx[-1]} ... X_{idx[0]} v0 (canonical sign)."""
    v = v0 / np.linalg.norm(v0)
    for s in range(idx.shape[0]):
        v = atoms[idx[s]] @ v
        v /= np.linalg.norm(v)
    lead = np.argmax(np.abs(v))
    if v[lead] < 0.0:
        v = -v
    return v


@njit(**_FLAGS)
def birkhoff_points(atoms, idx, x0, burn):
    """Occupation points X_i...X_1 x0 for i = burn+1 .. n, canonicalized."""
    n = idx.shape[0]
    d = atoms.shape[1]
    out = np.empty((n - burn, d))
    v = x0 / np.linalg.norm(x0)
    for s in range(n):
        v = atoms[idx[s]] @ v
        nrm = np.linalg.norm(v)
        if not (nrm > 0.0) or not np.isfinite(nrm):
            raise ValueError("trajectory degenerated")
        v /= nrm
        if s >= burn:
            lead = np.argmax(np.abs(v))
            sign = 1.0 if v[lead] >= 0.0 else -1.0
            for m in range(d):
                out[s - burn, m] = sign * v[m]
    return out


@njit(**_FLAGS)
def bundle_trace(a_blocks, b_blocks, c_blocks, idx, theta0, t_dir0, log_t0):
    """Fibered trajectory (theta, t) under the affine skew action.

    Per step: theta' = C theta / ||C theta||, t' = (A t + B theta)/||C theta||,
    then the canonical +-1 representative (sign fixed on theta, t flipped
    jointly).  The fiber coordinate is carried as a unit direction plus a
    log norm so escaping trajectories (||t|| ~ exp(rate * n)) never
    overflow; t = exp(log_t) * t_dir, with log_t = -inf encoding t = 0.
    Records drift log(||t||+1), log||t|| and theta at every step.
    """
    n = idx.shape[0]
    q = theta0.shape[0]
    r = t_dir0.shape[0]
    theta = theta0.copy()
    t_dir = t_dir0.copy()
    log_t = log_t0
    drift = np.empty(n)
    log_t_trace = np.empty(n)
    thetas = np.empty((n, q))
    for s in range(n):
        k = idx[s]
        ct = c_blocks[k] @ theta
        nc = np.linalg.norm(ct)
        if not (nc > 1e-300) or not np.isfinite(nc):
            raise ValueError("quotient direction collapsed")
        # combine A t (scale log_t) and B theta (scale 0) on a common scale
        v1 = a_blocks[k] @ t_dir
        n1 = np.linalg.norm(v1)
        s1 = log_t + np.log(n1) if (log_t > -np.inf and n1 > 0.0) else -np.inf
        v2 = b_blocks[k] @ theta
        n2 = np.linalg.norm(v2)
        s2 = np.log(n2) if n2 > 0.0 else -np.inf
        if s1 == -np.inf and s2 == -np.inf:
            for m in range(r):
                t_dir[m] = 0.0
            log_t = -np.inf
        else:
            m_scale = s1 if s1 > s2 else s2
            u = np.zeros(r)
            if s1 > -np.inf:
                u += np.exp(s1 - m_scale) * (v1 / n1)
            if s2 > -np.inf:
                u += np.exp(s2 - m_scale) * (v2 / n2)
            nn = np.linalg.norm(u)
            if nn > 0.0:
                t_dir = u / nn
                log_t = m_scale + np.log(nn) - np.log(nc)
            else:  # exact cancellation back to the zero section
                t_dir = u
                log_t = -np.inf
        theta = ct / nc
        lead = np.argmax(np.abs(theta))
        if theta[lead] < 0.0:
            theta = -theta
            t_dir = -t_dir
        if not np.isfinite(log_t) and log_t != -np.inf:
            raise ValueError("fiber coordinate overflow")
        # drift = log(exp(log_t) + 1), computed stably on both tails
        if log_t > 40.0:
            drift[s] = log_t
        elif log_t == -np.inf:
            drift[s] = 0.0
        else:
            drift[s] = np.log1p(np.exp(log_t))
        log_t_trace[s] = log_t
        thetas[s] = theta
    return drift, log_t_trace, thetas, theta, t_dir, log_t


@njit(**_FLAGS)
def fiber_rates(a_blocks, c_blocks, idx, theta0):
    """Ingredients of the fiber contraction rate: the restricted product
    A(L_n) (rescaled, with log scale) and log ||C(L_n) theta0||."""
    r = a_blocks.shape[1]
    A = np.eye(r)
    a_scale = 0.0
    theta = theta0 / np.linalg.norm(theta0)
    log_c = 0.0
    comp = 0.0
    for s in range(idx.shape[0]):
        k = idx[s]
        A = a_blocks[k] @ A
        m = np.max(np.abs(A))
        if not (m > 0.0) or not np.isfinite(m):
            raise ValueError("restricted product degenerated")
        A /= m
        a_scale += np.log(m)
        theta = c_blocks[k] @ theta
        nc = np.linalg.norm(theta)
        if not (nc > 0.0) or not np.isfinite(nc):
            raise ValueError("quotient direction collapsed")
        theta /= nc
        y = np.log(nc) - comp
        t = log_c + y
        comp = (t - log_c) - y
        log_c = t
    return A, a_scale, log_c
