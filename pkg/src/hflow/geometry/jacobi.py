"""Small symmetric-matrix kernels for the SPD backend.

Everything here works on stacks of matrices with shape ``(..., n, n)`` so a
whole batch of samples is diagonalized in one pass. Orders are tiny (n <= 4),
which is where cyclic Jacobi sweeps are both accurate and cheap.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError

OFF_DIAGONAL_TOL = 1e-13


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _off_norm(a):
    n = a.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.where(mask, a, 0.0) ** 2, axis=(-2, -1)))


SMALL_STACK = 16


def _jacobi_one(a, tol, max_sweeps):
    """Scalar cyclic Jacobi on one matrix given as nested lists of floats."""
    n = len(a)
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = math.sqrt(sum(x * x for row in a for x in row))
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[p][q] ** 2 for p, q in pairs) * 2.0)
        if off <= tol * scale:
            break
        for p, q in pairs:
            apq = a[p][q]
            if apq == 0.0:
                continue
            try:
                tau = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.hypot(1.0, tau))
            except OverflowError:
                t = 0.0
            if t == 0.0 or not math.isfinite(t):
                continue
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = t * c
            for row in a:
                rp, rq = row[p], row[q]
                row[p] = c * rp - s * rq
                row[q] = s * rp + c * rq
            ap, aq = a[p], a[q]
            for k in range(n):
                xp, xq = ap[k], aq[k]
                ap[k] = c * xp - s * xq
                aq[k] = s * xp + c * xq
            ap[q] = aq[p] = 0.0
            for row in v:
                rp, rq = row[p], row[q]
                row[p] = c * rp - s * rq
                row[q] = s * rp + c * rq
    return [a[i][i] for i in range(n)], v


def _jacobi_two(a):
    """Order two: one rotation annihilates the off-diagonal entry, for the whole stack at once."""
    app, aqq, apq = a[..., 0, 0], a[..., 1, 1], a[..., 0, 1]
    active = apq != 0.0
    safe = np.where(active, apq, 1.0)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        tau = (aqq - app) / (2.0 * safe)
        t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
    t = np.where(active & np.isfinite(t), t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    w = np.stack([app - t * apq, aqq + t * apq], axis=-1)
    v = np.stack([np.stack([c, s], axis=-1), np.stack([-s, c], axis=-1)], axis=-2)
    return w, v


def jacobi_eigh(a, tol: float = OFF_DIAGONAL_TOL, max_sweeps: int = 60):
    """Eigen-decomposition of symmetric matrices by cyclic Jacobi rotations.

    Returns ``(w, v)`` with ``a = v @ diag(w) @ v.T``. Sweeps stop once the
    off-diagonal Frobenius norm of every matrix in the stack is at most
    ``tol`` times its full Frobenius norm. Single matrices and short stacks
    run a scalar loop, which is much faster than array kernels at n <= 4.
    """
    a = symmetrize(a)
    if a.shape[-1] == 2:
        return _jacobi_two(a)
    lead = a.shape[:-2]
    count = int(np.prod(lead)) if lead else 1
    if count <= SMALL_STACK:
        flat = a.reshape((count,) + a.shape[-2:])
        out = [_jacobi_one(m.tolist(), tol, max_sweeps) for m in flat]
        w = np.array([o[0] for o in out]).reshape(lead + a.shape[-1:])
        v = np.array([o[1] for o in out]).reshape(a.shape)
        return w, v
    a = a.copy()
    n = a.shape[-1]
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    scale = np.sqrt(np.sum(a * a, axis=(-2, -1)))
    for _ in range(max_sweeps):
        if np.all(_off_norm(a) <= tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[..., p, q]
                active = np.abs(apq) > 0.0
                if not np.any(active):
                    continue
                safe = np.where(active, apq, 1.0)
                with np.errstate(over="ignore", divide="ignore"):
                    tau = (a[..., q, q] - a[..., p, p]) / (2.0 * safe)
                    sgn = np.where(tau >= 0.0, 1.0, -1.0)
                    t = sgn / (np.abs(tau) + np.hypot(1.0, tau))
                t = np.where(active & np.isfinite(t), t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cc, ss = c[..., None], s[..., None]
                col_p, col_q = a[..., :, p].copy(), a[..., :, q].copy()
                a[..., :, p] = cc * col_p - ss * col_q
                a[..., :, q] = ss * col_p + cc * col_q
                row_p, row_q = a[..., p, :].copy(), a[..., q, :].copy()
                a[..., p, :] = cc * row_p - ss * row_q
                a[..., q, :] = ss * row_p + cc * row_q
                a[..., p, q] = 0.0
                a[..., q, p] = 0.0
                col_p, col_q = v[..., :, p].copy(), v[..., :, q].copy()
                v[..., :, p] = cc * col_p - ss * col_q
                v[..., :, q] = ss * col_p + cc * col_q
    w = np.diagonal(a, axis1=-2, axis2=-1).copy()
    return w, v


def sym_apply(a, fn):
    """Apply a scalar function to a symmetric matrix through its eigenvalues."""
    w, v = jacobi_eigh(a)
    out = (v * fn(w)[..., None, :]) @ np.swapaxes(v, -1, -2)
    return symmetrize(out)


def cholesky(a):
    """Lower Cholesky factor (LAPACK); raises DomainError when a pivot is not positive."""
    a = np.asarray(a, dtype=float)
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        low = None
    if low is None or not np.all(np.isfinite(low)):
        w, _ = jacobi_eigh(a)
        raise DomainError(f"matrix is not positive definite (smallest eigenvalue {np.min(w):.6g})")
    return low


def lower_inverse(low):
    """Inverse of a stack of lower-triangular matrices."""
    return np.tril(np.linalg.inv(low))
