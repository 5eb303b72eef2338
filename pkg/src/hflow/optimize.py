"""One-dimensional convex minimization."""

from __future__ import annotations

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fn, lo: float, hi: float, rel_tol: float = 1e-12, max_iter: int = 200):
    """Minimize a convex (unimodal) function on ``[lo, hi]``.

    Returns ``(t, fn(t))``. The interval is shrunk until its width is at most
    ``rel_tol * (hi - lo)``; both endpoints are compared against the interior
    estimate, so minimizers sitting on the boundary are returned exactly.
    """
    if hi < lo:
        lo, hi = hi, lo
    width0 = hi - lo
    f_lo, f_hi = fn(lo), fn(hi)
    if width0 == 0.0:
        return lo, f_lo
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= rel_tol * width0:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fn(d)
    best_t, best_f = (c, fc) if fc <= fd else (d, fd)
    if f_lo <= best_f:
        best_t, best_f = lo, f_lo
    if f_hi < best_f:
        best_t, best_f = hi, f_hi
    return best_t, best_f
