"""Weak (Δ-) convergence diagnostics on stored sequence windows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidInput, SolverFailure
from .functionals import SequenceWindow, omega_tail
from .geometry import Euclidean, MetricTree, Product

CENTER_PROBES = 16
CENTER_SEED = 0
DEFAULT_PROBES = 8


@dataclass(frozen=True, eq=False)
class CenterResult:
    center: object
    omega_value: float
    growth_gap: float
    window_sensitivity: float
    iterations: int = 0


# Euclidean minimal enclosing ball ------------------------------------------------


def _badoiu_clarkson(pts, iters):
    c = pts[0].copy()
    for k in range(1, iters + 1):
        far = pts[np.argmax(np.sum((pts - c) ** 2, axis=1))]
        c += (far - c) / (k + 1)
    return c


def _polish_active(pts, c):
    """Equidistant point of the active support, solved in its affine hull."""
    r2 = np.sum((pts - c) ** 2, axis=1)
    top = r2.max()
    active = pts[r2 >= top - 1e-7 * max(top, 1e-300)]
    base = active[0]
    if len(active) == 1:
        return base
    diffs = active[1:] - base
    # c = base + diffs^T beta with 2 <c - base, a_j - base> = |a_j - base|^2
    gram = diffs @ diffs.T
    rhs = 0.5 * np.sum(diffs**2, axis=1)
    beta, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    return base + diffs.T @ beta


def euclidean_center(pts):
    """Center of the smallest ball containing the rows of ``pts``.

    Bădoiu–Clarkson steps give a start; SLSQP on min r s.t. |c - p_i|^2 <= r
    refines it, and a final solve on the active support removes the
    optimizer's residual.
    """
    pts = np.asarray(pts, dtype=float)
    if len(pts) == 1:
        return pts[0].copy()
    c0 = _badoiu_clarkson(pts, 200)
    r0 = float(np.max(np.sum((pts - c0) ** 2, axis=1)))
    m = pts.shape[1]

    def cons(z):
        return z[m] - np.sum((z[:m] - pts) ** 2, axis=1)

    def cons_jac(z):
        jac = np.empty((len(pts), m + 1))
        jac[:, :m] = -2.0 * (z[:m] - pts)
        jac[:, m] = 1.0
        return jac

    res = minimize(
        lambda z: z[m],
        np.append(c0, r0),
        jac=lambda z: np.eye(m + 1)[m],
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
        method="SLSQP",
        options={"ftol": 1e-16, "maxiter": 500},
    )
    best = c0
    for cand in (res.x[:m], _polish_active(pts, res.x[:m])):
        if np.max(np.sum((pts - cand) ** 2, axis=1)) <= np.max(np.sum((pts - best) ** 2, axis=1)):
            best = cand
    return best


# asymptotic centers ---------------------------------------------------------------


def _tree_center(tree, window):
    pts = window._packed
    far_a = int(np.argmax(tree.distance(pts, window.points[0])))
    a = window.points[far_a]
    far_b = int(np.argmax(tree.distance(pts, a)))
    b = window.points[far_b]
    return tree.geodesic(a, b, 0.5), 2


def _stacked(space, window):
    if window._packed is not None:
        return window._packed
    if isinstance(space, Product):
        return tuple(np.stack([p[i] for p in window.points]) for i in range(len(space.factors)))
    return np.stack(window.points)


def _riemannian_center(space, window, max_outer=60):
    """Minimax center by successive tangent-space enclosing balls.

    At the current center c the points are mapped by log_c to an orthonormal
    frame; the Euclidean enclosing-ball center v of the images gives the update
    c <- exp_c(v). In flat space one update is exact.
    """
    stacked = _stacked(space, window)
    c = window.points[0]
    for it in range(1, max_outer + 1):
        coords = space.tangent_coords(c, space.log(c, stacked))
        v = euclidean_center(coords)
        c = space.exp(c, space.from_tangent_coords(c, v))
        scale = 1.0 + float(np.sqrt(np.max(np.sum(coords**2, axis=1))))
        if float(np.linalg.norm(v)) <= 1e-13 * scale:
            return c, it
    return c, max_outer


def _generic_center(space, window, iters=20000):
    c = window.points[0]
    best, best_val = c, omega_tail(window, c)
    for k in range(1, iters + 1):
        far = window.points[int(np.argmax(window.distances(c)))]
        c = space.geodesic(c, far, 1.0 / (k + 1))
        val = omega_tail(window, c)
        if val < best_val:
            best, best_val = c, val
    return best, iters


def _center_point(space, window):
    if isinstance(space, MetricTree):
        return _tree_center(space, window)
    if isinstance(space, Euclidean):
        pts = _stacked(space, window)
        return euclidean_center(pts), 1
    if space.riemannian:
        return _riemannian_center(space, window)
    return _generic_center(space, window)


def center_probes(space, window, center, count=CENTER_PROBES, seed=CENTER_SEED):
    rng = np.random.default_rng(seed)
    omega = omega_tail(window, center)
    radius = max(math.sqrt(omega), 1e-3) / 4.0
    probes = []
    order = np.argsort(-window.distances(center))
    for i in order[: count // 2]:
        p = window.points[int(i)]
        d = float(space.distance(center, p))
        if d > 0.0:
            probes.append(space.geodesic(center, p, min(1.0, radius / d)))
    while len(probes) < count:
        if isinstance(space, MetricTree):
            target = space.node_points()[int(rng.integers(len(space.labels)))]
            d = space.distance(center, target)
            if d > 0.0:
                probes.append(space.walk(center, target, min(radius, d)))
            else:
                probes.append(space.sample(rng))
        elif space.riemannian:
            w = rng.normal(size=space.frame_dim(center))
            probes.append(space.exp_coords(center, radius * w / np.linalg.norm(w)))
        else:
            probes.append(space.geodesic(center, space.sample(rng), 0.1))
    return probes


def center_growth_gap(space, window, center, probes=None):
    """min over probes of omega(z) - omega(center) - d(center, z)^2 (>= 0 at the true center)."""
    if probes is None:
        probes = center_probes(space, window, center)
    base = omega_tail(window, center)
    return min(omega_tail(window, z) - base - float(space.distance(center, z)) ** 2 for z in probes)


def asymptotic_center(space, window, tol=1e-8, sensitivity=True):
    """Minimizer of the windowed omega(x) = max_n d(x, x_n)^2 with a growth certificate."""
    if not isinstance(window, SequenceWindow):
        window = SequenceWindow(space, window)
    center, iters = _center_point(space, window)
    omega = omega_tail(window, center)
    gap = center_growth_gap(space, window, center)
    if gap < -tol * (1.0 + omega):
        raise SolverFailure(
            f"asymptotic center certificate failed (gap {gap:.3g})", best=center, gap=gap
        )
    sens = 0.0
    if sensitivity and len(window) > 1:
        half, _ = _center_point(space, window.second_half())
        sens = float(space.distance(center, half))
    return CenterResult(center, omega, gap, sens, iters)


# weak-limit diagnostics ----------------------------------------------------------


def segment_parameters(space, window, x, y):
    """Parameter t_n of the projection of each x_n onto [x, y]."""
    dxy = float(space.distance(x, y))
    if dxy == 0.0:
        return np.zeros(len(window))
    if isinstance(space, MetricTree):
        dx = window.distances(x)
        dy = window.distances(y)
        return np.clip((dx + dxy - dy) / (2.0 * dxy), 0.0, 1.0)
    if isinstance(space, Euclidean):
        pts = _stacked(space, window)
        u = y - x
        return np.clip((pts - x) @ u / (dxy * dxy), 0.0, 1.0)
    return np.array([space.project_to_segment(p, x, y)[0] for p in window.points])


def default_probes(space, x, count=DEFAULT_PROBES, seed=0, radius=1.0):
    """One probe per branch at x for trees; random unit directions otherwise."""
    if isinstance(space, MetricTree):
        if x.node is not None:
            nbrs = [space.node_points()[v] for v, _ in space.adj[x.node]]
        else:
            u, v, _ = space.edges[x.edge]
            nbrs = [space.node_points()[u], space.node_points()[v]]
        return nbrs[:count]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        w = rng.normal(size=space.frame_dim(x))
        out.append(space.exp_coords(x, radius * w / np.linalg.norm(w)))
    return out


def weak_limit_score(space, window, x, probes=None):
    """max over probes y of max_n d(x, P_[x,y](x_n)); small values indicate x_n ⇀ x."""
    if probes is None:
        probes = default_probes(space, x)
    if len(probes) == 0:
        raise InvalidInput("weak_limit_score needs at least one probe")
    score = 0.0
    for y in probes:
        dxy = float(space.distance(x, y))
        if dxy == 0.0:
            raise InvalidInput("probes must differ from x")
        t = segment_parameters(space, window, x, y)
        score = max(score, float(np.max(t)) * dxy)
    return score


def opial_slack(window, x, z):
    """min_n d(x_n, z) - min_n d(x_n, x), the windowed Opial gap (positive when z != x)."""
    return float(np.min(window.distances(z)) - np.min(window.distances(x)))


@dataclass(frozen=True)
class StrongFromWeak:
    weak_score: float
    dist_gap: float
    strong_gap: float

    def __iter__(self):
        return iter((self.weak_score, self.dist_gap, self.strong_gap))


def strong_from_weak_check(window, x, y, probes=None):
    """Weak score, max_n |d(x_n, y) - d(x, y)| and max_n d(x_n, x) over the window."""
    space = window.space
    score = weak_limit_score(space, window, x, probes)
    dist_gap = float(np.max(np.abs(window.distances(y) - float(space.distance(x, y)))))
    strong_gap = float(np.max(window.distances(x)))
    return StrongFromWeak(score, dist_gap, strong_gap)


def weak_cluster_points(space, window, k=4, merge_tol=1e-6):
    """Asymptotic centers of k evenly thinned subsequences, merged when closer than merge_tol."""
    centers = []
    for offset in range(k):
        sub = window.thinned(k, offset)
        if len(sub) == 0:
            continue
        c = asymptotic_center(space, sub, sensitivity=False).center
        if all(float(space.distance(c, other)) > merge_tol for other in centers):
            centers.append(c)
    return centers
