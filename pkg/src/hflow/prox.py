"""Resolvents, Moreau–Yosida envelopes and slope estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, SolverFailure, UnsupportedVariant
from .functionals import Custom, Indicator, WeightedSum
from .geometry import Euclidean, MetricTree
from .solvers import (
    cyclic_splitting,
    line_point_terms_prox,
    line_prox,
    riemannian_point_terms_prox,
    tree_convex_prox,
    tree_point_terms_prox,
)

PROBES = 8
PROBE_SEED = 0


@dataclass(frozen=True, eq=False)
class ProxResult:
    """Output of a resolvent evaluation.

    ``objective`` is f(point) + d(x, point)^2 / (2 lam). ``growth_gap`` is the
    smallest margin g(z) - g(point) - d(point, z)^2 / (2 lam) over the probes z;
    it is nonnegative for the exact minimizer.
    """

    point: object
    objective: float
    growth_gap: float
    iterations: int
    method: str = "exact"


def default_tol(f, x):
    return 1e-8 * (1.0 + f.scale(x))


def prox_objective(f, x, lam):
    space = f.space

    def g(y):
        return f(y) + float(space.distance(x, y)) ** 2 / (2.0 * lam)

    return g


def _feasible(f, z):
    if isinstance(f, Indicator):
        return f.set.project(z)
    if isinstance(f, WeightedSum):
        for g, _ in f.terms:
            if isinstance(g, Indicator):
                z = g.set.project(z)
    return z


def probe_points(f, x, y, count=PROBES, seed=PROBE_SEED):
    """Deterministic probes around ``y``: toward x, toward anchors, and random directions."""
    space = f.space
    rng = np.random.default_rng(seed)
    dxy = float(space.distance(x, y))
    radius = max(dxy, 1e-3 * (1.0 + f.scale(x))) / 4.0
    probes = []
    for target in [x] + f.anchors():
        d = float(space.distance(y, target))
        if d > 0.0:
            probes.append(space.geodesic(y, target, min(1.0, radius / d)))
    while len(probes) < count:
        if isinstance(space, MetricTree):
            target = space.node_points()[int(rng.integers(len(space.labels)))]
            d = space.distance(y, target)
            if d == 0.0:
                target = space.sample(rng)
                d = space.distance(y, target)
            probes.append(space.walk(y, target, min(radius, d)))
        elif space.riemannian:
            w = rng.normal(size=space.frame_dim(y))
            probes.append(space.exp_coords(y, radius * w / np.linalg.norm(w)))
        else:
            target = space.sample(rng, 1.0 + dxy)
            d = float(space.distance(y, target))
            if d > 0.0:
                probes.append(space.geodesic(y, target, min(1.0, radius / d)))
    return [_feasible(f, z) for z in probes[: max(count, len(probes))]]


def growth_gap(f, x, lam, y, count=PROBES, seed=PROBE_SEED):
    g = prox_objective(f, x, lam)
    gy = g(y)
    space = f.space
    gaps = []
    for z in probe_points(f, x, y, count, seed):
        gz = g(z)
        if math.isfinite(gz):
            gaps.append(gz - gy - float(space.distance(y, z)) ** 2 / (2.0 * lam))
    return min(gaps) if gaps else 0.0


def _probe_violation(f, x, lam):
    g = prox_objective(f, x, lam)

    def violation(y):
        gy = g(y)
        worst = 0.0
        for z in probe_points(f, x, y, PROBES, PROBE_SEED):
            worst = max(worst, gy - g(z))
        return worst

    return violation


def _finite_valued(f):
    if isinstance(f, Indicator):
        return False
    if isinstance(f, WeightedSum):
        return all(_finite_valued(g) for g, _ in f.terms)
    if isinstance(f, Custom):
        return f.lipschitz is not None
    return True


def solve_generic(f, x, lam, tol):
    space = f.space
    g = prox_objective(f, x, lam)
    if isinstance(f, WeightedSum):
        pts = f.point_terms()
        if pts is not None:
            if isinstance(space, MetricTree):
                y, it = tree_point_terms_prox(space, pts, x, lam)
                return y, it, "tree-exact"
            if isinstance(space, Euclidean) and space.dim == 1:
                y, it = line_point_terms_prox(pts, x, lam)
                return y, it, "line-exact"
            if space.riemannian:
                y, it = riemannian_point_terms_prox(space, pts, x, lam, tol)
                return y, it, "weiszfeld"
    if isinstance(space, MetricTree) and _finite_valued(f):
        y, it = tree_convex_prox(space, g)
        return y, it, "tree-golden"
    if isinstance(space, Euclidean) and space.dim == 1 and _finite_valued(f):
        s, it = line_prox(lambda s: g(np.array([s])), x, lam, f.lipschitz)
        return np.array([s]), it, "golden"
    if isinstance(f, WeightedSum) and all(t.resolvent_exact(x, lam) is not None for t, _ in f.terms):
        y, it = cyclic_splitting(f, x, lam, space, g, _probe_violation(f, x, lam), tol)
        return y, it, "splitting"
    raise UnsupportedVariant(f"no resolvent solver for {f.kind} functionals on {space.kind} spaces")


def resolvent(f, x, lam, tol=None, certify=True):
    """J_lam(x) = argmin_y f(y) + d(x, y)^2 / (2 lam), with J_0 = id."""
    lam = float(lam)
    if not lam >= 0.0:
        raise InvalidInput(f"lambda must be nonnegative, got {lam}")
    if tol is not None and not tol > 0.0:
        raise InvalidInput(f"tol must be positive, got {tol}")
    if lam == 0.0:
        return ProxResult(x, f(x), 0.0, 0, "identity")
    y = f.resolvent_exact(x, lam)
    method, it = "exact", 1
    if y is None:
        if tol is None:
            tol = default_tol(f, x)
        y, it, method = solve_generic(f, x, lam, tol)
    objective = f(y) + float(f.space.distance(x, y)) ** 2 / (2.0 * lam)
    if not math.isfinite(objective):
        raise InvalidInput("functional is +inf at its resolvent (improper functional?)")
    gap = growth_gap(f, x, lam, y) if certify else math.nan
    return ProxResult(y, objective, gap, it, method)


def moreau_envelope(f, x, lam, tol=None):
    """f_lam(x) = min_y f(y) + d(x, y)^2 / (2 lam); f_0 = f."""
    if lam == 0.0:
        return f(x)
    return resolvent(f, x, lam, tol, certify=False).objective


def slope_upper(f, x, lam, tol=None):
    """d(x, J_lam x) / lam, an upper bound for |∂f|(J_lam x)."""
    if not lam > 0.0:
        raise InvalidInput("slope estimate needs lam > 0")
    y = resolvent(f, x, lam, tol, certify=False).point
    return float(f.space.distance(x, y)) / lam


@dataclass(frozen=True)
class ChainSlack:
    s1: float
    s2: float

    def __iter__(self):
        return iter((self.s1, self.s2))


def envelope_chain_slack(f, x, lam, tol=None):
    """Slacks of d(x,J)^2/lam^2 <= 2(f(x) - f_lam(x))/lam <= |∂f|(x)^2.

    ``s2`` is NaN when no slope formula is registered for ``f``.
    """
    if not lam > 0.0:
        raise InvalidInput("lam must be positive")
    fx = f(x)
    if not math.isfinite(fx):
        raise InvalidInput("slope chain needs f(x) < inf")
    res = resolvent(f, x, lam, tol, certify=False)
    d = float(f.space.distance(x, res.point))
    middle = 2.0 * (fx - res.objective) / lam
    s1 = middle - d * d / (lam * lam)
    known = f.slope(x)
    s2 = math.nan if known is None else known * known - middle
    return ChainSlack(s1, s2)


def resolvent_or_failure(f, x, lam, tol=None, certify=False, step=None):
    """Like :func:`resolvent` but tags solver failures with ``step``."""
    try:
        return resolvent(f, x, lam, tol, certify)
    except SolverFailure as err:
        err.step = step
        raise
