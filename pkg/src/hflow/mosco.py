"""Numerical checks of Mosco convergence and its consequences on a fixed space.

A :class:`FunctionalSequence` bundles f^n, the limit f, an optional recovery
sequence and declared gap rates. The checks compare envelopes, resolvents and
semigroups of f^n against those of f on a grid of n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, SolverFailure, UnsupportedVariant
from .flows import semigroup_fixed
from .functionals import (
    Indicator,
    SequenceWindow,
    SquaredDistance,
    convexity_slack,
    fermat_weber,
)
from .geometry import Ball, Euclidean, Interval, MetricTree
from .prox import moreau_envelope, resolvent
from .weak import weak_limit_score


def log_grid(N, first=1):
    """first, 2 first, 4 first, ... up to N, always ending at N."""
    if N < first:
        raise InvalidInput(f"N must be at least {first}, got {N}")
    grid, n = [], first
    while n < N:
        grid.append(n)
        n *= 2
    grid.append(int(N))
    return grid


def _grid(N, first, grid):
    if grid is None:
        return log_grid(N, first)
    grid = [int(n) for n in grid]
    if any(n < first for n in grid):
        raise InvalidInput(f"grid entries must be at least {first}")
    return grid


# sequences -----------------------------------------------------------------------


@dataclass(eq=False)
class FunctionalSequence:
    """n -> f^n on one space with limit f.

    ``recovery(x, n)`` returns y_n with y_n -> x and f^n(y_n) -> f(x). Rates are
    optional callables bounding the gaps: ``res_rate(n, x, lam)`` for
    resolvents, ``env_rate(n, x, lam)`` for envelopes, ``value_rate(n, x)`` for
    the recovery gap.
    """

    space: object
    generator: object
    limit: object
    recovery: object = None
    res_rate: object = None
    env_rate: object = None
    value_rate: object = None
    first: int = 1
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, n):
        if n < self.first:
            raise InvalidInput(f"family {self.name} starts at n = {self.first}")
        return self.generator(n)

    def certify_convexity(self, n, rng, samples=64, tol=1e-9):
        """Smallest convexity slack of f^n over random pairs (>= -tol when convex)."""
        f = self(n)
        worst = math.inf
        for _ in range(samples):
            x, y = self.space.sample(rng), self.space.sample(rng)
            if not (math.isfinite(f(x)) and math.isfinite(f(y))):
                continue
            worst = min(worst, convexity_slack(f, 0.0, x, y, float(rng.uniform())))
        return worst

    def to_json(self):
        return {"family": self.name, **self.params}


@dataclass(eq=False)
class SetSequence:
    """n -> C_n with limit C and a monotonicity flag.

    ``params`` describes families whose parameters are a + b/n, which lets
    :func:`monotone_set_limit` compute the limit set analytically.
    """

    space: object
    generator: object
    limit: object
    monotone: str = "none"
    dist_rate: object = None
    proj_rate: object = None
    first: int = 1
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.monotone not in ("decreasing", "increasing", "none"):
            raise InvalidInput(f"unknown monotonicity {self.monotone!r}")

    def __call__(self, n):
        if n < self.first:
            raise InvalidInput(f"family {self.name} starts at n = {self.first}")
        return self.generator(n)

    def monotone_violation(self, n, rng, samples=64):
        """Largest d_{C_outer}(p) over sample points p of the inner set (0 when nested)."""
        if self.monotone == "none":
            return 0.0
        inner, outer = (self(n + 1), self(n)) if self.monotone == "decreasing" else (self(n), self(n + 1))
        worst = 0.0
        for _ in range(samples):
            p = inner.project(self.space.sample(rng, 1.0 + inner.scale()))
            worst = max(worst, outer.distance(p))
        return worst

    def to_json(self):
        return {"family": self.name, **self.params}


# built-in families --------------------------------------------------------------


def translated_quadratics(dim=1, anchor=None, shift=None, weight=1.0):
    """f^n = (w/2) d(., a + u/n)^2 on R^dim with limit (w/2) d(., a)^2."""
    space = Euclidean(dim)
    a = np.zeros(dim) if anchor is None else np.asarray(anchor, dtype=float).reshape(dim)
    u = np.eye(dim)[0] if shift is None else np.asarray(shift, dtype=float).reshape(dim)
    shift_len = float(np.linalg.norm(u))
    w = float(weight)

    def res_rate(n, x, lam):
        return lam * w / (1.0 + lam * w) * shift_len / n

    def env_rate(n, x, lam):
        dx = float(np.linalg.norm(x - a))
        return w / (2.0 * (1.0 + lam * w)) * (2.0 * dx + shift_len / n) * shift_len / n

    def value_rate(n, x):
        dx = float(np.linalg.norm(x - a))
        return 0.5 * w * (2.0 * dx + shift_len / n) * shift_len / n

    return FunctionalSequence(
        space,
        lambda n: SquaredDistance(space, a + u / n, w),
        SquaredDistance(space, a, w),
        recovery=lambda x, n: x,
        res_rate=res_rate,
        env_rate=env_rate,
        value_rate=value_rate,
        name="translated_quadratic",
        params={"dim": dim, "anchor": a.tolist(), "shift": u.tolist(), "weight": w},
    )


def perturbed_fermat_weber(anchors=((0.0,), (1.0,))):
    """Two-anchor median with weights (1/2 + 1/n, 1/2 - 1/n), n >= 3, limit (1/2, 1/2).

    f^n - f = (d(., a) - d(., b)) / n is (2/n)-Lipschitz and bounded by d(a, b)/n,
    which bounds the resolvent gap by 2 lam / n and the envelope gap by d(a, b)/n.
    """
    a, b = (np.asarray(p, dtype=float) for p in anchors)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInput("anchors must be two points of the same dimension")
    space = Euclidean(len(a))
    dab = float(np.linalg.norm(a - b))
    return FunctionalSequence(
        space,
        lambda n: fermat_weber(space, [a, b], [0.5 + 1.0 / n, 0.5 - 1.0 / n]),
        fermat_weber(space, [a, b], [0.5, 0.5]),
        recovery=lambda x, n: x,
        res_rate=lambda n, x, lam: 2.0 * lam / n,
        env_rate=lambda n, x, lam: dab / n,
        value_rate=lambda n, x: dab / n,
        first=3,
        name="perturbed_fermat_weber",
        params={"anchors": [a.tolist(), b.tolist()]},
    )


def nested_interval_indicators(lo=0.0, hi=1.0, slack=1.0):
    """f^n = indicator of [lo, hi + slack/n] with limit the indicator of [lo, hi]."""
    space = Euclidean(1)

    def recovery(x, n):
        return np.clip(x, lo, hi)

    return FunctionalSequence(
        space,
        lambda n: Indicator(Interval(space, lo, hi + slack / n)),
        Indicator(Interval(space, lo, hi)),
        recovery=recovery,
        res_rate=lambda n, x, lam: slack / n,
        env_rate=lambda n, x, lam: slack / n * (2.0 * abs(float(x[0]) - hi) + slack / n) / (2.0 * lam),
        value_rate=lambda n, x: 0.0 if lo <= float(x[0]) <= hi else math.inf,
        name="nested_interval_indicator",
        params={"lo": lo, "hi": hi, "slack": slack},
    )


def star_anchor_drift(legs=3, weight=1.0):
    """f^n = (w/2) d(., p_n)^2 on a star, p_n at distance 1/n from the center on leg 0."""
    tree = MetricTree.star(legs)
    center = tree.node("c")
    w = float(weight)

    def res_rate(n, x, lam):
        return lam * w / (1.0 + lam * w) / n

    def env_rate(n, x, lam):
        dx = float(tree.distance(x, center))
        return w / (2.0 * (1.0 + lam * w)) * (2.0 * dx + 1.0 / n) / n

    def value_rate(n, x):
        dx = float(tree.distance(x, center))
        return 0.5 * w * (2.0 * dx + 1.0 / n) / n

    def anchor(n):
        return tree.move_from_node(0, tree.incident(0)[0], 1.0 / n)

    return FunctionalSequence(
        tree,
        lambda n: SquaredDistance(tree, anchor(n), w),
        SquaredDistance(tree, center, w),
        recovery=lambda x, n: x,
        res_rate=res_rate,
        env_rate=env_rate,
        value_rate=value_rate,
        name="star_anchor_drift",
        params={"legs": legs, "weight": w},
    )


def constant_sequence(f):
    return FunctionalSequence(
        f.space,
        lambda n: f,
        f,
        recovery=lambda x, n: x,
        res_rate=lambda n, x, lam: 0.0,
        env_rate=lambda n, x, lam: 0.0,
        value_rate=lambda n, x: 0.0,
        name="constant",
    )


def nested_intervals(lo=0.0, hi=1.0, slack=1.0):
    """Decreasing C_n = [lo, hi + slack/n] with intersection [lo, hi]."""
    space = Euclidean(1)
    return SetSequence(
        space,
        lambda n: Interval(space, lo, hi + slack / n),
        Interval(space, lo, hi),
        monotone="decreasing",
        dist_rate=lambda n: slack / n,
        proj_rate=lambda n: slack / n,
        name="nested_intervals",
        params={"kind": "interval", "lo": [lo, 0.0], "hi": [hi, slack]},
    )


def increasing_balls(dim=2, radius=1.0, shrink=1.0):
    """Increasing balls B(0, radius - shrink/n), n >= 2, with closed union B(0, radius)."""
    space = Euclidean(dim)
    center = np.zeros(dim)
    first = max(1, math.floor(shrink / radius) + 1)
    return SetSequence(
        space,
        lambda n: Ball(space, center, radius - shrink / n),
        Ball(space, center, radius),
        monotone="increasing",
        dist_rate=lambda n: shrink / n,
        proj_rate=lambda n: shrink / n,
        first=first,
        name="increasing_balls",
        params={"kind": "ball", "center": center.tolist(), "radius": [radius, -shrink]},
    )


def constant_sets(c):
    return SetSequence(
        c.space,
        lambda n: c,
        c,
        monotone="decreasing",
        dist_rate=lambda n: 0.0,
        proj_rate=lambda n: 0.0,
        name="constant",
        params={"kind": "constant"},
    )


FUNCTIONAL_FAMILIES = {
    "translated_quadratic": translated_quadratics,
    "perturbed_fermat_weber": perturbed_fermat_weber,
    "nested_interval_indicator": nested_interval_indicators,
    "star_anchor_drift": star_anchor_drift,
}

SET_FAMILIES = {
    "nested_intervals": nested_intervals,
    "increasing_balls": increasing_balls,
}


def family_from_json(obj):
    """Built-in functional or set family from {"family": id, ...keyword arguments}."""
    obj = dict(obj)
    name = obj.pop("family", None)
    table = {**FUNCTIONAL_FAMILIES, **SET_FAMILIES}
    if name not in table:
        raise InvalidInput(f"unknown family {name!r}; known: {sorted(table)}")
    try:
        return table[name](**obj)
    except TypeError as err:
        raise InvalidInput(f"bad parameters for family {name!r}: {err}") from None


# checks ---------------------------------------------------------------------------


@dataclass
class MoscoReport:
    m2_gap: float
    m2_status: str
    m1_slacks: list
    weak_scores: list
    m1_mode: str = "sampled"
    tol: float = 1e-8

    @property
    def passed(self):
        m1 = all(s >= -self.tol for s in self.m1_slacks)
        return m1 and self.m2_status != "fail"

    def to_json(self):
        return {
            "m2_gap": self.m2_gap,
            "m2_status": self.m2_status,
            "m1_slacks": list(self.m1_slacks),
            "weak_scores": list(self.weak_scores),
            "m1_mode": self.m1_mode,
            "passed": self.passed,
        }


def mosco_check(seq, x, test_windows=(), N=1000, tol=1e-8, probes=None):
    """Sampled (M1) slacks on weakly convergent windows and the (M2) recovery gap at n = N.

    Each window holds x_n for n = start, start+1, ...; the (M1) slack is
    min over the window of f^n(x_n) minus f(x). The (M2) gap is
    |f^N(y_N) - f(x)| + d(y_N, x) for the recovery sequence y.
    """
    space = seq.space
    fx = seq.limit(x)
    if seq.recovery is None:
        m2_gap, status = math.nan, "skipped"
    else:
        y = seq.recovery(x, N)
        m2_gap = abs(seq(N)(y) - fx) + float(space.distance(y, x))
        allowance = seq.value_rate(N, x) if seq.value_rate is not None else 0.0
        status = "pass" if m2_gap <= allowance + tol else "fail"
    slacks, scores = [], []
    for w in test_windows:
        if not isinstance(w, SequenceWindow):
            w = SequenceWindow(space, w)
        first = max(w.start, seq.first)
        vals = [seq(w.start + i)(p) for i, p in enumerate(w.points) if w.start + i >= first]
        if not vals:
            raise InvalidInput("test window lies before the family's first index")
        slacks.append(min(vals) - fx)
        scores.append(weak_limit_score(space, w, x, probes))
    return MoscoReport(m2_gap, status, slacks, scores, tol=tol)


@dataclass
class GapReport:
    """Gaps on a grid of n with the declared family rates; failures map n -> message."""

    grid: list
    env_gaps: list
    res_gaps: list
    env_rates: list
    res_rates: list
    failures: dict
    tol: float
    lam: float

    @property
    def passed(self):
        if self.failures:
            return False
        for gaps, rates in ((self.env_gaps, self.env_rates), (self.res_gaps, self.res_rates)):
            for g, r in zip(gaps, rates):
                if r is not None and not g <= r + 10.0 * self.tol:
                    return False
        return True

    def rows(self):
        return [[n, e, r] for n, e, r in zip(self.grid, self.env_gaps, self.res_gaps)]

    def to_json(self, family="custom"):
        return {"family": family, "lambda": self.lam, "gaps": self.rows(), "passed": self.passed}


def envelope_resolvent_convergence(seq, x, lam, N=1000, tol=1e-10, grid=None):
    """|f^n_lam(x) - f_lam(x)| and d(J^n_lam x, J_lam x) over the grid of n."""
    if not lam > 0.0:
        raise InvalidInput(f"lambda must be positive, got {lam}")
    grid = _grid(N, seq.first, grid)
    space = seq.space
    limit = resolvent(seq.limit, x, lam, tol, certify=False)
    env_gaps, res_gaps, env_rates, res_rates, failures = [], [], [], [], {}
    for n in grid:
        try:
            res = resolvent(seq(n), x, lam, tol, certify=False)
        except SolverFailure as err:
            failures[n] = str(err)
            env_gaps.append(math.nan)
            res_gaps.append(math.nan)
        else:
            env_gaps.append(abs(res.objective - limit.objective))
            res_gaps.append(float(space.distance(res.point, limit.point)))
        env_rates.append(None if seq.env_rate is None else seq.env_rate(n, x, lam))
        res_rates.append(None if seq.res_rate is None else seq.res_rate(n, x, lam))
    return GapReport(grid, env_gaps, res_gaps, env_rates, res_rates, failures, tol, lam)


@dataclass
class WijsmanReport:
    grid: list
    dist_gaps: list
    proj_gaps: list
    dist_rates: list
    proj_rates: list
    tol: float

    @property
    def passed(self):
        for gaps, rates in ((self.dist_gaps, self.dist_rates), (self.proj_gaps, self.proj_rates)):
            for g, r in zip(gaps, rates):
                if r is not None and not g <= r + self.tol:
                    return False
        return True

    def rows(self):
        return [[n, d, p] for n, d, p in zip(self.grid, self.dist_gaps, self.proj_gaps)]


def wijsman_check(seq, x, N=1000, tol=1e-12, grid=None):
    """|d(x, C_n) - d(x, C)| and d(P_{C_n} x, P_C x) over the grid of n."""
    grid = _grid(N, seq.first, grid)
    space = seq.space
    d_lim = seq.limit.distance(x)
    p_lim = seq.limit.project(x)
    dist_gaps, proj_gaps, dist_rates, proj_rates = [], [], [], []
    for n in grid:
        c = seq(n)
        dist_gaps.append(abs(c.distance(x) - d_lim))
        proj_gaps.append(float(space.distance(c.project(x), p_lim)))
        dist_rates.append(None if seq.dist_rate is None else seq.dist_rate(n))
        proj_rates.append(None if seq.proj_rate is None else seq.proj_rate(n))
    return WijsmanReport(grid, dist_gaps, proj_gaps, dist_rates, proj_rates, tol)


@dataclass
class SemigroupReport:
    """Semigroup gaps with the telescoped bound sum_k d(J^n y_k, J y_k) along the limit orbit."""

    grid: list
    sem_gaps: list
    bounds: list
    tol: float

    @property
    def passed(self):
        return all(g <= b + self.tol for g, b in zip(self.sem_gaps, self.bounds))

    def rows(self):
        return [[n, g, b] for n, g, b in zip(self.grid, self.sem_gaps, self.bounds)]


def semigroup_convergence(seq, x, t, N=1000, n_steps=100, tol=1e-10, grid=None):
    """d((J^n_{t/m})^m x, (J_{t/m})^m x) with m = n_steps, over the grid of n.

    Since each J^n is nonexpansive, the gap is at most the sum over the limit
    orbit y_0 = x, y_{k+1} = J y_k of d(J^n y_k, J y_k); that sum is reported
    as ``bounds``.
    """
    if not t >= 0.0:
        raise InvalidInput(f"t must be nonnegative, got {t}")
    grid = _grid(N, seq.first, grid)
    space = seq.space
    lam = t / n_steps
    orbit = [x]
    for _ in range(n_steps):
        orbit.append(semigroup_fixed(seq.limit, orbit[-1], lam, 1, tol))
    limit_point = orbit[-1]
    sem_gaps, bounds = [], []
    for n in grid:
        f = seq(n)
        sem_gaps.append(float(space.distance(semigroup_fixed(f, x, t, n_steps, tol), limit_point)))
        bound = 0.0
        for y, y_next in zip(orbit[:-1], orbit[1:]):
            bound += float(space.distance(semigroup_fixed(f, y, lam, 1, tol), y_next))
        bounds.append(bound)
    return SemigroupReport(grid, sem_gaps, bounds, tol)


def monotone_set_limit(seq):
    """Intersection of a decreasing, or closed union of an increasing, a + b/n family."""
    if seq.monotone == "none":
        raise InvalidInput("monotone_set_limit needs a monotone family")
    params = seq.params
    kind = params.get("kind")
    if kind == "interval":
        lo, hi = params["lo"], params["hi"]
        if seq.monotone == "decreasing" and (lo[1] > 0.0 or hi[1] < 0.0):
            raise InvalidInput("interval family is not decreasing")
        if seq.monotone == "increasing" and (lo[1] < 0.0 or hi[1] > 0.0):
            raise InvalidInput("interval family is not increasing")
        return Interval(seq.space, lo[0], hi[0])
    if kind == "ball":
        r = params["radius"]
        if (seq.monotone == "decreasing" and r[1] < 0.0) or (seq.monotone == "increasing" and r[1] > 0.0):
            raise InvalidInput(f"ball family is not {seq.monotone}")
        return Ball(seq.space, np.asarray(params["center"], dtype=float), r[0])
    if kind == "constant":
        return seq(seq.first)
    raise UnsupportedVariant(f"no closed-form limit for the {seq.name} family")
