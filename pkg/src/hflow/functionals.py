"""Convex lower semicontinuous functionals on Hadamard spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidInput, UnsupportedVariant
from .geometry import (
    Euclidean,
    EuclideanRigid,
    MetricTree,
    TreeAutomorphism,
    TreeBatch,
    isometry_from_json,
    make_ray,
    set_from_json,
    tangent_combination,
)
from .geometry.sets import ConvexSet
from .geometry.spaces import Product

INF = math.inf
WEIGHT_SUM_TOL = 1e-12


class Functional:
    """Base class. Subclasses implement ``__call__`` and optionally the hooks below."""

    kind = "abstract"
    lipschitz = None
    strong_convexity = 0.0

    def value(self, x):
        return self(x)

    def resolvent_exact(self, x, lam):
        """Closed-form resolvent, or ``None`` when no formula is registered."""
        return None

    def slope(self, x):
        """Known local slope |∂f|(x), or ``None``."""
        return None

    def minimizer(self):
        """A known minimizer, or ``None``."""
        return None

    def distance_to_argmin(self, x):
        m = self.minimizer()
        return None if m is None else float(self.space.distance(x, m))

    def anchors(self):
        return []

    def scale(self, x):
        """Length scale of the problem seen from ``x``, for tolerances and probes."""
        ds = [float(self.space.distance(x, a)) for a in self.anchors()]
        return max(ds, default=0.0)

    def to_json(self):
        raise UnsupportedVariant(f"{self.kind} functionals have no JSON form")


@dataclass(frozen=True, eq=False)
class SquaredDistance(Functional):
    """(w/2) d(., a)^2."""

    space: object
    anchor: object
    weight: float = 1.0

    kind = "sqdist"

    def __post_init__(self):
        if not self.weight > 0.0:
            raise InvalidInput(f"weight must be positive, got {self.weight}")
        object.__setattr__(self, "anchor", self.space.check(self.anchor))

    @property
    def strong_convexity(self):
        return self.weight / 2.0

    def __call__(self, x):
        return 0.5 * self.weight * float(self.space.distance(x, self.anchor)) ** 2

    def resolvent_exact(self, x, lam):
        s = lam * self.weight
        return self.space.geodesic(x, self.anchor, s / (1.0 + s))

    def slope(self, x):
        return self.weight * float(self.space.distance(x, self.anchor))

    def minimizer(self):
        return self.anchor

    def anchors(self):
        return [self.anchor]

    def to_json(self):
        return {"kind": "dist", "p": 2, "anchor": self.space.to_json(self.anchor), "w": self.weight / 2.0}


@dataclass(frozen=True, eq=False)
class Distance(Functional):
    """w d(., a)."""

    space: object
    anchor: object
    weight: float = 1.0

    kind = "dist"

    def __post_init__(self):
        if not self.weight > 0.0:
            raise InvalidInput(f"weight must be positive, got {self.weight}")
        object.__setattr__(self, "anchor", self.space.check(self.anchor))

    @property
    def lipschitz(self):
        return self.weight

    def __call__(self, x):
        return self.weight * float(self.space.distance(x, self.anchor))

    def resolvent_exact(self, x, lam):
        d = float(self.space.distance(x, self.anchor))
        if d <= lam * self.weight:
            return self.anchor
        return self.space.geodesic(x, self.anchor, lam * self.weight / d)

    def slope(self, x):
        return self.weight if float(self.space.distance(x, self.anchor)) > 0.0 else 0.0

    def minimizer(self):
        return self.anchor

    def anchors(self):
        return [self.anchor]

    def to_json(self):
        return {"kind": "dist", "p": 1, "anchor": self.space.to_json(self.anchor), "w": self.weight}


@dataclass(frozen=True, eq=False)
class Indicator(Functional):
    """0 on the convex set C, +inf elsewhere."""

    set: ConvexSet

    kind = "indicator"

    @property
    def space(self):
        return self.set.space

    def __call__(self, x):
        return 0.0 if self.set.contains(x) else INF

    def resolvent_exact(self, x, lam):
        return self.set.project(x)

    def slope(self, x):
        return 0.0 if self.set.contains(x) else INF

    def minimizer(self):
        return None

    def distance_to_argmin(self, x):
        return self.set.distance(x)

    def scale(self, x):
        return self.set.distance(x) + self.set.scale()

    def to_json(self):
        return {"kind": "indicator", "set": self.set.to_json()}


@dataclass(frozen=True, eq=False)
class Busemann(Functional):
    """Busemann function of a unit-speed ray: lim_t d(x, c(t)) - t."""

    ray: object

    kind = "busemann"
    lipschitz = 1.0

    @classmethod
    def of(cls, space, base, direction):
        return cls(make_ray(space, base, direction))

    @property
    def space(self):
        return self.ray.space

    def __call__(self, x):
        return self.ray.busemann(x)

    def resolvent_exact(self, x, lam):
        # moving toward the ray's end lowers b at unit rate, and b is 1-Lipschitz
        return self.ray.flow(x, lam)

    def slope(self, x):
        if isinstance(self.space, MetricTree):
            return 0.0 if self.space.distance(x, self.ray.leaf_point) == 0.0 else 1.0
        return 1.0

    def minimizer(self):
        if isinstance(self.space, MetricTree):
            return self.ray.leaf_point
        return None

    def anchors(self):
        return [self.ray.base]

    def to_json(self):
        return {"kind": "busemann", **self.ray.to_json()}


@dataclass(frozen=True, eq=False)
class Displacement(Functional):
    """x -> d(x, Tx) for an isometry T."""

    isometry: object

    kind = "displacement"
    lipschitz = 2.0

    @property
    def space(self):
        return self.isometry.space

    def __call__(self, x):
        return float(self.space.distance(x, self.isometry(x)))

    def resolvent_exact(self, x, lam):
        T = self.isometry
        if isinstance(T, EuclideanRigid):
            return _rigid_displacement_prox(T, x, lam)
        if isinstance(T, TreeAutomorphism):
            # on a tree d(x, Tx) = 2 d(x, Fix T) and the midpoint of [x, Tx] is the foot on Fix T
            tree = self.space
            foot = tree.geodesic(x, T(x), 0.5)
            d = tree.distance(x, foot)
            return foot if d <= 2.0 * lam else tree.walk(x, foot, 2.0 * lam)
        return None

    def slope(self, x):
        T = self.isometry
        if isinstance(T, EuclideanRigid):
            a = np.eye(len(x)) - T.Q
            z = a @ x - T.v
            nz = float(np.linalg.norm(z))
            return 0.0 if nz == 0.0 else float(np.linalg.norm(a.T @ z)) / nz
        if isinstance(T, TreeAutomorphism):
            return 2.0 if self(x) > 0.0 else 0.0
        return None

    def distance_to_argmin(self, x):
        if isinstance(self.isometry, TreeAutomorphism):
            return self(x) / 2.0
        return None

    def scale(self, x):
        return self(x)

    def to_json(self):
        return {"kind": "displacement", "isometry": self.isometry.to_json()}


def _rigid_displacement_prox(T, x, lam):
    """argmin_y |A y - v| + |y - x|^2 / (2 lam) with A = I - Q.

    Dual form: y = x - lam A^T u where u maximizes <u, A x - v> - lam/2 |A^T u|^2
    over the unit ball, a trust-region subproblem solved in the eigenbasis of A A^T.
    """
    a = np.eye(len(x)) - T.Q
    b = a @ x - T.v
    m, vecs = np.linalg.eigh(a @ a.T)
    m = np.maximum(m, 0.0)
    c = vecs.T @ b
    scale = max(1.0, float(np.abs(m).max()))
    null = m <= 1e-12 * scale
    if not np.any(null & (np.abs(c) > 1e-14 * max(1.0, float(np.abs(c).max())))):
        u_free = np.where(null, 0.0, c / np.where(null, 1.0, lam * m))
        if np.linalg.norm(u_free) <= 1.0:
            return x - lam * a.T @ (vecs @ u_free)

    def excess(mu):
        return float(np.linalg.norm(c / (lam * m + mu))) - 1.0

    hi = float(np.linalg.norm(c)) + 1.0
    mu = brentq(excess, 1e-300, hi, xtol=1e-15, rtol=1e-15)
    u = vecs @ (c / (lam * m + mu))
    return x - lam * a.T @ u


@dataclass(frozen=True, eq=False)
class WeightedSum(Functional):
    """sum_k w_k f_k.

    ``normalized=True`` marks a Fermat–Weber style instance whose weights must sum to one.
    """

    terms: tuple
    normalized: bool = False

    kind = "sum"

    def __post_init__(self):
        flat = []
        for item in self.terms:
            f, w = item if isinstance(item, tuple) else (item, 1.0)
            w = float(w)
            if not w > 0.0:
                raise InvalidInput(f"sum weights must be positive, got {w}")
            if isinstance(f, WeightedSum):
                flat.extend((g, w * v) for g, v in f.terms)
            else:
                flat.append((f, w))
        if not flat:
            raise InvalidInput("empty sum")
        space = flat[0][0].space
        if any(f.space != space for f, _ in flat):
            raise InvalidInput("all terms of a sum must live on one space")
        if self.normalized and abs(sum(w for _, w in flat) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInput(f"normalized weights must sum to 1, got {sum(w for _, w in flat)}")
        object.__setattr__(self, "terms", tuple(flat))

    @property
    def space(self):
        return self.terms[0][0].space

    @property
    def lipschitz(self):
        ls = [f.lipschitz for f, _ in self.terms]
        if any(v is None for v in ls):
            return None
        return sum(w * v for (_, w), v in zip(self.terms, ls))

    @property
    def strong_convexity(self):
        return sum(w * f.strong_convexity for f, w in self.terms)

    def __call__(self, x):
        total = 0.0
        for f, w in self.terms:
            total += w * f(x)
        return total

    def point_terms(self):
        """(anchor, linear weight, quadratic weight) triples when every term is
        a Distance or SquaredDistance, else ``None``."""
        out = []
        for f, w in self.terms:
            if isinstance(f, Distance):
                out.append((f.anchor, w * f.weight, 0.0))
            elif isinstance(f, SquaredDistance):
                out.append((f.anchor, 0.0, w * f.weight))
            else:
                return None
        return out

    def resolvent_exact(self, x, lam):
        if len(self.terms) == 1:
            f, w = self.terms[0]
            return f.resolvent_exact(x, lam * w)
        pts = self.point_terms()
        if isinstance(self.space, Euclidean) and pts is not None and all(p[1] == 0.0 for p in pts):
            # quadratic objective: weighted average of x and the anchors
            num = x / lam
            den = 1.0 / lam
            for a, _, q in pts:
                num = num + q * a
                den += q
            return num / den
        return None

    def slope(self, x):
        if len(self.terms) == 1:
            f, w = self.terms[0]
            s = f.slope(x)
            return None if s is None else w * s
        space = self.space
        pts = self.point_terms()
        if pts is None or not space.riemannian:
            return None
        grad = []
        coeffs = []
        for a, lin, quad in pts:
            d = float(space.distance(x, a))
            if lin > 0.0 and d == 0.0:
                return None
            coeffs.append((lin / d if lin > 0.0 else 0.0) + quad)
            grad.append(space.log(x, a))
        return float(space.norm(x, tangent_combination(space, coeffs, grad)))

    def minimizer(self):
        if len(self.terms) == 1:
            return self.terms[0][0].minimizer()
        return None

    def anchors(self):
        out = []
        for f, _ in self.terms:
            out.extend(f.anchors())
        return out

    def to_json(self):
        terms = []
        for f, w in self.terms:
            t = f.to_json()
            if "w" in t:
                t = {**t, "w": t["w"] * w}
            else:
                t = {**t, "scale": w}
            terms.append(t)
        return {"kind": "sum", "terms": terms, "normalized": self.normalized}


@dataclass(frozen=True, eq=False)
class Custom(Functional):
    """User-supplied convex functional.

    ``resolvent(x, lam)`` is used when given; otherwise generic solvers need a
    metric tree or one-dimensional Euclidean space, bracketed by ``lipschitz``.
    """

    space: object
    evaluator: object
    resolvent: object = None
    lipschitz: float | None = None
    slope_fn: object = None
    minimizer_point: object = None
    name: str = "custom"

    kind = "custom"

    def __call__(self, x):
        return float(self.evaluator(x))

    def resolvent_exact(self, x, lam):
        return None if self.resolvent is None else self.resolvent(x, lam)

    def slope(self, x):
        return None if self.slope_fn is None else float(self.slope_fn(x))

    def minimizer(self):
        return self.minimizer_point


def fermat_weber(space, anchors, weights=None, p=1):
    """sum_k w_k d(., a_k)^p for p in {1, 2}; median for p = 1, barycenter for p = 2."""
    anchors = list(anchors)
    if not anchors:
        raise InvalidInput("need at least one anchor")
    if weights is None:
        weights = [1.0 / len(anchors)] * len(anchors)
    if len(weights) != len(anchors):
        raise InvalidInput("one weight per anchor")
    if p == 1:
        terms = [(Distance(space, a, 1.0), w) for a, w in zip(anchors, weights)]
    elif p == 2:
        terms = [(SquaredDistance(space, a, 2.0), w) for a, w in zip(anchors, weights)]
    else:
        raise UnsupportedVariant(f"only p in {{1, 2}} is supported, got {p}")
    return WeightedSum(tuple(terms), normalized=abs(sum(weights) - 1.0) <= WEIGHT_SUM_TOL)


def functional_from_json(space, obj):
    """Functional from its JSON descriptor; "dist" terms read w * d(., anchor)^p."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInput(f"functional descriptor needs a 'kind': {obj!r}")
    kind = obj["kind"]
    if kind == "dist":
        p = int(obj.get("p", 1))
        w = float(obj.get("w", 1.0))
        anchor = space.from_json(obj["anchor"])
        if p == 1:
            return Distance(space, anchor, w)
        if p == 2:
            return SquaredDistance(space, anchor, 2.0 * w)
        raise UnsupportedVariant(f"only p in {{1, 2}} is supported, got {p}")
    if kind == "indicator":
        return Indicator(set_from_json(space, obj["set"]))
    if kind == "busemann":
        base = space.from_json(obj["base"])
        direction = obj["leaf"] if "leaf" in obj else np.asarray(obj["direction"], dtype=float)
        return Busemann.of(space, base, direction)
    if kind == "displacement":
        return Displacement(isometry_from_json(space, obj["isometry"]))
    if kind == "sum":
        terms = []
        for t in obj["terms"]:
            scale = float(t.get("scale", 1.0))
            if t.get("kind") == "dist" and "w" in t:
                # a term's "w" is its weight in the sum, as in the Fermat–Weber form
                terms.append((functional_from_json(space, {**t, "w": 1.0}), scale * float(t["w"])))
            else:
                terms.append((functional_from_json(space, t), scale))
        return WeightedSum(tuple(terms), normalized=bool(obj.get("normalized", False)))
    if kind in ("median", "mean"):
        anchors = [space.from_json(a) for a in obj["anchors"]]
        return fermat_weber(space, anchors, obj.get("weights"), 1 if kind == "median" else 2)
    raise InvalidInput(f"unknown functional kind {kind!r}")


def convexity_slack(f, beta, x, y, t):
    """(1-t) f(x) + t f(y) - beta t (1-t) d(x,y)^2 - f(geodesic(x, y, t))."""
    if beta < 0.0:
        raise InvalidInput("beta must be nonnegative")
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"t must lie in [0, 1], got {t}")
    fx, fy = f(x), f(y)
    if not (math.isfinite(fx) and math.isfinite(fy)):
        raise InvalidInput("convexity slack needs f finite at both endpoints")
    space = f.space
    d = float(space.distance(x, y))
    return (1.0 - t) * fx + t * fy - beta * t * (1.0 - t) * d * d - f(space.geodesic(x, y, t))


@dataclass(frozen=True, eq=False)
class SequenceWindow:
    """Stored tail x_N, ..., x_M of a sequence; ``start`` is the index N."""

    space: object
    points: object
    start: int = 0
    _packed: object = field(default=None, repr=False)

    def __post_init__(self):
        pts = self.points
        if isinstance(pts, TreeBatch):
            pts = self.space.unpack(pts)
        if isinstance(pts, np.ndarray) and self.space.batched:
            if len(pts) == 0:
                raise InvalidInput("window must be nonempty")
            object.__setattr__(self, "points", self.space.check(pts))
            object.__setattr__(self, "_packed", self.points)
            return
        pts = [self.space.check(p) for p in pts]
        if not pts:
            raise InvalidInput("window must be nonempty")
        object.__setattr__(self, "points", pts)
        if isinstance(self.space, MetricTree):
            object.__setattr__(self, "_packed", self.space.pack(pts))
        elif self.space.batched and not isinstance(self.space, Product):
            object.__setattr__(self, "_packed", np.stack(pts))

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __iter__(self):
        return iter(self.points)

    def distances(self, x):
        """d(x, x_n) for every stored point."""
        if self._packed is not None:
            return np.asarray(self.space.distance(self._packed, x), dtype=float).reshape(-1)
        return np.array([float(self.space.distance(p, x)) for p in self.points])

    def values(self, f):
        return np.array([f(p) for p in self.points])

    def tail(self, k):
        """Window of the points from position ``k`` on."""
        return SequenceWindow(self.space, self.points[k:], self.start + k)

    def second_half(self):
        return self.tail(len(self) // 2)

    def thinned(self, step, offset=0):
        return SequenceWindow(self.space, self.points[offset::step], self.start + offset)


def omega_tail(window, x):
    """max over the stored tail of d(x, x_n)^2, the windowed limsup."""
    return float(np.max(window.distances(x) ** 2))


@dataclass(frozen=True, eq=False)
class OmegaFunctional(Functional):
    """omega(., window) as a functional (strongly convex with beta = 1)."""

    window: SequenceWindow

    kind = "omega"
    strong_convexity = 1.0

    @property
    def space(self):
        return self.window.space

    def __call__(self, x):
        return omega_tail(self.window, x)

    def anchors(self):
        return list(self.window.points)
