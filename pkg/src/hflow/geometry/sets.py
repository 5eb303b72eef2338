"""Closed convex sets with exact metric projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput
from .spaces import Euclidean
from .tree import MetricTree

CONTAINS_TOL = 1e-12


class ConvexSet:
    """Base for set descriptors; subclasses carry a ``space`` field."""

    def project(self, p):
        raise NotImplementedError

    def distance(self, p):
        return float(self.space.distance(p, self.project(p)))

    def contains(self, p, tol=CONTAINS_TOL):
        return self.distance(p) <= tol * (1.0 + self.scale())

    def scale(self):
        return 1.0

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    space: object
    center: object
    radius: float

    def __post_init__(self):
        if not self.radius >= 0.0:
            raise InvalidInput(f"ball radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", self.space.check(self.center))

    def project(self, p):
        d = float(self.space.distance(self.center, p))
        if d <= self.radius:
            return p
        return self.space.geodesic(self.center, p, self.radius / d)

    def distance(self, p):
        return max(0.0, float(self.space.distance(self.center, p)) - self.radius)

    def scale(self):
        return self.radius

    def to_json(self):
        return {"kind": "ball", "center": self.space.to_json(self.center), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Segment(ConvexSet):
    space: object
    x: object
    y: object

    def __post_init__(self):
        object.__setattr__(self, "x", self.space.check(self.x))
        object.__setattr__(self, "y", self.space.check(self.y))

    def project(self, p):
        return self.space.project_to_segment(p, self.x, self.y)[1]

    def scale(self):
        return float(self.space.distance(self.x, self.y))

    def to_json(self):
        return {"kind": "segment", "x": self.space.to_json(self.x), "y": self.space.to_json(self.y)}


@dataclass(frozen=True, eq=False)
class TreeSpan(ConvexSet):
    """Convex hull of finitely many tree points: the union of [s0, si]."""

    space: MetricTree
    points: tuple

    def __post_init__(self):
        if not isinstance(self.space, MetricTree):
            raise InvalidInput("TreeSpan lives in a metric tree")
        pts = tuple(self.space.check(p) for p in self.points)
        if not pts:
            raise InvalidInput("TreeSpan needs at least one point")
        object.__setattr__(self, "points", pts)

    def project(self, p):
        root = self.points[0]
        best, best_d = root, self.space.distance(p, root)
        for s in self.points[1:]:
            _, q = self.space.project_to_segment(p, root, s)
            d = self.space.distance(p, q)
            if d < best_d:
                best, best_d = q, d
        return best

    def scale(self):
        return max(self.space.distance(self.points[0], s) for s in self.points)

    def to_json(self):
        return {"kind": "span", "points": [self.space.to_json(p) for p in self.points]}


@dataclass(frozen=True, eq=False)
class Interval(ConvexSet):
    """Closed interval [lo, hi] in one-dimensional Euclidean space."""

    space: Euclidean
    lo: float
    hi: float

    def __post_init__(self):
        if not isinstance(self.space, Euclidean) or self.space.dim != 1:
            raise InvalidInput("Interval lives in one-dimensional Euclidean space")
        if not self.lo <= self.hi:
            raise InvalidInput(f"empty interval [{self.lo}, {self.hi}]")

    def project(self, p):
        return np.clip(p, self.lo, self.hi)

    def distance(self, p):
        v = float(np.asarray(p).reshape(-1)[0])
        return max(self.lo - v, v - self.hi, 0.0)

    def scale(self):
        return max(abs(self.lo), abs(self.hi))

    def to_json(self):
        return {"kind": "interval", "lo": self.lo, "hi": self.hi}
