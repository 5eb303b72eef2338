"""Validated geometric operations shared by all backends."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput
from .sets import ConvexSet
from .tree import MetricTree

ANGLE_SCALE = 1e-4


@dataclass(frozen=True, eq=False)
class GeodesicSegment:
    """The geodesic [x, y] parameterized proportionally to arc length over [0, 1]."""

    space: object
    x: object
    y: object

    def __post_init__(self):
        object.__setattr__(self, "x", self.space.check(self.x))
        object.__setattr__(self, "y", self.space.check(self.y))

    @property
    def length(self):
        return float(self.space.distance(self.x, self.y))

    def point(self, t):
        return geodesic_point(self.space, self.x, self.y, t)

    def to_json(self):
        return {"x": self.space.to_json(self.x), "y": self.space.to_json(self.y)}


@dataclass(frozen=True)
class AngleReport:
    angle: float
    angle_half: float
    h: float

    @property
    def drift(self):
        """Change of the comparison angle when ``h`` is halved."""
        return self.angle - self.angle_half


def _check_t(t):
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise InvalidInput(f"geodesic parameter must lie in [0, 1], got {t}")
    return t


def _segment(space, seg):
    if isinstance(seg, GeodesicSegment):
        return seg.x, seg.y
    x, y = seg
    return space.check(x), space.check(y)


def distance(space, x, y):
    return float(space.distance(space.check(x), space.check(y)))


def geodesic_point(space, x, y, t):
    t = _check_t(t)
    x, y = space.check(x), space.check(y)
    if t == 0.0:
        return x
    if t == 1.0:
        return y
    return space.geodesic(x, y, t)


def project_to_segment(space, p, seg):
    x, y = _segment(space, seg)
    return space.project_to_segment(space.check(p), x, y)


def project_to_set(space, p, C):
    if not isinstance(C, ConvexSet):
        raise InvalidInput(f"not a convex set descriptor: {C!r}")
    if C.space != space:
        raise InvalidInput("convex set lives in a different space")
    return C.project(space.check(p))


def _comparison_angle(a, b, c):
    """Angle opposite ``c`` in a Euclidean triangle with sides a, b, c."""
    cos = (a * a + b * b - c * c) / (2.0 * a * b)
    return math.acos(min(1.0, max(-1.0, cos)))


def alexandrov_angle(space, x, y, z, h=None):
    """Comparison angle at ``x`` between [x, y] and [x, z], measured at radius h and h/2.

    In a CAT(0) space the comparison angle does not increase as h shrinks and
    converges to the Alexandrov angle, so ``angle_half <= angle`` up to rounding
    and ``drift`` indicates how far the finite-h value is from the limit.
    """
    x, y, z = space.check(x), space.check(y), space.check(z)
    dy, dz = float(space.distance(x, y)), float(space.distance(x, z))
    if dy == 0.0 or dz == 0.0:
        raise InvalidInput("angle needs y != x and z != x")
    if h is None:
        h = ANGLE_SCALE * min(dy, dz)
    h = float(h)
    if not 0.0 < h <= min(dy, dz) * (1.0 + 1e-12):
        raise InvalidInput(f"h must lie in (0, {min(dy, dz)}], got {h}")

    def at(r):
        u = space.geodesic(x, y, min(1.0, r / dy))
        v = space.geodesic(x, z, min(1.0, r / dz))
        c = float(space.distance(u, v))
        return _comparison_angle(r, r, c)

    return AngleReport(at(h), at(h / 2.0), h)


def cat0_slack(space, p, seg, t):
    """RHS - LHS of the CAT(0) inequality for the point ``p`` and segment ``seg`` at ``t``.

    Batched spaces accept stacks of points and parameters and return an array.
    """
    x, y = _segment(space, seg)
    p = space.check(p)
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | (t > 1.0)):
        raise InvalidInput("geodesic parameter must lie in [0, 1]")
    if t.ndim == 0:
        t = float(t)
    m = space.geodesic(x, y, t)
    dx, dy = space.distance(p, x), space.distance(p, y)
    dxy, dm = space.distance(x, y), space.distance(p, m)
    return (1.0 - t) * dx**2 + t * dy**2 - t * (1.0 - t) * dxy**2 - dm**2


def sample_points(space, rng, count, scale=1.0):
    """``count`` random points as one stack when the backend supports it."""
    if isinstance(space, MetricTree):
        return space.sample_batch(rng, count)
    return space.sample_many(rng, count, scale)


def sampled_cat0_slacks(space, rng, count, scale=1.0):
    """CAT(0) slacks at ``count`` random (p, [x, y], t) triples."""
    t = rng.uniform(0.0, 1.0, size=count)
    p = sample_points(space, rng, count, scale)
    x = sample_points(space, rng, count, scale)
    y = sample_points(space, rng, count, scale)
    if isinstance(p, list):
        return np.array([float(cat0_slack(space, a, (b, c), s)) for a, b, c, s in zip(p, x, y, t)])
    return np.asarray(cat0_slack(space, p, (x, y), t), dtype=float).reshape(-1)


def apply_isometry(space, T, x):
    if T.space != space:
        raise InvalidInput("isometry acts on a different space")
    return T(space.check(x))
