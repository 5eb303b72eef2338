"""Unit-speed geodesic rays and their Busemann functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, InvalidInput, UnsupportedVariant
from .spaces import Euclidean, Hyperboloid, lorentz
from .tree import MetricTree


@dataclass(frozen=True, eq=False)
class EuclideanRay:
    space: Euclidean
    base: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=float)
        nu = np.linalg.norm(u)
        if u.shape != (self.space.dim,) or nu == 0.0:
            raise InvalidInput("ray direction must be a nonzero vector of the space's dimension")
        object.__setattr__(self, "base", self.space.check(self.base))
        object.__setattr__(self, "direction", u / nu)

    def at(self, t):
        return self.base + t * self.direction

    def busemann(self, x):
        # |x - base - t u| - t -> -<x - base, u>
        return -float(np.dot(x - self.base, self.direction))

    def flow(self, x, s):
        """Point reached from ``x`` after moving ``s`` toward the ray's end."""
        return x + s * self.direction

    def to_json(self):
        return {"base": self.space.to_json(self.base), "direction": self.direction.tolist()}


@dataclass(frozen=True, eq=False)
class HyperbolicRay:
    space: Hyperboloid
    base: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        x = self.space.check(self.base)
        v = np.asarray(self.direction, dtype=float)
        if v.shape == (self.space.dim,):
            v = np.concatenate([[0.0], v])
        if v.shape != (self.space.dim + 1,):
            raise InvalidInput("ray direction has the wrong dimension")
        v = v - lorentz(x, v) * x
        nv = np.sqrt(max(-lorentz(v, v), 0.0))
        if nv == 0.0:
            raise InvalidInput("ray direction is zero after projection to the tangent space")
        object.__setattr__(self, "base", x)
        object.__setattr__(self, "direction", v / nv)

    @property
    def ideal(self):
        """Null vector representing the endpoint at infinity."""
        return self.base + self.direction

    def at(self, t):
        return Hyperboloid.renormalize(np.cosh(t) * self.base + np.sinh(t) * self.direction)

    def pairing(self, x):
        """x∘n for the null vector n of the ideal point, without cancellation near n.

        With u = n_s / n_0 and a = x_s·u, x0 - a = (1 + |x_s - a u|^2) / (x0 + a)
        on the sheet; the right side is stable when a > 0.
        """
        n = self.ideal
        u = n[1:] / n[0]
        xs = np.asarray(x, dtype=float)[..., 1:]
        x0 = np.sqrt(1.0 + np.sum(xs**2, axis=-1))
        a = xs @ u
        w = xs - a[..., None] * u if np.ndim(a) else xs - a * u
        stable = (1.0 + np.sum(w**2, axis=-1)) / (x0 + np.maximum(a, 0.0))
        return n[0] * np.where(a > 0.0, stable, x0 - a)

    def busemann(self, x):
        # x∘c(t) = cosh t x∘p + sinh t x∘u ~ (e^t/2) x∘(p+u)
        return float(np.log(self.pairing(x)))

    def flow(self, x, s):
        n = self.ideal
        xn = self.pairing(x)
        # cosh(s) x + sinh(s) v split as e^s (x + v) / 2 + e^-s (x - v) / 2 with x + v = n / xn,
        # so directions transverse to the ray shrink like e^-s instead of cancelling to zero
        ahead = n / xn
        return Hyperboloid.renormalize(0.5 * np.exp(s) * ahead + 0.5 * np.exp(-s) * (2.0 * x - ahead))

    def to_json(self):
        return {"base": self.space.to_json(self.base), "direction": self.direction.tolist()}


@dataclass(frozen=True, eq=False)
class TreeRay:
    """Ray from ``base`` through the leaf ``leaf``, extended formally past the leaf."""

    space: MetricTree
    base: object
    leaf: int

    def __post_init__(self):
        tree = self.space
        leaf = tree.node(self.leaf).node
        if tree.degree(leaf) != 1:
            raise InvalidInput("tree rays must leave through a leaf vertex")
        object.__setattr__(self, "base", tree.check(self.base))
        object.__setattr__(self, "leaf", leaf)

    @property
    def leaf_point(self):
        return self.space.node(self.leaf)

    @property
    def finite_length(self):
        return self.space.distance(self.base, self.leaf_point)

    def at(self, t):
        if t > self.finite_length + 1e-12:
            raise DomainError("ray parameter beyond the leaf lies on the formal extension")
        return self.space.walk(self.base, self.leaf_point, t)

    def busemann(self, x):
        tree = self.space
        length = self.finite_length
        if length == 0.0:
            return tree.distance(x, self.base)
        t, p = tree.project_to_segment(x, self.base, self.leaf_point)
        return tree.distance(x, p) - t * length

    def flow(self, x, s):
        leaf = self.leaf_point
        return self.space.walk(x, leaf, min(s, self.space.distance(x, leaf)))

    def to_json(self):
        return {"base": self.space.to_json(self.base), "leaf": self.space.labels[self.leaf]}


def make_ray(space, base, direction):
    """Ray for ``space``; ``direction`` is a vector, or a leaf label for trees."""
    if isinstance(space, Euclidean):
        return EuclideanRay(space, base, direction)
    if isinstance(space, Hyperboloid):
        return HyperbolicRay(space, base, direction)
    if isinstance(space, MetricTree):
        return TreeRay(space, base, direction)
    raise UnsupportedVariant(f"no closed-form Busemann function on {space.kind} spaces")
