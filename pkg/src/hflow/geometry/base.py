"""Common interface of the concrete Hadamard space models."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInput
from ..optimize import golden_section


class Space:
    """A concrete Hadamard space.

    Subclasses supply ``check``, ``distance``, ``geodesic`` and ``sample``.
    Array-backed spaces set ``batched = True``: their methods accept stacks of
    points with arbitrary leading dimensions and broadcast like numpy.
    """

    kind = "abstract"
    batched = False
    riemannian = False

    def check(self, x):
        raise NotImplementedError

    def distance(self, x, y):
        raise NotImplementedError

    def geodesic(self, x, y, t):
        raise NotImplementedError

    def sample(self, rng, scale: float = 1.0):
        raise NotImplementedError

    def sample_many(self, rng, count: int, scale: float = 1.0):
        return [self.sample(rng, scale) for _ in range(count)]

    def project_to_segment(self, p, x, y):
        """Closest point of ``[x, y]`` to ``p`` as ``(t, point)``.

        ``t -> d(p, [x,y](t))^2`` is convex in a CAT(0) space, so a golden
        section search on [0, 1] finds the minimizer.
        """
        if self.distance(x, y) == 0.0:
            return 0.0, x
        t, _ = golden_section(lambda s: self.distance(p, self.geodesic(x, y, s)) ** 2, 0.0, 1.0)
        return t, self.geodesic(x, y, t)

    def same(self, x, y, tol: float = 1e-12) -> bool:
        return self.distance(x, y) <= tol

    def to_json(self, x):
        raise NotImplementedError

    def from_json(self, obj):
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def require(self, space):
        if space != self:
            raise InvalidInput(f"space mismatch: {space!r} vs {self!r}")


class RiemannianSpace(Space):
    """Array-backed model with exponential and logarithm maps."""

    batched = True
    riemannian = True

    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def norm(self, x, v):
        raise NotImplementedError

    def zero_tangent(self, x):
        raise NotImplementedError

    def frame_dim(self, x):
        """Number of coordinates of a tangent vector in an orthonormal frame at x."""
        return int(np.shape(self.tangent_coords(x, self.zero_tangent(x)))[-1])

    def exp_coords(self, x, c):
        """exp_x of the tangent vector with orthonormal-frame coordinates c."""
        return self.exp(x, self.from_tangent_coords(x, c))

    def sq_dist_hessians(self, x, coords):
        """Hessians of 1/2 d(., a_j)^2 at x in tangent coordinates, given the
        coordinates of log_x a_j as rows of ``coords``; ``None`` when unknown."""
        return None
