"""Array-backed models: Euclidean space, the hyperboloid, SPD matrices, products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, InvalidInput
from .base import RiemannianSpace
from .jacobi import cholesky, jacobi_eigh, lower_inverse, symmetrize


def _s_coth_s(s):
    """s coth s, equal to 1 at s = 0."""
    s = np.abs(np.asarray(s, dtype=float))
    small = s < 1e-4
    safe = np.where(small, 1.0, s)
    return np.where(small, 1.0 + s * s / 3.0, safe / np.tanh(safe))


def _flat_hessians(coords):
    m, k = np.shape(coords)
    return np.broadcast_to(np.eye(k), (m, k, k)).copy()


LORENTZ_DRIFT = 1e-10


def _as_t(t):
    return np.asarray(t, dtype=float)[..., None]


@dataclass(frozen=True)
class Euclidean(RiemannianSpace):
    dim: int

    kind = "euclidean"

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidInput(f"Euclidean dimension must be a positive integer, got {self.dim!r}")

    def check(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.dim:
            raise InvalidInput(f"expected coordinates of length {self.dim}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite coordinates")
        return arr

    def distance(self, x, y):
        return np.sqrt(np.sum((x - y) ** 2, axis=-1))

    def geodesic(self, x, y, t):
        return x + _as_t(t) * (y - x)

    def exp(self, x, v):
        return x + v

    def log(self, x, y):
        return y - x

    def norm(self, x, v):
        return np.sqrt(np.sum(v * v, axis=-1))

    def zero_tangent(self, x):
        return np.zeros_like(x)

    def random_direction(self, x, rng):
        v = rng.normal(size=np.shape(x))
        return v / np.linalg.norm(v)

    def tangent_coords(self, x, v):
        """Coordinates of tangent vectors at x in an orthonormal frame."""
        return np.asarray(v, dtype=float)

    def from_tangent_coords(self, x, c):
        return np.asarray(c, dtype=float)

    def sq_dist_hessians(self, x, coords):
        return _flat_hessians(coords)

    def project_to_segment(self, p, x, y):
        u = y - x
        uu = float(np.dot(u, u))
        if uu == 0.0:
            return 0.0, x
        t = min(1.0, max(0.0, float(np.dot(p - x, u)) / uu))
        return t, self.geodesic(x, y, t)

    def sample(self, rng, scale=1.0, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return scale * rng.normal(size=shape)

    def sample_many(self, rng, count, scale=1.0):
        return self.sample(rng, scale, size=count)

    def to_json(self, x):
        return {"kind": "euclidean", "coords": [float(c) for c in np.ravel(x)]}

    def from_json(self, obj):
        coords = obj["coords"] if isinstance(obj, dict) else obj
        return self.check(coords)

    def describe(self):
        return {"kind": "euclidean", "dim": int(self.dim)}


class InnerProduct(RiemannianSpace):
    """R^dim with the constant inner product <u, v> = u^T G v, G positive definite.

    Geodesics are straight lines as in Euclidean space; only lengths change.
    """

    kind = "inner_product"

    def __init__(self, gram):
        g = symmetrize(np.asarray(gram, dtype=float))
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidInput(f"Gram matrix must be square, got shape {g.shape}")
        self.gram = g
        self.dim = g.shape[0]
        # G = L L^T, so |v|_G = |L^T v|
        self._low = cholesky(g)
        self._low_inv = lower_inverse(self._low)

    def __repr__(self):
        return f"InnerProduct(dim={self.dim})"

    def check(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.dim:
            raise InvalidInput(f"expected coordinates of length {self.dim}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite coordinates")
        return arr

    def norm(self, x, v):
        return np.sqrt(np.maximum(np.sum((v @ self.gram) * v, axis=-1), 0.0))

    def distance(self, x, y):
        return self.norm(x, y - x)

    def geodesic(self, x, y, t):
        return x + _as_t(t) * (y - x)

    def exp(self, x, v):
        return x + v

    def log(self, x, y):
        return y - x

    def zero_tangent(self, x):
        return np.zeros_like(x)

    def random_direction(self, x, rng):
        v = rng.normal(size=np.shape(x))
        return v / self.norm(x, v)

    def tangent_coords(self, x, v):
        return np.asarray(v, dtype=float) @ self._low

    def from_tangent_coords(self, x, c):
        return np.asarray(c, dtype=float) @ self._low_inv

    def sq_dist_hessians(self, x, coords):
        return _flat_hessians(coords)

    def project_to_segment(self, p, x, y):
        u = y - x
        uu = float(u @ self.gram @ u)
        if uu == 0.0:
            return 0.0, x
        t = min(1.0, max(0.0, float((p - x) @ self.gram @ u) / uu))
        return t, self.geodesic(x, y, t)

    def sample(self, rng, scale=1.0, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return scale * rng.normal(size=shape)

    def sample_many(self, rng, count, scale=1.0):
        return self.sample(rng, scale, size=count)

    def to_json(self, x):
        return {"kind": "inner_product", "coords": [float(c) for c in np.ravel(x)]}

    def from_json(self, obj):
        coords = obj["coords"] if isinstance(obj, dict) else obj
        return self.check(coords)

    def describe(self):
        return {"kind": "inner_product", "gram": self.gram.tolist()}


def lorentz(x, y):
    """Lorentz form x0*y0 - sum_i xi*yi."""
    return x[..., 0] * y[..., 0] - np.sum(x[..., 1:] * y[..., 1:], axis=-1)


@dataclass(frozen=True)
class Hyperboloid(RiemannianSpace):
    """Upper sheet {x : x∘x = 1, x0 > 0} of R^{dim+1} with the hyperbolic metric."""

    dim: int

    kind = "hyperboloid"

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidInput(f"hyperboloid dimension must be a positive integer, got {self.dim!r}")

    @staticmethod
    def renormalize(x):
        x = np.array(x, dtype=float, copy=True)
        x[..., 0] = np.sqrt(1.0 + np.sum(x[..., 1:] ** 2, axis=-1))
        return x

    def from_spatial(self, v):
        v = np.asarray(v, dtype=float)
        return self.renormalize(np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1))

    def check(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.dim + 1:
            raise InvalidInput(f"expected {self.dim + 1} ambient coordinates, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite coordinates")
        if np.any(arr[..., 0] <= 0.0):
            raise DomainError("hyperboloid point must have x0 > 0")
        drift = np.abs(lorentz(arr, arr) - 1.0)
        if np.any(drift > 1e-6 * np.maximum(1.0, arr[..., 0] ** 2)):
            raise DomainError(f"point is off the hyperboloid sheet (|x∘x - 1| = {np.max(drift):.3g})")
        return self.renormalize(arr)

    def distance(self, x, y):
        # polar form: sinh^2(d/2) = sinh^2((rho_x - rho_y)/2) + r_x r_y |u_x - u_y|^2 / 4 with
        # r = |x_s| = sinh(rho), u = x_s / r. Both terms are nonnegative, so nothing cancels
        # between them; each is computed from the spatial parts alone.
        xs, ys = x[..., 1:], y[..., 1:]
        diff = xs - ys
        rx, ry = np.linalg.norm(xs, axis=-1), np.linalg.norm(ys, axis=-1)
        rsum = rx + ry
        safe_sum = np.where(rsum > 0.0, rsum, 1.0)
        dr = np.sum(diff * (xs + ys), axis=-1) / safe_sum  # r_x - r_y
        x0, y0 = np.sqrt(1.0 + rx**2), np.sqrt(1.0 + ry**2)
        denom = rx * y0 + ry * x0
        drho = np.arcsinh(dr * rsum / np.where(denom > 0.0, denom, 1.0))
        radial = np.sinh(0.5 * drho)
        both = (rx > 0.0) & (ry > 0.0)
        safe_rx, safe_ry = np.where(both, rx, 1.0), np.where(both, ry, 1.0)
        # angle between u_x and u_y: with u the unit vector of the shorter point and R the longer
        # radius, |u ∧ (x_s - y_s)| = R sin, whose error is eps |x_s - y_s| <= 2 eps R; then
        # r_x r_y |u_x - u_y|^2 / 4 = r_x r_y sin^2 / (2 (1 + cos)) for cos > 0 has no cancellation
        x_short = (safe_rx <= safe_ry)[..., None]
        short_r = np.minimum(safe_rx, safe_ry)
        long_r = np.maximum(safe_rx, safe_ry)
        u = np.where(x_short, xs, ys) / short_r[..., None]
        wedge = u[..., :, None] * diff[..., None, :] - u[..., None, :] * diff[..., :, None]
        wedge2 = 0.5 * np.sum(wedge**2, axis=(-2, -1))
        cos = np.sum(xs * ys, axis=-1) / (safe_rx * safe_ry)
        acute = short_r * wedge2 / (2.0 * long_r * (1.0 + np.where(cos > 0.0, cos, 0.0)))
        obtuse = rx * ry * (1.0 - cos) / 2.0
        angular2 = np.where(both, np.where(cos > 0.0, acute, obtuse), 0.0)
        return 2.0 * np.arcsinh(np.sqrt(radial**2 + angular2))

    def geodesic(self, x, y, t):
        d = np.asarray(self.distance(x, y))
        t = np.asarray(t, dtype=float)
        small = d < 1e-9
        ds = np.where(small, 1.0, d)
        a = np.where(small, 1.0 - t, np.sinh((1.0 - t) * ds) / np.sinh(ds))
        b = np.where(small, t, np.sinh(t * ds) / np.sinh(ds))
        return self.renormalize(a[..., None] * x + b[..., None] * y)

    def exp(self, x, v):
        nv = self.norm(x, v)
        safe = np.where(nv > 0.0, nv, 1.0)
        coef = np.where(nv > 0.0, np.sinh(nv) / safe, 1.0)
        return self.renormalize(np.cosh(nv)[..., None] * x + coef[..., None] * v)

    def log(self, x, y):
        q = lorentz(x, y)
        u = y - q[..., None] * x
        nu = np.sqrt(np.maximum(-lorentz(u, u), 0.0))
        d = self.distance(x, y)
        coef = np.where(nu > 0.0, d / np.where(nu > 0.0, nu, 1.0), 0.0)
        return coef[..., None] * u

    def norm(self, x, v):
        # spatial part of the boost of v to the origin; |v_s|^2 - v_0^2 would cancel far out
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        xs, vs = x[..., 1:], v[..., 1:]
        x0 = np.sqrt(1.0 + np.sum(xs**2, axis=-1))
        a = np.sum(xs * vs, axis=-1) / (x0 * (1.0 + x0))
        return np.linalg.norm(vs - a[..., None] * xs, axis=-1)

    def zero_tangent(self, x):
        return np.zeros_like(x)

    def random_direction(self, x, rng):
        # a unit vector at the origin carried to x, so no norm is recomputed far from the origin
        w = rng.normal(size=np.shape(x)[-1] - 1)
        return self.from_tangent_coords(x, w / np.linalg.norm(w))

    @staticmethod
    def _boost(x, inverse=False):
        """Lorentz boost taking x to (1, 0, ..., 0), or its inverse."""
        x0, xs = x[0], x[1:]
        d = len(x)
        m = np.empty((d, d))
        sign = 1.0 if inverse else -1.0
        m[0, 0] = x0
        m[0, 1:] = sign * xs
        m[1:, 0] = sign * xs
        m[1:, 1:] = np.eye(d - 1) + np.outer(xs, xs) / (1.0 + x0)
        return m

    def tangent_coords(self, x, v):
        return (np.asarray(v) @ self._boost(x).T)[..., 1:]

    def from_tangent_coords(self, x, c):
        c = np.asarray(c, dtype=float)
        full = np.concatenate([np.zeros(c.shape[:-1] + (1,)), c], axis=-1)
        return full @ self._boost(x, inverse=True).T

    def exp_coords(self, x, c):
        # walk from the origin, then boost; far from the origin the boost only adds terms,
        # while an ambient tangent vector there has already lost its radial part
        c = np.asarray(c, dtype=float)
        r = np.linalg.norm(c, axis=-1)
        coef = np.where(r > 0.0, np.sinh(r) / np.where(r > 0.0, r, 1.0), 1.0)
        at_origin = np.concatenate([np.cosh(r)[..., None], coef[..., None] * c], axis=-1)
        return self.renormalize(at_origin @ self._boost(x, inverse=True).T)

    def sq_dist_hessians(self, x, coords):
        # curvature -1: eigenvalue 1 along log_x a, d coth d across it
        c = np.asarray(coords, dtype=float)
        d = np.linalg.norm(c, axis=-1)
        u = c / np.where(d > 0.0, d, 1.0)[..., None]
        along = u[..., :, None] * u[..., None, :]
        k = c.shape[-1]
        return along + _s_coth_s(d)[..., None, None] * (np.eye(k) - along)

    def sample(self, rng, scale=1.0, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        direction = rng.normal(size=shape)
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        radius = scale * rng.uniform(size=shape[:-1])
        spatial = np.sinh(radius)[..., None] * direction
        return self.from_spatial(spatial)

    def sample_many(self, rng, count, scale=1.0):
        return self.sample(rng, scale, size=count)

    def to_json(self, x):
        return {"kind": "hyperboloid", "coords": [float(c) for c in np.ravel(x)]}

    def from_json(self, obj):
        coords = obj["coords"] if isinstance(obj, dict) else obj
        return self.check(coords)

    def describe(self):
        return {"kind": "hyperboloid", "dim": int(self.dim)}


@dataclass(frozen=True)
class SPD(RiemannianSpace):
    """Symmetric positive-definite n×n matrices with the affine-invariant metric."""

    n: int

    kind = "spd"

    def __post_init__(self):
        if self.n not in (2, 3, 4):
            raise InvalidInput(f"SPD order must be 2, 3 or 4, got {self.n!r}")

    def check(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim < 2 or arr.shape[-2:] != (self.n, self.n):
            raise InvalidInput(f"expected {self.n}x{self.n} matrices, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite matrix entries")
        arr = symmetrize(arr)
        cholesky(arr)
        return arr

    def _whiten(self, a, b):
        low = cholesky(a)
        inv = lower_inverse(low)
        return low, symmetrize(inv @ b @ np.swapaxes(inv, -1, -2))

    def distance(self, x, y):
        _, c = self._whiten(x, y)
        w, _ = jacobi_eigh(c)
        return np.sqrt(np.sum(np.log(np.maximum(w, 1e-300)) ** 2, axis=-1))

    def _sandwich(self, low, c, fn):
        w, v = jacobi_eigh(c)
        inner = (v * fn(w)[..., None, :]) @ np.swapaxes(v, -1, -2)
        return symmetrize(low @ inner @ np.swapaxes(low, -1, -2))

    def geodesic(self, x, y, t):
        low, c = self._whiten(x, y)
        t = np.asarray(t, dtype=float)[..., None]
        return self._sandwich(low, c, lambda w: np.maximum(w, 1e-300) ** t)

    def exp(self, x, v):
        low = cholesky(x)
        inv = lower_inverse(low)
        c = symmetrize(inv @ v @ np.swapaxes(inv, -1, -2))
        return self._sandwich(low, c, np.exp)

    def log(self, x, y):
        low, c = self._whiten(x, y)
        return self._sandwich(low, c, lambda w: np.log(np.maximum(w, 1e-300)))

    def norm(self, x, v):
        inv = lower_inverse(cholesky(x))
        c = inv @ v @ np.swapaxes(inv, -1, -2)
        return np.sqrt(np.sum(c * c, axis=(-2, -1)))

    def zero_tangent(self, x):
        return np.zeros_like(x)

    def tangent_coords(self, x, v):
        inv = lower_inverse(cholesky(x))
        w = inv @ np.asarray(v) @ inv.T
        iu = np.triu_indices(self.n)
        weight = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
        return w[..., iu[0], iu[1]] * weight

    def from_tangent_coords(self, x, c):
        c = np.asarray(c, dtype=float)
        iu = np.triu_indices(self.n)
        weight = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
        w = np.zeros(c.shape[:-1] + (self.n, self.n))
        w[..., iu[0], iu[1]] = c / weight
        w = w + np.swapaxes(w, -1, -2) - w * np.eye(self.n)
        low = cholesky(x)
        return low @ w @ low.T

    def sq_dist_hessians(self, x, coords):
        # in the frame whitened at x, with log_x a = U diag(l) U^T, the Hessian of 1/2 d(., a)^2
        # scales the (i, j) mode of U^T xi U by s coth s, s = (l_i - l_j) / 2
        c = np.asarray(coords, dtype=float)
        n, k = self.n, c.shape[-1]
        iu = np.triu_indices(n)
        weight = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))

        def to_mat(v):
            w = np.zeros(v.shape[:-1] + (n, n))
            w[..., iu[0], iu[1]] = v / weight
            return w + np.swapaxes(w, -1, -2) - w * np.eye(n)

        l, U = jacobi_eigh(to_mat(c))
        phi = _s_coth_s(0.5 * (l[..., :, None] - l[..., None, :]))
        basis = to_mat(np.eye(k))
        Ut = np.swapaxes(U, -1, -2)
        rotated = Ut[:, None] @ basis[None] @ U[:, None]
        images = U[:, None] @ (phi[:, None] * rotated) @ Ut[:, None]
        cols = images[..., iu[0], iu[1]] * weight
        return np.swapaxes(cols, -1, -2)

    def random_direction(self, x, rng):
        low = cholesky(x)
        s = symmetrize(rng.normal(size=(self.n, self.n)))
        s /= np.sqrt(np.sum(s * s))
        return low @ s @ low.T

    def sample(self, rng, scale=1.0, size=None):
        shape = (self.n, self.n) if size is None else (size, self.n, self.n)
        s = symmetrize(rng.normal(size=shape))
        fro = np.sqrt(np.sum(s * s, axis=(-2, -1)))
        radius = scale * rng.uniform(size=shape[:-2])
        s = s * (radius / fro)[..., None, None]
        w, v = jacobi_eigh(s)
        return symmetrize((v * np.exp(w)[..., None, :]) @ np.swapaxes(v, -1, -2))

    def sample_many(self, rng, count, scale=1.0):
        return self.sample(rng, scale, size=count)

    def to_json(self, x):
        return {"kind": "spd", "coords": [float(c) for c in np.ravel(x)]}

    def from_json(self, obj):
        coords = obj["coords"] if isinstance(obj, dict) else obj
        arr = np.asarray(coords, dtype=float)
        if arr.ndim == 1:
            if arr.size != self.n * self.n:
                raise InvalidInput(f"SPD({self.n}) row needs {self.n * self.n} entries, got {arr.size}")
            arr = arr.reshape(self.n, self.n)
        return self.check(arr)

    def describe(self):
        return {"kind": "spd", "n": int(self.n)}


@dataclass(frozen=True)
class Product(RiemannianSpace):
    """ℓ²-product: d((x_i), (y_i))^2 = sum_i d_i(x_i, y_i)^2. Points are tuples."""

    factors: tuple

    kind = "product"

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise InvalidInput("product needs at least one factor")

    @property
    def batched(self):
        return all(f.batched for f in self.factors)

    @property
    def riemannian(self):
        return all(f.riemannian for f in self.factors)

    def _pairs(self, x):
        if not isinstance(x, (tuple, list)) or len(x) != len(self.factors):
            raise InvalidInput(f"product point needs {len(self.factors)} components")
        return zip(self.factors, x)

    def check(self, x):
        return tuple(f.check(c) for f, c in self._pairs(x))

    def distance(self, x, y):
        return np.sqrt(sum(f.distance(a, b) ** 2 for f, a, b in zip(self.factors, x, y)))

    def geodesic(self, x, y, t):
        return tuple(f.geodesic(a, b, t) for f, a, b in zip(self.factors, x, y))

    def exp(self, x, v):
        return tuple(f.exp(a, b) for f, a, b in zip(self.factors, x, v))

    def log(self, x, y):
        return tuple(f.log(a, b) for f, a, b in zip(self.factors, x, y))

    def norm(self, x, v):
        return np.sqrt(sum(f.norm(a, b) ** 2 for f, a, b in zip(self.factors, x, v)))

    def zero_tangent(self, x):
        return tuple(f.zero_tangent(a) for f, a in zip(self.factors, x))

    def tangent_coords(self, x, v):
        return np.concatenate([f.tangent_coords(a, b) for f, a, b in zip(self.factors, x, v)], axis=-1)

    def from_tangent_coords(self, x, c):
        out, k = [], 0
        for f, a in zip(self.factors, x):
            m = f.frame_dim(a)
            out.append(f.from_tangent_coords(a, c[..., k : k + m]))
            k += m
        return tuple(out)

    def exp_coords(self, x, c):
        out, k = [], 0
        for f, a in zip(self.factors, x):
            m = f.frame_dim(a)
            out.append(f.exp_coords(a, c[..., k : k + m]))
            k += m
        return tuple(out)

    def sq_dist_hessians(self, x, coords):
        c = np.asarray(coords, dtype=float)
        m, k = c.shape
        out = np.zeros((m, k, k))
        start = 0
        for f, a in zip(self.factors, x):
            size = np.shape(f.tangent_coords(a, f.zero_tangent(a)))[-1]
            block = f.sq_dist_hessians(a, c[:, start : start + size])
            if block is None:
                return None
            out[:, start : start + size, start : start + size] = block
            start += size
        return out

    def random_direction(self, x, rng):
        parts = [f.random_direction(a, rng) * rng.normal() for f, a in zip(self.factors, x)]
        total = self.norm(x, tuple(parts))
        return tuple(p / total for p in parts)

    def sample(self, rng, scale=1.0):
        return tuple(f.sample(rng, scale) for f in self.factors)

    def sample_many(self, rng, count, scale=1.0):
        if self.batched:
            return tuple(f.sample_many(rng, count, scale) for f in self.factors)
        return [self.sample(rng, scale) for _ in range(count)]

    def to_json(self, x):
        return {"kind": "product", "coords": [f.to_json(c) for f, c in zip(self.factors, x)]}

    def from_json(self, obj):
        coords = obj["coords"] if isinstance(obj, dict) else obj
        return tuple(f.from_json(c) for f, c in self._pairs(coords))

    def describe(self):
        return {"kind": "product", "factors": [f.describe() for f in self.factors]}


def tangent_combination(space, coeffs, vectors):
    """sum_i coeffs[i] * vectors[i] for array or tuple tangent vectors."""
    if isinstance(space, Product):
        return tuple(
            tangent_combination(f, coeffs, [v[k] for v in vectors])
            for k, f in enumerate(space.factors)
        )
    out = coeffs[0] * vectors[0]
    for c, v in zip(coeffs[1:], vectors[1:]):
        out = out + c * v
    return out
