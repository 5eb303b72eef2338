"""Isometries of the concrete backends."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput
from .jacobi import symmetrize
from .spaces import SPD, Euclidean, Hyperboloid
from .tree import MetricTree, TreePoint

ISOMETRY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EuclideanRigid:
    """x -> Q x + v with Q orthogonal."""

    space: Euclidean
    Q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.Q, dtype=float)
        v = np.asarray(self.v, dtype=float)
        d = self.space.dim
        if q.shape != (d, d) or v.shape != (d,):
            raise InvalidInput(f"rigid motion of R^{d} needs a {d}x{d} matrix and a length-{d} vector")
        if np.max(np.abs(q.T @ q - np.eye(d))) > ISOMETRY_TOL:
            raise InvalidInput("Q is not orthogonal")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "v", v)

    @classmethod
    def rotation2d(cls, space, angle, v=(0.0, 0.0)):
        c, s = np.cos(angle), np.sin(angle)
        return cls(space, np.array([[c, -s], [s, c]]), np.asarray(v, dtype=float))

    def __call__(self, x):
        return x @ self.Q.T + self.v

    def to_json(self):
        return {"kind": "rigid", "Q": self.Q.tolist(), "v": self.v.tolist()}


@dataclass(frozen=True, eq=False)
class TreeAutomorphism:
    """Node permutation that maps edges onto edges of equal length."""

    space: MetricTree
    mapping: tuple

    def __post_init__(self):
        tree = self.space
        if isinstance(self.mapping, dict):
            perm = [tree.index[self.mapping.get(lbl, lbl)] for lbl in tree.labels]
        else:
            perm = [int(i) for i in self.mapping]
        n = len(tree.labels)
        if sorted(perm) != list(range(n)):
            raise InvalidInput("automorphism must be a permutation of the nodes")
        for u, v, length in tree.edges:
            k = tree.edge_of.get((perm[u], perm[v]))
            if k is None or abs(tree.edges[k][2] - length) > ISOMETRY_TOL * max(1.0, length):
                raise InvalidInput("permutation does not preserve edges and their lengths")
        object.__setattr__(self, "mapping", tuple(perm))

    def __call__(self, p):
        tree = self.space
        if p.node is not None:
            return TreePoint(node=self.mapping[p.node])
        u, v, _ = tree.edges[p.edge]
        k = tree.edge_of[(self.mapping[u], self.mapping[v])]
        if tree.edges[k][0] == self.mapping[u]:
            return tree.point(k, p.offset)
        return tree.point(k, tree.edges[k][2] - p.offset)

    def to_json(self):
        return {"kind": "tree_automorphism", "mapping": [self.space.labels[i] for i in self.mapping]}


@dataclass(frozen=True, eq=False)
class HyperbolicLorentz:
    """Orthochronous Lorentz transformation M with M^T J M = J."""

    space: Hyperboloid
    M: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.M, dtype=float)
        d = self.space.dim + 1
        if m.shape != (d, d):
            raise InvalidInput(f"Lorentz matrix must be {d}x{d}")
        j = np.diag([1.0] + [-1.0] * (d - 1))
        if np.max(np.abs(m.T @ j @ m - j)) > ISOMETRY_TOL * max(1.0, np.abs(m).max() ** 2):
            raise InvalidInput("matrix does not preserve the Lorentz form")
        if m[0, 0] <= 0.0:
            raise InvalidInput("matrix swaps the sheets of the hyperboloid")
        object.__setattr__(self, "M", m)

    @classmethod
    def boost(cls, space, rapidity, axis=1):
        m = np.eye(space.dim + 1)
        ch, sh = np.cosh(rapidity), np.sinh(rapidity)
        m[0, 0] = m[axis, axis] = ch
        m[0, axis] = m[axis, 0] = sh
        return cls(space, m)

    @classmethod
    def rotation(cls, space, angle, axes=(1, 2)):
        m = np.eye(space.dim + 1)
        i, k = axes
        c, s = np.cos(angle), np.sin(angle)
        m[i, i] = m[k, k] = c
        m[i, k], m[k, i] = -s, s
        return cls(space, m)

    def __call__(self, x):
        return Hyperboloid.renormalize(x @ self.M.T)

    def to_json(self):
        return {"kind": "lorentz", "M": self.M.tolist()}


@dataclass(frozen=True, eq=False)
class SPDCongruence:
    """X -> G X G^T with G invertible."""

    space: SPD
    G: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.G, dtype=float)
        n = self.space.n
        if g.shape != (n, n):
            raise InvalidInput(f"congruence matrix must be {n}x{n}")
        sv = np.linalg.svd(g, compute_uv=False)
        if sv[-1] <= 1e-12 * max(sv[0], 1.0):
            raise InvalidInput("congruence matrix is singular")
        object.__setattr__(self, "G", g)

    def __call__(self, x):
        return symmetrize(self.G @ x @ self.G.T)

    def to_json(self):
        return {"kind": "congruence", "G": self.G.tolist()}
