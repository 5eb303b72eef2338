"""Asymptotic relations between spaces X^n and a limit X, and convergence checks across them.

An instance carries a reference map phi^n: X^n -> X with declared distortion
eps_n and a lift psi^n: X -> X^n with d(phi^n psi^n x, x) <= eps_n. Convergence
x_n -> x across spaces is read as d(phi^n x_n, x) -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationFailure, InvalidInput, SolverFailure
from .flows import semigroup_fixed
from .functionals import SquaredDistance, WeightedSum
from .geometry import Euclidean, InnerProduct, MetricTree, TreePoint
from .mosco import _grid
from .prox import resolvent


@dataclass(eq=False)
class AsymptoticRelationInstance:
    """X^n, X, phi^n, psi^n and eps_n, all as callables of n.

    ``radius`` bounds the region on which the distortion is declared:
    samples are drawn within that distance of ``origin`` in X.
    """

    space: object
    limit: object
    phi: object
    psi: object
    epsilon: object
    origin: object
    radius: float = 1.0
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def lift_many(self, n, xs):
        return [self.psi(n, x) for x in xs]

    def sample_limit(self, rng):
        """Random point of X within ``radius`` of the origin."""
        X = self.limit
        p = X.sample(rng, self.radius)
        d = float(X.distance(self.origin, p))
        if d > self.radius:
            p = X.geodesic(self.origin, p, self.radius / d)
        return p

    def to_json(self):
        return {"kind": self.name, **self.params}


def identity_instance(space, origin, radius=1.0):
    return AsymptoticRelationInstance(
        space=lambda n: space,
        limit=space,
        phi=lambda n, p: p,
        psi=lambda n, x: x,
        epsilon=lambda n: 0.0,
        origin=origin,
        radius=radius,
        name="identity",
    )


def _rescale_tree_point(dst, p, ratio):
    if p.node is not None:
        return TreePoint(node=p.node)
    return dst.point(p.edge, p.offset * ratio)


def scaled_tree_instance(tree, rate=1.0):
    """X^n = ``tree`` with every edge scaled by L_n = 1 + rate/n; phi^n divides lengths by L_n.

    phi^n is a homothety, so |d(phi x, phi y) - d_n(x, y)| = d_n(x, y) (1 - 1/L_n),
    at most diam(X) rate/n; psi^n is its exact inverse.
    """
    nodes = tree.labels
    base_edges = [(tree.labels[u], tree.labels[v], length) for u, v, length in tree.edges]
    cache = {}

    def space(n):
        if n not in cache:
            L = 1.0 + rate / n
            cache[n] = MetricTree(nodes, [(u, v, length * L) for u, v, length in base_edges])
        return cache[n]

    diam = float(tree.dist.max())
    return AsymptoticRelationInstance(
        space=space,
        limit=tree,
        phi=lambda n, p: _rescale_tree_point(tree, p, 1.0 / (1.0 + rate / n)),
        psi=lambda n, x: _rescale_tree_point(space(n), x, 1.0 + rate / n),
        epsilon=lambda n: diam * rate / n,
        origin=tree.node(tree.labels[0]),
        radius=diam,
        name="scaled_tree",
        params={"rate": rate},
    )


def scaled_tripod(legs=3):
    """Unit star with ``legs`` legs of length 1 + 1/n; eps_n = 2/n."""
    inst = scaled_tree_instance(MetricTree.star(legs), 1.0)
    inst.name = "scaled_tripod"
    inst.params = {"legs": legs, "rate": "1/n"}
    return inst


DEFAULT_PERTURBATION = ((1.0, 0.5), (0.5, 0.0))


def pd_norm_instance(perturbation=DEFAULT_PERTURBATION, radius=1.0):
    """X^n = R^d with Gram matrix I + E/n, X = Euclidean R^d, phi^n = psi^n = identity.

    On the ball of radius R, |(|v|_{A_n}) - |v|| <= |v| rho(E)/n <= 2 R rho(E)/n.
    """
    E = np.asarray(perturbation, dtype=float)
    dim = E.shape[0]
    rho = float(np.max(np.abs(np.linalg.eigvalsh(E))))
    cache = {}

    def space(n):
        if n not in cache:
            cache[n] = InnerProduct(np.eye(dim) + E / n)
        return cache[n]

    return AsymptoticRelationInstance(
        space=space,
        limit=Euclidean(dim),
        phi=lambda n, p: p,
        psi=lambda n, x: x,
        epsilon=lambda n: 2.0 * radius * rho / n,
        origin=np.zeros(dim),
        radius=radius,
        name="pd_norm",
        params={"perturbation": E.tolist(), "radius": radius, "rate": "1/n"},
    )


INSTANCES = {
    "scaled_tripod": scaled_tripod,
    "pd_norm": pd_norm_instance,
}


def instance_from_json(obj):
    """Built-in instance from {"kind": id, ...}; the "rate" key is descriptive only."""
    obj = dict(obj)
    kind = obj.pop("kind", None)
    obj.pop("rate", None)
    if kind not in INSTANCES:
        raise InvalidInput(f"unknown asymptotic relation {kind!r}; known: {sorted(INSTANCES)}")
    try:
        return INSTANCES[kind](**obj)
    except TypeError as err:
        raise InvalidInput(f"bad parameters for instance {kind!r}: {err}") from None


# axioms ---------------------------------------------------------------------------


@dataclass
class AxiomReport:
    """Per-n maxima of the sampled residuals.

    ``distortion``: |d(phi x, phi y) - d_n(x, y)|; ``lift``: d(phi psi x, x);
    ``a3``: |d_n(x_n, y_n) - d(x, y)| - d(phi x_n, x) - d(phi y_n, y);
    ``a4``: d(phi y_n, x) - d(phi x_n, x) - d_n(x_n, y_n).
    """

    grid: list
    epsilon: list
    distortion: list
    lift: list
    a3: list
    a4: list
    structural: tuple = ("A1", "A2")

    def rows(self):
        return [list(r) for r in zip(self.grid, self.epsilon, self.distortion, self.lift, self.a3, self.a4)]

    def to_json(self):
        return {
            "columns": ["n", "epsilon_n", "distortion", "lift", "a3", "a4"],
            "rows": self.rows(),
            "structural": list(self.structural),
        }


def _nearby(space, p, rng, scale):
    """A point at distance about ``scale`` from p, toward a random sample."""
    q = space.sample(rng, 1.0)
    d = float(space.distance(p, q))
    if d == 0.0:
        return p
    return space.geodesic(p, q, min(1.0, scale * float(rng.uniform()) / d))


def ar_axioms_check(inst, sample_count=200, tol=1e-12, N=1000, grid=None, seed=0):
    """Sample the distortion, lift, (A3) and (A4) residuals on a grid of n.

    Pairs in X^n are lifts of random points of X; their targets in X are
    random points within 1/n of the images. A distortion or lift
    residual above eps_n + tol raises :class:`CertificationFailure` with the
    offending sample as witness; (A1) and (A2) hold by construction.
    """
    grid = _grid(N, 1, grid)
    rng = np.random.default_rng(seed)
    X = inst.limit
    eps_col, dist_col, lift_col, a3_col, a4_col = [], [], [], [], []
    for n in grid:
        Xn = inst.space(n)
        eps = float(inst.epsilon(n))
        worst_dist = worst_lift = worst_a3 = worst_a4 = 0.0
        for _ in range(sample_count):
            u, v = inst.sample_limit(rng), inst.sample_limit(rng)
            xn, yn = inst.psi(n, u), inst.psi(n, v)
            lift = max(float(X.distance(inst.phi(n, xn), u)), float(X.distance(inst.phi(n, yn), v)))
            if lift > eps + tol:
                raise CertificationFailure(
                    f"lift residual {lift:.3g} exceeds eps_{n} = {eps:.3g}", witness={"n": n, "x": u}
                )
            dn = float(Xn.distance(xn, yn))
            px, py = inst.phi(n, xn), inst.phi(n, yn)
            distortion = abs(float(X.distance(px, py)) - dn)
            if distortion > eps + tol:
                raise CertificationFailure(
                    f"distortion {distortion:.3g} exceeds eps_{n} = {eps:.3g}",
                    witness={"n": n, "x": xn, "y": yn},
                )
            # targets near the images: x_n -> x and y_n -> y up to the offsets
            x = _nearby(X, px, rng, 1.0 / n)
            y = _nearby(X, py, rng, 1.0 / n)
            ox, oy = float(X.distance(px, x)), float(X.distance(py, y))
            a3 = abs(dn - float(X.distance(x, y))) - ox - oy
            a4 = float(X.distance(py, x)) - ox - dn
            worst_dist = max(worst_dist, distortion)
            worst_lift = max(worst_lift, lift)
            worst_a3 = max(worst_a3, a3)
            worst_a4 = max(worst_a4, a4)
        eps_col.append(eps)
        dist_col.append(worst_dist)
        lift_col.append(worst_lift)
        a3_col.append(worst_a3)
        a4_col.append(worst_a4)
    return AxiomReport(grid, eps_col, dist_col, lift_col, a3_col, a4_col)


def geodesic_convergence_check(inst, endpoints, t_grid=None, N=1000, grid=None):
    """max over t of d(phi^n(gamma^n(t)), gamma(t)) with gamma^n joining the lifted endpoints.

    Returns ``(grid, gaps)``; the last entry is the gap at the largest n.
    """
    x, y = endpoints
    X = inst.limit
    ts = np.linspace(0.0, 1.0, 11) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any((ts < 0.0) | (ts > 1.0)):
        raise InvalidInput("t_grid must lie in [0, 1]")
    grid = _grid(N, 1, grid)
    gaps = []
    for n in grid:
        Xn = inst.space(n)
        xn, yn = inst.psi(n, x), inst.psi(n, y)
        gap = 0.0
        for t in ts:
            image = inst.phi(n, Xn.geodesic(xn, yn, float(t)))
            gap = max(gap, float(X.distance(image, X.geodesic(x, y, float(t)))))
        gaps.append(gap)
    return grid, gaps


def distance_convergence_gaps(inst, xs, ys, x, y, grid):
    """Per n: d_n(x_n, y_n) - d(x, y) and d(phi x_n, x), for sequences given as callables of n.

    Along weakly convergent x_n and y_n -> y the first column has liminf >= 0;
    it tends to 0 exactly when the second does.
    """
    X = inst.limit
    dxy = float(X.distance(x, y))
    rows = []
    for n in grid:
        Xn = inst.space(n)
        xn, yn = xs(n), ys(n)
        rows.append((n, float(Xn.distance(xn, yn)) - dxy, float(X.distance(inst.phi(n, xn), x))))
    return rows


# functionals across spaces ----------------------------------------------------------


@dataclass(eq=False)
class VaryingFunctionalSequence:
    """n -> f^n on X^n with limit f on X.

    ``recovery(x, n)`` returns y_n in X^n with phi^n y_n -> x and f^n(y_n) -> f(x);
    the lift psi^n is used when it is omitted. ``rate(n)`` bounds the gaps.
    """

    inst: AsymptoticRelationInstance
    generator: object
    limit: object
    recovery: object = None
    rate: object = None
    name: str = "custom"

    def __call__(self, n):
        return self.generator(n)

    def lift(self, x, n):
        if self.recovery is not None:
            return self.recovery(x, n)
        return self.inst.psi(n, x)


def tree_quadratics(inst, anchors=None, weight=2.0, absolute=False):
    """f^n = (w/2) d_n(., a^n)^2 on the tree instance, f = (w/2) d(., a)^2.

    By default a^n = psi^n(a) for the given anchors (vertices map to vertices,
    so the leaf tips move with the legs). With ``absolute=True`` the anchor keeps
    its absolute offset from its edge's first vertex, so phi^n a^n drifts by O(1/n).
    """
    X = inst.limit
    if anchors is None:
        anchors = [X.node(X.labels[1])]
    anchors = [X.check(a) for a in anchors]

    def anchor_n(a, n):
        if absolute and a.node is None:
            return inst.space(n).point(a.edge, a.offset)
        return inst.psi(n, a)

    def make(space, pts):
        terms = [SquaredDistance(space, p, weight) for p in pts]
        if len(terms) == 1:
            return terms[0]
        return WeightedSum(tuple((t, 1.0) for t in terms))

    return VaryingFunctionalSequence(
        inst,
        lambda n: make(inst.space(n), [anchor_n(a, n) for a in anchors]),
        make(X, anchors),
        name="tree_quadratics",
    )


def pd_quadratics(inst, anchor=None):
    """f^n = 1/2 |. - a|_{A_n}^2 on the PD-norm instance, limit 1/2 |. - a|^2."""
    dim = inst.limit.dim
    a = np.zeros(dim) if anchor is None else np.asarray(anchor, dtype=float)
    return VaryingFunctionalSequence(
        inst,
        lambda n: SquaredDistance(inst.space(n), a, 1.0),
        SquaredDistance(inst.limit, a, 1.0),
        name="pd_quadratics",
    )


@dataclass
class VaryingGapReport:
    grid: list
    env_gaps: list
    res_gaps: list
    epsilon: list
    failures: dict
    lam: float

    def rows(self):
        return [list(r) for r in zip(self.grid, self.env_gaps, self.res_gaps, self.epsilon)]

    def to_json(self, family="custom"):
        return {
            "family": family,
            "lambda": self.lam,
            "columns": ["n", "env", "res", "epsilon_n"],
            "gaps": self.rows(),
        }


def mosco_ar_check(inst, vseq, x, lam, N=1000, tol=1e-10, grid=None):
    """|f^n_lam(x_n) - f_lam(x)| and d(phi^n J^n_lam x_n, J_lam x) with x_n = psi^n x."""
    if not lam > 0.0:
        raise InvalidInput(f"lambda must be positive, got {lam}")
    grid = _grid(N, 1, grid)
    X = inst.limit
    limit = resolvent(vseq.limit, x, lam, tol, certify=False)
    env_gaps, res_gaps, eps, failures = [], [], [], {}
    for n in grid:
        xn = vseq.lift(x, n)
        try:
            res = resolvent(vseq(n), xn, lam, tol, certify=False)
        except SolverFailure as err:
            failures[n] = str(err)
            env_gaps.append(math.nan)
            res_gaps.append(math.nan)
        else:
            env_gaps.append(abs(res.objective - limit.objective))
            res_gaps.append(float(X.distance(inst.phi(n, res.point), limit.point)))
        eps.append(float(inst.epsilon(n)))
    return VaryingGapReport(grid, env_gaps, res_gaps, eps, failures, lam)


def semigroup_ar_check(inst, vseq, x, t, N=200, n_steps=100, tol=1e-10, grid=None):
    """d(phi^n (J^n_{t/m})^m x_n, (J_{t/m})^m x) with m = n_steps and x_n = psi^n x."""
    grid = _grid(N, 1, grid)
    X = inst.limit
    target = semigroup_fixed(vseq.limit, x, t, n_steps, tol)
    gaps = []
    for n in grid:
        y = semigroup_fixed(vseq(n), vseq.lift(x, n), t, n_steps, tol)
        gaps.append(float(X.distance(inst.phi(n, y), target)))
    return grid, gaps
