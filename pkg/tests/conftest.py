import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hflow.geometry import SPD, Euclidean, Hyperboloid, MetricTree, Product


def tripod():
    return MetricTree.star(3)


def backends():
    """The five backends named in the CAT(0) criterion."""
    return {
        "euclidean": Euclidean(3),
        "hyperboloid": Hyperboloid(2),
        "spd": SPD(3),
        "tree": MetricTree.star(5, [1.0, 2.0, 0.5, 1.5, 1.0]),
        "product": Product([Euclidean(2), Hyperboloid(2)]),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(backends()))
def backend(request):
    return backends()[request.param]


def catalogue():
    """Named catalogue functionals with a sampler of points in their domain.

    Every functional kind appears on every backend where it is implemented.
    """
    from hflow.functionals import Busemann, Displacement, Distance, Indicator, SquaredDistance, fermat_weber
    from hflow.geometry import Ball, EuclideanRigid, Interval, TreeAutomorphism, TreeSpan

    e1, e2 = Euclidean(1), Euclidean(2)
    hyp = Hyperboloid(2)
    spd = SPD(2)
    tri = MetricTree.star(3)
    prod = Product([e1, hyp])
    r = np.random.default_rng(2024)
    a2 = [np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.2, 1.3])]
    ha = [hyp.sample(r) for _ in range(3)]
    sa = [spd.sample(r) for _ in range(3)]
    ball = Ball(e2, np.array([0.5, 0.5]), 0.7)
    span = TreeSpan(tri, (tri.point(0, 0.4), tri.point(1, 0.6)))

    def draw(space, scale=1.0):
        return lambda rng: space.sample(rng, scale) if not isinstance(space, MetricTree) else space.sample(rng)

    def inside(C, space):
        def sampler(rng):
            return C.project(space.sample(rng, 2.0) if not isinstance(space, MetricTree) else space.sample(rng))

        return sampler

    entries = [
        ("r1_half_square", SquaredDistance(e1, np.array([0.3]), 1.0), draw(e1, 2.0)),
        ("r1_abs", Distance(e1, np.array([0.0]), 1.0), draw(e1, 2.0)),
        ("r1_interval", Indicator(Interval(e1, 0.0, 1.0)), inside(Interval(e1, 0.0, 1.0), e1)),
        ("r2_median", fermat_weber(e2, a2), draw(e2, 2.0)),
        ("r2_mean", fermat_weber(e2, a2, p=2), draw(e2, 2.0)),
        ("r2_ball", Indicator(ball), inside(ball, e2)),
        ("r2_busemann", Busemann.of(e2, np.zeros(2), np.array([1.0, 0.0])), draw(e2, 2.0)),
        ("r2_rotation", Displacement(EuclideanRigid.rotation2d(e2, np.pi / 2)), draw(e2, 2.0)),
        ("tree_dist", Distance(tri, tri.node("l0"), 1.0), draw(tri)),
        ("tree_median", fermat_weber(tri, [tri.node(f"l{i}") for i in range(3)]), draw(tri)),
        ("tree_mean", fermat_weber(tri, [tri.node("l0"), tri.point(1, 0.5)], p=2), draw(tri)),
        ("tree_span", Indicator(span), inside(span, tri)),
        ("tree_busemann", Busemann.of(tri, tri.node("c"), "l2"), draw(tri)),
        ("tree_swap", Displacement(TreeAutomorphism(tri, {"l0": "l1", "l1": "l0"})), draw(tri)),
        ("hyp_dist", Distance(hyp, ha[0], 1.0), draw(hyp)),
        ("hyp_square", SquaredDistance(hyp, ha[1], 2.0), draw(hyp)),
        ("hyp_median", fermat_weber(hyp, ha), draw(hyp)),
        ("hyp_busemann", Busemann.of(hyp, hyp.from_spatial([0.0, 0.0]), np.array([1.0, 0.0])), draw(hyp)),
        ("spd_mean", fermat_weber(spd, sa, p=2), draw(spd)),
        ("spd_median", fermat_weber(spd, sa), draw(spd)),
        ("product_square", SquaredDistance(prod, (np.array([0.5]), ha[2]), 1.0), draw(prod)),
    ]
    return entries
