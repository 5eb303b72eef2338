import math

import numpy as np
import pytest
from conftest import catalogue, tripod
from hypothesis import given, settings
from hypothesis import strategies as st

from hflow.errors import InvalidInput, UnsupportedVariant
from hflow.functionals import (
    Busemann,
    Displacement,
    Distance,
    Indicator,
    OmegaFunctional,
    SequenceWindow,
    SquaredDistance,
    convexity_slack,
    fermat_weber,
    functional_from_json,
    omega_tail,
)
from hflow.geometry import SPD, Euclidean, EuclideanRigid, Hyperboloid, Interval, MetricTree

CATALOGUE = catalogue()
IDS = [name for name, _, _ in CATALOGUE]


# evaluation examples


def test_indicator_values():
    e1 = Euclidean(1)
    f = Indicator(Interval(e1, 0.0, 1.0))
    assert f(np.array([0.5])) == 0.0
    assert f(np.array([2.0])) == math.inf


def test_euclidean_busemann_value():
    e2 = Euclidean(2)
    f = Busemann.of(e2, np.zeros(2), np.array([1.0, 0.0]))
    assert f(np.array([3.0, 4.0])) == pytest.approx(-3.0, abs=1e-12)


def test_tree_busemann_value():
    tri = tripod()
    f = Busemann.of(tri, tri.node("c"), "l2")
    # along the ray the function decreases at unit rate; off it, distance back to the branch point
    assert f(tri.node("c")) == pytest.approx(0.0, abs=1e-12)
    assert f(tri.node("l2")) == pytest.approx(-1.0, abs=1e-12)
    assert f(tri.point(0, 0.3)) == pytest.approx(0.3, abs=1e-12)


def test_busemann_rejected_on_spd():
    spd = SPD(2)
    with pytest.raises(UnsupportedVariant):
        Busemann.of(spd, np.eye(2), np.eye(2))


def test_rotation_displacement():
    e2 = Euclidean(2)
    f = Displacement(EuclideanRigid.rotation2d(e2, np.pi / 2))
    assert f(np.array([1.0, 0.0])) == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_fermat_weber_normalized_flag():
    e1 = Euclidean(1)
    pts = [np.array([0.0]), np.array([1.0])]
    assert fermat_weber(e1, pts).normalized
    assert not fermat_weber(e1, pts, weights=[1.0, 1.0]).normalized
    with pytest.raises(UnsupportedVariant):
        fermat_weber(e1, pts, p=3)


# convexity slack


def test_slack_equality_for_flat_square():
    e1 = Euclidean(1)
    f = SquaredDistance(e1, np.array([0.0]), 2.0)
    assert convexity_slack(f, 1.0, np.array([-1.0]), np.array([1.0]), 0.5) == pytest.approx(0.0, abs=1e-15)


def test_slack_of_absolute_value():
    e1 = Euclidean(1)
    f = Distance(e1, np.array([0.0]), 1.0)
    assert convexity_slack(f, 0.0, np.array([-1.0]), np.array([1.0]), 0.5) == pytest.approx(1.0, abs=1e-15)


def test_slack_of_tree_distance(rng):
    tri = tripod()
    f = Distance(tri, tri.point(0, 0.6), 1.0)
    for _ in range(200):
        x, y = tri.sample(rng), tri.sample(rng)
        assert convexity_slack(f, 0.0, x, y, rng.uniform()) >= -1e-12


def test_slack_rejects_bad_input():
    e1 = Euclidean(1)
    f = Indicator(Interval(e1, 0.0, 1.0))
    with pytest.raises(InvalidInput):
        convexity_slack(f, 0.0, np.array([0.5]), np.array([2.0]), 0.5)
    g = Distance(e1, np.array([0.0]), 1.0)
    with pytest.raises(InvalidInput):
        convexity_slack(g, 0.0, np.array([0.5]), np.array([2.0]), 1.5)
    with pytest.raises(InvalidInput):
        convexity_slack(g, -1.0, np.array([0.5]), np.array([2.0]), 0.5)


# about 10^4 triples spread over the catalogue
TRIPLES_PER_FUNCTIONAL = 10_000 // len(CATALOGUE) + 1


@pytest.mark.parametrize("name,f,draw", CATALOGUE, ids=IDS)
def test_catalogue_is_convex(name, f, draw):
    rng = np.random.default_rng(7)
    worst = math.inf
    for _ in range(TRIPLES_PER_FUNCTIONAL):
        x, y, t = draw(rng), draw(rng), rng.uniform()
        scale = 1.0 + abs(f(x)) + abs(f(y))
        worst = min(worst, convexity_slack(f, 0.0, x, y, t) / scale)
    assert worst >= -1e-9


@pytest.mark.parametrize("space", [Euclidean(2), Hyperboloid(2), SPD(2)], ids=["euclidean", "hyperboloid", "spd"])
def test_squared_distance_strong_convexity(space, rng):
    a = space.sample(rng)
    for w in (0.5, 2.0):
        f = SquaredDistance(space, a, w)
        for _ in range(100):
            x, y, t = space.sample(rng, 2.0), space.sample(rng, 2.0), rng.uniform()
            assert convexity_slack(f, w / 2.0, x, y, t) >= -1e-9 * (1.0 + f(x) + f(y))


# Lipschitz bounds


def _lipschitz_cases():
    for name, f, draw in CATALOGUE:
        if isinstance(f, Distance):
            yield name, f, draw, f.weight
        elif isinstance(f, Busemann):
            yield name, f, draw, 1.0
        elif isinstance(f, Displacement):
            yield name, f, draw, 2.0
        elif name.endswith("median"):
            yield name, f, draw, 1.0


@pytest.mark.parametrize("name,f,draw,L", list(_lipschitz_cases()), ids=lambda v: v if isinstance(v, str) else "")
def test_lipschitz_bounds(name, f, draw, L):
    rng = np.random.default_rng(11)
    for _ in range(300):
        x, y = draw(rng), draw(rng)
        assert abs(f(x) - f(y)) <= L * float(f.space.distance(x, y)) + 1e-9


# omega over a window


def test_omega_constant_window():
    e2 = Euclidean(2)
    a = np.array([1.0, 2.0])
    w = SequenceWindow(e2, [a] * 5)
    x = np.array([4.0, 6.0])
    assert omega_tail(w, x) == pytest.approx(25.0)


def test_omega_alternating_window():
    e1 = Euclidean(1)
    w = SequenceWindow(e1, [np.array([float(k % 2)]) for k in range(10)])
    assert omega_tail(w, np.array([0.5])) == pytest.approx(0.25)


def test_omega_star_tips():
    star = MetricTree.star(20)
    w = SequenceWindow(star, [star.node(f"l{k}") for k in range(20)])
    assert omega_tail(w, star.node("c")) == pytest.approx(1.0, abs=1e-15)


def test_window_must_be_nonempty():
    with pytest.raises(InvalidInput):
        SequenceWindow(Euclidean(1), [])


def test_window_slicing():
    e1 = Euclidean(1)
    w = SequenceWindow(e1, [np.array([float(k)]) for k in range(10)], start=5)
    assert len(w.second_half()) == 5 and w.second_half().start == 10
    assert len(w.thinned(3)) == 4


@pytest.mark.parametrize(
    "space", [Euclidean(2), Hyperboloid(2), SPD(2), MetricTree.star(6)], ids=["euclidean", "hyperboloid", "spd", "tree"]
)
def test_omega_strongly_convex(space, rng):
    pts = [space.sample(rng) for _ in range(12)]
    f = OmegaFunctional(SequenceWindow(space, pts))
    for _ in range(200):
        x, y, t = space.sample(rng), space.sample(rng), rng.uniform()
        assert convexity_slack(f, 1.0, x, y, t) >= -1e-9 * (1.0 + f(x) + f(y))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=8),
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(0, 1),
)
def test_omega_strongly_convex_on_line(vals, x, y, t):
    e1 = Euclidean(1)
    f = OmegaFunctional(SequenceWindow(e1, [np.array([v]) for v in vals]))
    assert convexity_slack(f, 1.0, np.array([x]), np.array([y]), t) >= -1e-9 * (1.0 + f(np.array([x])) + f(np.array([y])))


# weak lower semicontinuity along a weakly convergent star sequence


def test_weak_lsc_on_star_tips():
    # tips of distinct unit legs converge weakly, not strongly, to the center
    star = MetricTree.star(60)
    tips = SequenceWindow(star, [star.node(f"l{k}") for k in range(10, 60)], start=10)
    center = star.node("c")
    fs = [
        Distance(star, star.point(3, 0.5), 1.0),
        SquaredDistance(star, star.node("l1"), 1.0),
        fermat_weber(star, [star.node("l0"), star.node("l1"), star.node("l2")]),
        fermat_weber(star, [star.point(0, 0.2), star.node("l4")], p=2),
        Busemann.of(star, center, "l5"),
        OmegaFunctional(SequenceWindow(star, [star.node("l0"), star.node("l1")])),
    ]
    for f in fs:
        assert tips.values(f).min() >= f(center) - 1e-8


# JSON


@pytest.mark.parametrize("name,f,draw", CATALOGUE, ids=IDS)
def test_json_round_trip(name, f, draw):
    g = functional_from_json(f.space, f.to_json())
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = draw(rng)
        assert g(x) == pytest.approx(f(x), rel=1e-12, abs=1e-12)


def test_json_sum_of_weighted_terms():
    e1 = Euclidean(1)
    f = functional_from_json(
        e1,
        {
            "kind": "sum",
            "terms": [
                {"kind": "dist", "p": 1, "anchor": [0.0], "w": 0.25},
                {"kind": "dist", "p": 1, "anchor": [1.0], "w": 0.75},
            ],
        },
    )
    assert f(np.array([0.5])) == pytest.approx(0.5)
    assert f(np.array([2.0])) == pytest.approx(0.25 * 2 + 0.75 * 1)


def test_json_rejects_unknown_kind():
    with pytest.raises(InvalidInput):
        functional_from_json(Euclidean(1), {"kind": "energy"})
    with pytest.raises(InvalidInput):
        functional_from_json(Euclidean(1), {"p": 1})
