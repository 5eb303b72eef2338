import math

import numpy as np
import pytest
from oracles import FROZEN, flow_to_moving_anchor_gap, golden_min

from hflow.errors import InvalidInput, UnsupportedVariant
from hflow.functionals import SequenceWindow, SquaredDistance, fermat_weber
from hflow.geometry import Ball, Euclidean, Interval, MetricTree
from hflow.mosco import (
    FunctionalSequence,
    SetSequence,
    constant_sequence,
    constant_sets,
    envelope_resolvent_convergence,
    family_from_json,
    increasing_balls,
    log_grid,
    monotone_set_limit,
    mosco_check,
    nested_interval_indicators,
    nested_intervals,
    perturbed_fermat_weber,
    semigroup_convergence,
    star_anchor_drift,
    translated_quadratics,
    wijsman_check,
)
from hflow.prox import moreau_envelope

R1 = Euclidean(1)


def r(v):
    return np.array([float(v)])


def test_log_grid():
    assert log_grid(10) == [1, 2, 4, 8, 10]
    assert log_grid(8, first=3) == [3, 6, 8]
    with pytest.raises(InvalidInput):
        log_grid(2, first=3)


# envelopes and resolvents


def test_translated_quadratic_gaps():
    seq = translated_quadratics()
    grid = list(range(1, 1001))
    rep = envelope_resolvent_convergence(seq, r(2.0), 1.0, grid=grid)
    assert rep.passed
    assert np.allclose(rep.res_gaps, [1.0 / (2 * n) for n in grid], rtol=0, atol=1e-9)
    # f^n_1(2) = (2 - 1/n)^2 / 4 and f_1(2) = 1
    env = [abs((2.0 - 1.0 / n) ** 2 / 4.0 - 1.0) for n in grid]
    assert np.allclose(rep.env_gaps, env, rtol=0, atol=1e-9)


def test_constant_sequence_has_zero_gaps():
    f = fermat_weber(Euclidean(2), [np.zeros(2), np.ones(2)])
    rep = envelope_resolvent_convergence(constant_sequence(f), np.array([2.0, -1.0]), 0.7, N=64)
    assert max(rep.env_gaps) == 0.0 and max(rep.res_gaps) == 0.0


def test_perturbed_fermat_weber_against_golden_oracle():
    seq = perturbed_fermat_weber()
    x, lam = r(2.0), 1.5
    rep = envelope_resolvent_convergence(seq, x, lam, N=1000, tol=1e-12)
    assert rep.passed
    limit = golden_min(lambda y: 0.5 * abs(y) + 0.5 * abs(y - 1) + (y - 2.0) ** 2 / (2 * lam), -5, 5)
    for n, gap in zip(rep.grid, rep.res_gaps):
        wa, wb = 0.5 + 1.0 / n, 0.5 - 1.0 / n
        ref = golden_min(lambda y: wa * abs(y) + wb * abs(y - 1) + (y - 2.0) ** 2 / (2 * lam), -5, 5)
        assert gap == pytest.approx(abs(ref - limit), abs=1e-6)
        assert gap <= 2 * lam / n + 1e-9


def test_perturbed_fermat_weber_starts_at_three():
    with pytest.raises(InvalidInput):
        perturbed_fermat_weber()(2)


@pytest.mark.parametrize(
    "seq,x",
    [
        (translated_quadratics(dim=2, anchor=[1.0, 0.0], shift=[0.0, 1.0]), np.array([0.5, -0.5])),
        (perturbed_fermat_weber(), r(0.3)),
        (nested_interval_indicators(), r(1.3)),
        (star_anchor_drift(legs=4), None),
    ],
    ids=["translated", "fermat_weber", "intervals", "star"],
)
def test_family_gaps_decay(seq, x):
    if x is None:
        x = seq.space.point(2, 0.7)
    rep = envelope_resolvent_convergence(seq, x, 0.4, N=1000)
    assert rep.passed
    for gaps in (rep.env_gaps, rep.res_gaps):
        assert gaps[-1] <= 1e-3
        assert all(b <= a + 10 * rep.tol for a, b in zip(gaps, gaps[1:]))


def test_family_members_are_convex(rng):
    for seq in (translated_quadratics(dim=2), perturbed_fermat_weber(), star_anchor_drift()):
        assert seq.certify_convexity(seq.first + 4, rng) >= -1e-9


def test_failures_fail_the_report():
    rep = envelope_resolvent_convergence(translated_quadratics(), r(2.0), 1.0, N=4)
    rep.failures[2] = "stuck"
    assert not rep.passed


# Mosco conditions


def test_mosco_check_translated_quadratics():
    seq = translated_quadratics()
    rep = mosco_check(seq, r(0.5), N=1000)
    assert rep.m2_status == "pass"
    assert rep.m2_gap == pytest.approx(abs(0.5 * (0.5 - 1e-3) ** 2 - 0.125), abs=1e-15)
    window = SequenceWindow(R1, [r(0.5 + 1.0 / n) for n in range(50, 150)], start=50)
    rep = mosco_check(seq, r(0.5), [window], N=1000)
    assert rep.passed and rep.m1_mode == "sampled"


def test_mosco_check_constant_sequence():
    f = SquaredDistance(R1, r(1.0), 1.0)
    rep = mosco_check(constant_sequence(f), r(3.0), N=10)
    assert rep.m2_gap == 0.0 and rep.passed


def test_mosco_check_star_tips():
    star = MetricTree.star(80)
    c = star.node("c")
    f = SquaredDistance(star, c, 2.0)
    seq = FunctionalSequence(star, lambda n: f, f, recovery=lambda x, n: x, name="constant_star")
    window = SequenceWindow(star, [star.node(f"l{k}") for k in range(10, 80)], start=10)
    rep = mosco_check(seq, c, [window], N=10, probes=[star.point(k, 0.5) for k in range(10)])
    assert rep.m1_slacks == [pytest.approx(1.0)]
    assert rep.weak_scores[0] <= 1e-9


def test_mosco_check_without_recovery():
    f = SquaredDistance(R1, r(1.0), 1.0)
    seq = FunctionalSequence(R1, lambda n: f, f)
    rep = mosco_check(seq, r(0.0))
    assert rep.m2_status == "skipped" and math.isnan(rep.m2_gap)


# Frolík–Wijsman


def test_nested_intervals_gaps():
    grid = list(range(1, 1001))
    rep = wijsman_check(nested_intervals(), r(2.0), grid=grid)
    assert rep.passed
    for n, dg, pg in zip(grid, rep.dist_gaps, rep.proj_gaps):
        assert abs(dg - 1.0 / n) <= 1e-12
        assert abs(pg - 1.0 / n) <= 1e-12


def test_constant_sets_gaps():
    rep = wijsman_check(constant_sets(Interval(R1, -1.0, 1.0)), r(4.0), N=100)
    assert max(rep.dist_gaps) == 0.0 and max(rep.proj_gaps) == 0.0


def test_increasing_balls_gaps():
    seq = increasing_balls()
    x = np.array([3.0, 4.0])
    rep = wijsman_check(seq, x, N=1000)
    assert rep.passed
    for n, dg, pg in zip(rep.grid, rep.dist_gaps, rep.proj_gaps):
        assert dg == pytest.approx(1.0 / n, abs=1e-12)
        assert pg == pytest.approx(1.0 / n, abs=1e-12)


def test_set_families_are_nested(rng):
    for seq in (nested_intervals(), increasing_balls()):
        for n in (seq.first, seq.first + 3, 50):
            assert seq.monotone_violation(n, rng) <= 1e-12


def test_monotone_limits():
    lim = monotone_set_limit(nested_intervals())
    assert isinstance(lim, Interval) and (lim.lo, lim.hi) == (0.0, 1.0)
    ball = monotone_set_limit(increasing_balls())
    assert isinstance(ball, Ball) and ball.radius == 1.0
    c = Interval(R1, 0.0, 2.0)
    assert monotone_set_limit(constant_sets(c)) is c
    with pytest.raises(InvalidInput):
        monotone_set_limit(SetSequence(R1, lambda n: c, c))
    with pytest.raises(UnsupportedVariant):
        monotone_set_limit(SetSequence(R1, lambda n: c, c, monotone="decreasing"))


# semigroups


def test_translated_quadratic_semigroup_against_oracle():
    seq = translated_quadratics()
    grid = [1, 2, 5, 10, 100, 1000]
    rep = semigroup_convergence(seq, r(2.0), 1.0, grid=grid, n_steps=100)
    assert rep.passed
    assert rep.sem_gaps[0] == pytest.approx(FROZEN["moving_anchor_gap_n1"], abs=1e-12)
    for n, gap in zip(grid, rep.sem_gaps):
        assert gap == pytest.approx(flow_to_moving_anchor_gap(n), abs=1e-12)
    # the closed-form flow gap (1 - e^-1)/n up to the discretization
    assert rep.sem_gaps[0] == pytest.approx(1.0 - math.exp(-1.0), abs=1e-2)
    assert rep.sem_gaps[-1] <= 1e-3


def test_constant_semigroup_gaps():
    f = fermat_weber(Euclidean(2), [np.zeros(2), np.ones(2)])
    rep = semigroup_convergence(constant_sequence(f), np.array([2.0, 0.0]), 1.0, N=8, n_steps=20)
    assert max(rep.sem_gaps) <= 1e-9


def test_interval_semigroup_from_inside():
    rep = semigroup_convergence(nested_interval_indicators(), r(0.5), 1.0, N=64, n_steps=10)
    assert max(rep.sem_gaps) == 0.0


def test_semigroup_gap_below_telescoped_bound():
    seq = star_anchor_drift()
    x = seq.space.point(1, 0.8)
    rep = semigroup_convergence(seq, x, 1.0, N=256, n_steps=50)
    assert rep.passed
    assert all(g <= b + 1e-9 for g, b in zip(rep.sem_gaps, rep.bounds))


# JSON


def test_family_json():
    seq = translated_quadratics(dim=2, shift=[0.0, 2.0])
    again = family_from_json(seq.to_json())
    assert np.allclose(again(7).anchor, seq(7).anchor)
    sets = family_from_json({"family": "nested_intervals", "hi": 2.0})
    assert sets(1).hi == 3.0
    with pytest.raises(InvalidInput):
        family_from_json({"family": "nope"})
    with pytest.raises(InvalidInput):
        family_from_json({"family": "nested_intervals", "width": 2.0})


def test_envelope_gap_matches_direct_computation():
    seq = star_anchor_drift()
    x = seq.space.point(2, 0.4)
    rep = envelope_resolvent_convergence(seq, x, 0.5, grid=[3, 30])
    for n, gap in zip(rep.grid, rep.env_gaps):
        direct = abs(moreau_envelope(seq(n), x, 0.5) - moreau_envelope(seq.limit, x, 0.5))
        assert gap == pytest.approx(direct, abs=1e-14)
