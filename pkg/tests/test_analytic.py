import math
from dataclasses import replace

import numpy as np
import pytest
from conftest import PAPER, S1, draw_scenarios

from ieswpt.analytic import (
    FormulaId,
    bound_standby,
    classify_regime,
    conventional_t_oc,
    n_max,
    phase_durations,
    t_oc_analytic,
    t_oc_upper_bound,
)
from ieswpt.model import FinalCase, Piecewise3, ReceiverSpec


def step_cycles(rx, dt=1e-4):
    """Single receiver, brute force: count whole IES cycles and time the last one."""
    battery = ies = 0.0
    t = cycle_start = 0.0
    cycles = 0
    charging = True
    step_fill = (rx.p_r - rx.p_b) * dt
    step_use = rx.p_b * dt
    while battery < rx.q_c - 1e-9:
        battery += step_use
        t += dt
        if charging:
            ies += step_fill
            if ies >= rx.q_ies - 1e-9:
                charging = False
        else:
            ies -= step_use
            if ies <= 1e-9:
                ies = 0.0
                charging = True
                cycles += 1
                cycle_start = t
    return cycles, t - cycle_start


def test_phase_durations_s1():
    d = phase_durations(S1)
    assert (d.a, d.b, d.c) == pytest.approx((3.125, 10.0, 13.125))
    assert d.k_l == 7
    assert d.c_prime == pytest.approx(8.125)
    cycles, last = step_cycles(S1)
    assert cycles == d.k_l
    assert last == pytest.approx(d.c_prime, abs=1e-3)


def test_phase_durations_exact_multiple():
    d = phase_durations(ReceiverSpec(1.0, 2.0, 10.0, 1.0, 0.0))
    assert (d.a, d.b, d.c, d.k_l) == (1.0, 1.0, 2.0, 5)
    assert d.c_prime == pytest.approx(0.0, abs=1e-12)


def test_phase_durations_paper():
    d = phase_durations(PAPER)
    assert d.a == pytest.approx(1.0625)
    assert d.b == pytest.approx(3.4)


@pytest.mark.parametrize("p_r, q_ies, expected", [(4.2, 3.4, 4), (2.0, 1.0, 2), (4.2, 10.0, 4), (4.2, 0.001, 4)])
def test_n_max(p_r, q_ies, expected):
    rx = ReceiverSpec(1.0, p_r, 100.0, q_ies, 0.0)
    assert n_max(rx) == expected
    d = phase_durations(rx)
    assert math.floor(d.c / d.a + 1e-12) == expected


def test_classify_examples():
    assert not classify_regime(S1, 2).standby
    rep = classify_regime(S1, 6)
    assert rep.standby and rep.final_case is FinalCase.C
    assert not classify_regime(replace(S1, t_d=0.5), 2).standby
    assert not classify_regime(S1, 1).standby


def test_classify_case_boundaries():
    # c' == a selects case b (conditions use <= as printed)
    rx = ReceiverSpec(1.0, 4.2, 10.0 * 13.125 + 3.125, 10.0, 0.0)
    d = phase_durations(rx)
    assert d.c_prime == pytest.approx(d.a)
    assert classify_regime(rx, 6).final_case is FinalCase.B
    # small c' -> case a
    rx = ReceiverSpec(1.0, 4.2, 7 * 13.125 + 1.0, 10.0, 0.0)
    assert classify_regime(rx, 6).final_case is FinalCase.A


@pytest.mark.parametrize(
    "rx, n, expected, formula",
    [
        (S1, 2, 103.125, FormulaId.EQ2),
        (S1, 6, 155.0, FormulaId.EQ3C),
        (replace(S1, t_d=0.5), 6, 178.5, FormulaId.EQ5C),
        (PAPER, 3, 3602.1270, FormulaId.EQ4),
    ],
)
def test_t_oc_examples(rx, n, expected, formula):
    b = t_oc_analytic(rx, n)
    assert b.t_oc == pytest.approx(expected, abs=1e-9)
    assert b.formula_id is formula
    assert sum(b.components.values()) == pytest.approx(b.t_oc)


def test_t_oc_single_receiver():
    for rx in (S1, PAPER, replace(S1, t_d=2.0)):
        assert t_oc_analytic(rx, 1).t_oc == pytest.approx(rx.q_c / rx.p_b, rel=1e-15)


def test_t_oc_cases_a_and_b():
    d = phase_durations(S1)
    rx_a = ReceiverSpec(1.0, 4.2, 7 * 13.125 + 1.0, 10.0, 0.0)
    assert t_oc_analytic(rx_a, 6).t_oc == pytest.approx(7 * 6 * 3.125 + 10.0 + 1.0)
    rx_b = ReceiverSpec(1.0, 4.2, 7 * 13.125 + 2.5, 10.0, 0.0)
    assert classify_regime(rx_b, 6).final_case is FinalCase.B
    assert t_oc_analytic(rx_b, 6).t_oc == pytest.approx(7 * 6 * d.a + 6 * 2.5)


def test_bounds():
    assert t_oc_upper_bound(S1, 2) == pytest.approx(113.125)
    assert t_oc_upper_bound(replace(S1, t_d=0.5), 6) == pytest.approx(239.25)
    rx = replace(PAPER, q_ies=3.39411)
    assert bound_standby(rx, 6) == pytest.approx(6762.7, abs=0.5)
    grid = np.geomspace(0.1, 100.0, 20001)
    scan = min(bound_standby(replace(PAPER, q_ies=q), 6) for q in grid)
    assert bound_standby(rx, 6) == pytest.approx(scan, rel=1e-6)


def test_conventional():
    assert conventional_t_oc(PAPER, 3) == 10800.0
    assert conventional_t_oc(PAPER, 1, Piecewise3(1.0)) == pytest.approx(7200.0)
    assert conventional_t_oc(PAPER, 1, s0=0.5) == pytest.approx(1800.0)


# --- properties over random draws --------------------------------------------


@pytest.fixture(scope="module")
def draws():
    return draw_scenarios(seed=7, count=500)


def test_bound_dominance_and_floor(draws):
    for s in draws:
        rx, n = s.receiver, s.n
        exact = t_oc_analytic(rx, n).t_oc
        assert t_oc_upper_bound(rx, n) >= exact
        assert exact >= rx.q_c / rx.p_b * (1 - 1e-12)


def test_speedup_over_conventional(draws):
    for s in draws:
        rx, n = s.receiver, s.n
        if n < 2:
            continue
        exact = t_oc_analytic(rx, n).t_oc
        assert exact <= conventional_t_oc(rx, n) + n * rx.t_d
        if rx.t_d == 0:
            assert exact < conventional_t_oc(rx, n)


def test_no_standby_monotone(rng):
    checked = 0
    for s in draw_scenarios(seed=11, count=50, standby=False, n_range=(2, 6)):
        rx, n = s.receiver, s.n
        base = t_oc_analytic(rx, n).t_oc
        for bumped, m in ((replace(rx, q_ies=rx.q_ies * 0.999), n), (replace(rx, t_d=rx.t_d * 0.9), n)):
            if classify_regime(bumped, m).standby:
                continue
            if bumped.t_d == rx.t_d and bumped.q_ies == rx.q_ies:
                continue
            assert t_oc_analytic(bumped, m).t_oc < base
        if n > 1 and not classify_regime(rx, n - 1).standby:
            assert t_oc_analytic(rx, n - 1).t_oc < base
        checked += 1
    assert checked == 50


def test_n_max_consistency(draws):
    for s in draws:
        rx = replace(s.receiver, t_d=0.0)
        nm = n_max(rx)
        for n in range(1, 2 * nm + 1):
            assert classify_regime(rx, n).standby == (n > nm)


def test_regime_seam_continuity(rng):
    for _ in range(200):
        n = int(rng.integers(2, 8))
        a = rng.uniform(0.5, 5.0)
        t_d = rng.uniform(0.0, 0.2 * a)
        p_b = rng.uniform(0.5, 2.0)
        b = (n - 1) * a + n * t_d
        q_ies = b * p_b
        rx = ReceiverSpec(p_b, p_b + q_ies / a, q_ies * rng.uniform(2.0, 40.0), q_ies, t_d)
        here = t_oc_analytic(rx, n).t_oc
        for bump in (1 - 1e-11, 1 + 1e-11):
            near = t_oc_analytic(replace(rx, t_d=t_d * bump), n).t_oc
            assert near == pytest.approx(here, rel=1e-9)
