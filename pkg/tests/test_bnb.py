import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cashfit.cost import CostStructure
from cashfit.series import CashFlowSeries, gen_random_walk
from cashfit.solver import Limits, fit_bounds, verify_fit
from cashfit.solver.bnb import STATUSES

A1 = CostStructure(2.0e-5, 2.0e-5, 1.0e-4, 1.0e-4, 2.0e-4)


def test_inaction_beats_expensive_transfer():
    a = CostStructure(1.0, 1.0, 0.0, 0.0, 0.1)
    r = fit_bounds(CashFlowSeries((-8.0,)), 10.0, a, 0.0)
    assert r.status == "optimal"
    assert r.objective == pytest.approx(0.2, abs=1e-12)
    L, Z, H = r.bounds.as_tuple()
    assert L <= 2.0 <= H and r.pattern == (0,)
    assert L == pytest.approx(0.0, abs=1e-6)


def test_cheap_transfer_out():
    a = CostStructure(0.01, 0.01, 0.0, 0.0, 1.0)
    r = fit_bounds(CashFlowSeries((-8.0,)), 10.0, a, 0.0)
    assert r.status == "optimal"
    assert r.objective == pytest.approx(0.01, abs=1e-12)
    assert r.bounds.Z == pytest.approx(0.0, abs=1e-12)
    assert r.bounds.H < 2.0
    assert r.pattern == (2,)


@pytest.mark.parametrize("k", [1, 3, 10])
def test_zero_flows(k):
    r = fit_bounds(np.zeros(k), 0.0, A1, 0.0)
    assert r.status == "optimal" and r.objective == 0.0
    assert r.pattern == (0,) * k


def test_infeasible_when_box_too_small():
    # staying put breaks the floor, and restoring needs a transfer above U
    r = fit_bounds(np.array([-100.0]), 0.0, A1, 0.0, var_upper=1.0)
    assert r.status == "infeasible"
    assert r.bounds is None and r.objective == math.inf


def test_floor_pinned_box():
    r = fit_bounds(np.array([-1.0, 1.0]), 1.0, A1, 1.0, var_upper=1.0)
    assert r.status == "optimal"
    assert r.bounds.as_tuple() == pytest.approx((1.0, 1.0, 1.0), abs=1e-6)


def test_determinism():
    f = gen_random_walk(0.097, 0.009, 12, 4)
    a = fit_bounds(f, 0.57, A1, 0.485)
    b = fit_bounds(f, 0.57, A1, 0.485)
    assert a == b


@pytest.mark.parametrize("rule", ["most_fractional", "chronological"])
def test_branching_rules_agree(rule):
    f = gen_random_walk(0.097, 0.009, 12, 8)
    r = fit_bounds(f, 0.57, A1, 0.485, Limits(branching=rule))
    ref = fit_bounds(f, 0.57, A1, 0.485)
    assert r.status == "optimal"
    assert r.objective == pytest.approx(ref.objective, rel=2e-6)


def test_node_limit_status():
    f = gen_random_walk(0.097, 0.009, 25, 2)
    r = fit_bounds(f, 0.57, A1, 0.485, Limits(max_nodes=3))
    assert r.status in ("node_limit", "optimal")
    assert r.nodes_explored <= 3 + 2
    if r.bounds is not None:
        assert verify_fit(r, f, 0.57, A1, 0.485).discrepancy <= 1e-6 * (1 + r.objective)
    assert r.lower_bound <= r.objective


def test_time_limit_status():
    f = gen_random_walk(0.097, 0.009, 40, 3)
    r = fit_bounds(f, 0.57, A1, 0.485, Limits(max_seconds=0.05))
    assert r.status in ("time_limit", "optimal")
    assert r.status in STATUSES


def test_loose_gap_stops_early():
    f = gen_random_walk(0.097, 0.009, 20, 5)
    r = fit_bounds(f, 0.57, A1, 0.485, Limits(gap=0.5))
    assert r.status in ("optimal", "gap_limit")
    assert r.gap <= 0.5


@pytest.mark.parametrize("kw", [dict(gap=-1.0), dict(max_nodes=0), dict(max_seconds=0.0),
                                dict(branching="random")])
def test_limits_validated(kw):
    with pytest.raises(ValueError):
        Limits(**kw)


def test_result_reports_constants():
    f = np.array([1.0, -1.0, 2.0])
    r = fit_bounds(f, 0.0, A1, 0.0)
    assert r.var_upper == 0 + 4 + 0 + 2
    assert r.big_m == 2 * (0 + 4 + r.var_upper)
    assert r.trigger_margin == pytest.approx(2e-6)


@settings(max_examples=30)
@given(st.lists(st.integers(-3, 3).map(float), min_size=1, max_size=6), st.integers(0, 6))
def test_appending_zero_flow(flows, b0):
    a = CostStructure(2e-3, 2e-3, 1e-4, 1e-4, 4e-4)
    base = fit_bounds(np.array(flows), float(b0), a, 0.0)
    more = fit_bounds(np.array(flows + [0.0]), float(b0), a, 0.0)
    assert more.objective >= base.objective - 1e-6 * (1 + base.objective)
    assert more.objective <= base.objective + a.v * base.var_upper + 1e-6 * (1 + base.objective)


@settings(max_examples=30)
@given(st.lists(st.integers(-5, 5).map(float), min_size=2, max_size=8), st.integers(0, 10))
def test_every_optimal_fit_verifies(flows, b0):
    a = CostStructure(4e-3, 4e-3, 2e-4, 1e-4, 2e-4)
    r = fit_bounds(np.array(flows), float(b0), a, 0.0)
    assert r.status == "optimal"
    rep = verify_fit(r, np.array(flows), float(b0), a, 0.0)
    assert rep.passed, rep
    assert r.lower_bound <= r.objective + 1e-12
    assert not math.isnan(r.gap)
