import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cashfit.cost import (CostStructure, daily_cost, holding_cost, holding_costs, policy_cost,
                          transfer_cost, transfer_costs)
from cashfit.policy import PolicyTrace, Trigger

A1 = CostStructure(2.0e-5, 2.0e-5, 1.0e-4, 1.0e-4, 2.0e-4)
money = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)
rate = st.floats(0, 1e-2, allow_nan=False)
alphas = st.builds(CostStructure, rate, rate, rate, rate, st.floats(1e-6, 1e-2))


def trace(actions, balances, b0=0.0):
    trig = tuple(Trigger.NONE if x == 0 else Trigger.TO_TARGET_UP for x in actions)
    return PolicyTrace(tuple(balances), tuple(actions), b0, trig)


class TestCostStructure:
    def test_from_dict_table_units(self):
        a = CostStructure.from_dict({"gamma0_plus": 20, "gamma0_minus": 20, "gamma1_plus": "0.01%",
                                     "gamma1_minus": "0.01%", "v": "0.02%", "u": "inf"}, 1e-6)
        assert a == A1
        assert math.isinf(a.u)

    def test_from_dict_missing(self):
        with pytest.raises(ValueError, match="missing"):
            CostStructure.from_dict({"gamma0_plus": 1})

    @pytest.mark.parametrize("field, value", [("v", 0.0), ("gamma0_plus", -1.0),
                                              ("gamma1_minus", math.nan), ("u", 0.0)])
    def test_invalid(self, field, value):
        kw = A1.__dict__ | {field: value}
        with pytest.raises(ValueError):
            CostStructure(**kw)

    def test_dict_roundtrip(self):
        assert CostStructure.from_dict(A1.to_dict()) == A1


class TestTransfer:
    def test_zero(self):
        assert transfer_cost(0.0, A1) == 0.0

    def test_up(self):
        assert transfer_cost(1.0, A1) == pytest.approx(1.2e-4, rel=1e-12)

    def test_down(self):
        assert transfer_cost(-0.5, A1) == pytest.approx(7.0e-5, rel=1e-12)

    @given(alphas, money)
    def test_floor_for_nonzero(self, a, x):
        if x != 0:
            assert transfer_cost(x, a) >= min(a.gamma0_plus, a.gamma0_minus)

    @given(alphas, st.floats(1e-9, 1e4), st.floats(1e-9, 1e4))
    def test_monotone_each_branch(self, a, p, q):
        lo, hi = sorted((p, q))
        assert transfer_cost(lo, a) <= transfer_cost(hi, a)
        assert transfer_cost(-lo, a) <= transfer_cost(-hi, a)

    @given(alphas, st.lists(money, max_size=30))
    def test_vectorised_matches(self, a, xs):
        assert list(transfer_costs(xs, a)) == [transfer_cost(x, a) for x in xs]


class TestHolding:
    def test_examples(self):
        assert holding_cost(5.0, A1) == pytest.approx(1.0e-3, rel=1e-12)
        assert holding_cost(0.0, A1) == 0.0
        assert holding_cost(-1.0, A1) == math.inf

    def test_finite_shortage(self):
        a = CostStructure(0, 0, 0, 0, 1e-4, u=0.5)
        assert holding_cost(-2.0, a) == 1.0

    @given(alphas, st.floats(1e-6, 10.0), money)
    def test_nonnegative_with_finite_u(self, a, u, b):
        a = CostStructure(a.gamma0_plus, a.gamma0_minus, a.gamma1_plus, a.gamma1_minus, a.v, u)
        assert holding_cost(b, a) >= 0.0

    @given(st.lists(money, max_size=30))
    def test_vectorised_matches(self, bs):
        assert list(holding_costs(bs, A1)) == [holding_cost(b, A1) for b in bs]


class TestDaily:
    def test_zero(self):
        assert daily_cost(0, 0, A1).total == 0.0

    def test_down_with_balance(self):
        d = daily_cost(-6.0, 5.0, A1)
        assert d.total == pytest.approx(1.62e-3, rel=1e-12)
        assert d.total == d.transfer + d.holding

    def test_up_with_balance(self):
        assert daily_cost(4.0, 5.0, A1).total == pytest.approx(1.42e-3, rel=1e-12)


class TestPolicyCost:
    def test_constant_balance_average(self):
        t = trace([0.0] * 7, [3.0] * 7)
        assert policy_cost(t, A1, averaged=True) == pytest.approx(A1.v * 3.0, rel=1e-12)

    def test_single_day(self):
        assert policy_cost(trace([-6.0], [5.0]), A1) == pytest.approx(1.62e-3, rel=1e-12)

    def test_empty(self):
        assert policy_cost(trace([], []), A1) == 0.0

    def test_negative_balance_is_infinite(self):
        assert policy_cost(trace([0.0, 0.0], [1.0, -1.0]), A1) == math.inf

    @settings(max_examples=300)
    @given(st.lists(st.tuples(money, st.floats(0, 1e4)), min_size=1, max_size=40))
    def test_average_ratio(self, days):
        t = trace([d[0] for d in days], [d[1] for d in days])
        total, avg = policy_cost(t, A1), policy_cost(t, A1, averaged=True)
        assert total == pytest.approx(len(days) * avg, rel=1e-12, abs=1e-300)

    @settings(max_examples=300)
    @given(st.lists(st.tuples(money, st.floats(0, 1e4)), min_size=1, max_size=20),
           st.lists(st.tuples(money, st.floats(0, 1e4)), min_size=1, max_size=20))
    def test_additive(self, d1, d2):
        t1 = trace([d[0] for d in d1], [d[1] for d in d1])
        t2 = trace([d[0] for d in d2], [d[1] for d in d2])
        t12 = trace([d[0] for d in d1 + d2], [d[1] for d in d1 + d2])
        assert policy_cost(t12, A1) == pytest.approx(policy_cost(t1, A1) + policy_cost(t2, A1),
                                                     rel=1e-12, abs=1e-15)

    @given(alphas, st.floats(1e-3, 1e3), money, st.floats(0, 1e4))
    def test_coefficient_scaling(self, a, c, x, b):
        ac = a.scaled(c)
        assert daily_cost(x, b, ac).total == pytest.approx(c * daily_cost(x, b, a).total,
                                                           rel=1e-12, abs=1e-300)
        assert transfer_cost(x, ac) == pytest.approx(c * transfer_cost(x, a), rel=1e-12, abs=1e-300)
