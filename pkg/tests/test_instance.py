import io

import numpy as np
import pytest

from cashfit.cost import CostStructure
from cashfit.series import CashFlowSeries
from cashfit.solver import build_instance, write_lp
from cashfit.solver.instance import B, XM, XP, ZM, ZP

A1 = CostStructure(2.0e-5, 2.0e-5, 1.0e-4, 1.0e-4, 2.0e-4)


def test_single_step_counts():
    inst = build_instance(CashFlowSeries((1.0,)), 0.0, A1, 0.0)
    assert len(inst.binaries) == 2
    # xp, xm, b plus the three bounds
    assert inst.n_vars - len(inst.binaries) == 3 + 3


def test_25_step_counts():
    inst = build_instance(np.linspace(-1, 1, 25), 0.0, A1, 0.0)
    assert len(inst.binaries) == 50
    assert inst.n_vars == 3 + 50 + 75
    assert inst.describe()["n_rows"] == 12 * 25 + 2


def test_big_m_formula():
    f = np.array([5.0, -5.0, 10.0])
    inst = build_instance(f, 10.0, A1, 0.0, var_upper=40.0)
    assert inst.M == 2 * (10 + 20 + 40) == 140


def test_default_upper():
    inst = build_instance(np.array([3.0, -1.0]), 2.0, A1, 0.5)
    assert inst.U == 2 + 4 + 0.5 + 3


def test_big_m_floor_enforced():
    with pytest.raises(ValueError, match="floor"):
        build_instance(np.array([1.0]), 0.0, A1, 0.0, big_m=1.0)
    assert build_instance(np.array([1.0]), 0.0, A1, 0.0, big_m=1e4).M == 1e4


def test_zero_flows_keep_positive_m():
    inst = build_instance(np.zeros(3), 0.0, A1, 0.0)
    assert inst.U == 0.0 and inst.M > 0


@pytest.mark.parametrize("kw", [dict(var_upper=-1.0), dict(var_upper=np.inf),
                                dict(trigger_margin=-1e-3)])
def test_rejections(kw):
    with pytest.raises(ValueError):
        build_instance(np.array([1.0]), 0.0, A1, 0.0, **kw)


def test_empty_and_bad_alpha():
    with pytest.raises(ValueError):
        build_instance(np.array([]), 0.0, A1, 0.0)
    with pytest.raises(TypeError):
        build_instance(np.array([1.0]), 0.0, {"v": 1}, 0.0)


def test_objective_coefficients():
    a = CostStructure(1.0, 2.0, 3.0, 4.0, 5.0)
    inst = build_instance(np.array([1.0, 2.0]), 0.0, a, 0.0)
    for t in range(2):
        assert inst.c[inst.var(t, XP)] == 3.0
        assert inst.c[inst.var(t, XM)] == 4.0
        assert inst.c[inst.var(t, B)] == 5.0
        assert inst.c[inst.var(t, ZP)] == 1.0
        assert inst.c[inst.var(t, ZM)] == 2.0
    assert not inst.c[:3].any()


def test_bounds_and_ordering_rows():
    inst = build_instance(np.array([1.0, -2.0]), 1.0, A1, 0.25)
    assert np.all(inst.lb[:3] == 0.25) and np.all(inst.ub[:3] == inst.U)
    assert inst.ub_rows[-2:] == ("order_LZ", "order_ZH")
    assert inst.eq_rows == ("trans_1", "trans_2")


def test_feasible_point_for_simulated_policy():
    """The replay of a triple, written as a program point, satisfies every row."""
    f = np.array([1.0, -3.0, 0.5, 4.0])
    b0, (L, Z, H) = 2.0, (1.0, 2.0, 3.0)
    inst = build_instance(f, b0, A1, 0.0, trigger_margin=1e-6)
    x = np.zeros(inst.n_vars)
    x[:3] = L, Z, H
    b = b0
    for t, ft in enumerate(f):
        w = b + ft
        if w > H or w < L:
            x[inst.var(t, XP if w < L else XM)] = abs(Z - w)
            x[inst.var(t, ZP if w < L else ZM)] = 1.0
            b = Z
        else:
            b = w
        x[inst.var(t, B)] = b
    assert np.all(inst.A_ub @ x <= inst.b_ub + 1e-12)
    assert np.allclose(inst.A_eq @ x, inst.b_eq)


def test_lp_dump():
    inst = build_instance(CashFlowSeries((1.0, -1.0)), 0.0, A1, 0.0)
    buf = io.StringIO()
    write_lp(inst, buf)
    text = buf.getvalue()
    for section in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
        assert f"\n{section}\n" in text
    for name in ("xp_1", "xm_2", "zp_1", "zm_2", "b_2", " L ", " Z ", " H "):
        assert name in text or name.strip() + " <=" in text
    assert "zp_1 zm_1 zp_2 zm_2" in text
    assert text.count(" <= ") >= len(inst.ub_rows)
