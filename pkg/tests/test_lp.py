import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cashfit import _kernels
from cashfit.cost import CostStructure
from cashfit.solver import build_instance, fit_bounds, solve_lp
from cashfit.solver.lp import DualSimplex, LpNumericalError

scipy_optimize = pytest.importorskip("scipy.optimize")

A1 = CostStructure(2.0e-5, 2.0e-5, 1.0e-4, 1.0e-4, 2.0e-4)
backends = ["python"] + (["compiled"] if _kernels.compiled_backend is not None else [])


def highs(inst, fixed=()):
    lb, ub = inst.lb.copy(), inst.ub.copy()
    for j, v in fixed:
        lb[j] = ub[j] = v
    return scipy_optimize.linprog(inst.c, A_ub=inst.A_ub, b_ub=inst.b_ub, A_eq=inst.A_eq,
                                  b_eq=inst.b_eq, bounds=list(zip(lb, ub)), method="highs")


@pytest.mark.parametrize("backend", backends)
@pytest.mark.parametrize("seed", range(8))
def test_relaxation_matches_highs(seed, backend):
    rng = np.random.default_rng(seed)
    f = rng.integers(-5, 6, size=int(rng.integers(3, 12))).astype(float)
    inst = build_instance(f, float(rng.integers(0, 10)), A1, 0.0, trigger_margin=1e-6)
    ours = solve_lp(inst, backend=_kernels.get_backend(backend))
    ref = highs(inst)
    assert ours.status == "optimal" and ref.status == 0
    assert ours.objective == pytest.approx(ref.fun, rel=1e-9, abs=1e-12)
    assert np.all(inst.A_ub @ ours.x <= inst.b_ub + 1e-7)
    assert np.allclose(inst.A_eq @ ours.x, inst.b_eq, atol=1e-7)


@settings(max_examples=40)
@given(st.lists(st.integers(-4, 4).map(float), min_size=2, max_size=8), st.integers(0, 8),
       st.data())
def test_partial_fixing_matches_highs(flows, b0, data):
    inst = build_instance(np.array(flows), float(b0), A1, 0.0, trigger_margin=1e-6)
    picks = data.draw(st.lists(st.tuples(st.sampled_from(inst.binaries.tolist()),
                                         st.integers(0, 1)), max_size=6, unique_by=lambda p: p[0]))
    ours = solve_lp(inst, fixed=dict(picks))
    ref = highs(inst, picks)
    if ref.status == 2:
        assert ours.status == "infeasible"
    else:
        assert ours.status == "optimal"
        assert ours.objective == pytest.approx(ref.fun, rel=1e-9, abs=1e-12)


def test_all_inactive_is_pure_evaluation():
    f = np.array([1.0, -0.5, 2.0, -1.0])
    b0 = 3.0
    inst = build_instance(f, b0, A1, 0.0)
    sol = solve_lp(inst, fixed={int(j): 0 for j in inst.binaries})
    cum = b0 + np.cumsum(f)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(A1.v * cum.sum(), rel=1e-12)


def test_all_inactive_below_floor_is_infeasible():
    inst = build_instance(np.array([-2.0, -2.0]), 3.0, A1, 0.0)
    sol = solve_lp(inst, fixed={int(j): 0 for j in inst.binaries})
    assert sol.status == "infeasible"
    assert np.isnan(sol.x).all() and sol.objective == np.inf


@pytest.mark.parametrize("seed", range(6))
def test_relaxation_bounds_integer_optimum(seed):
    rng = np.random.default_rng(100 + seed)
    f = rng.integers(-5, 6, size=6).astype(float)
    inst = build_instance(f, 5.0, A1, 0.0)
    fit = fit_bounds(f, 5.0, A1, 0.0)
    assert solve_lp(inst).objective <= fit.objective + 1e-12


def test_fixing_by_name_and_validation():
    inst = build_instance(np.array([1.0, -1.0]), 1.0, A1, 0.0)
    assert solve_lp(inst, fixed={"zp_1": 0, "zm_2": 0}).status == "optimal"
    with pytest.raises(ValueError, match="not a binary"):
        solve_lp(inst, fixed={"b_1": 0})
    with pytest.raises(ValueError, match="0 or 1"):
        solve_lp(inst, fixed={"zp_1": 0.5})


def test_singular_basis_reported_distinctly():
    # two identical equality rows: any basis holding both slacks' partner columns is singular
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    eng = DualSimplex(np.ones(2), np.zeros((0, 2)), np.zeros(0), A, np.array([1.0, 1.0]),
                      np.zeros(2), np.ones(2))
    st_ = eng.initial_state()
    st_.head[:] = [0, 1]
    st_.nb[:] = [2, 3]
    with pytest.raises(LpNumericalError):
        eng.refactor(st_)
