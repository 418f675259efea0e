"""Audit a fit by replaying its bounds with the reference (pure Python) policy step."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cost import CostStructure, transfer_cost
from ..policy import step
from ..series import CashFlowSeries
from .bnb import FLOOR_TOL, FitResult


@dataclass(frozen=True)
class VerifyReport:
    """``passed`` needs a matching cost, no floor breach and no off-boundary pattern clash.

    ``pattern_mismatches`` are steps where the program's binaries disagree
    with the replayed triggers away from a band edge (big-M artifacts);
    ``boundary_mismatches`` are disagreements at steps sitting on L or H,
    which both readings of the trigger rule allow.
    """

    passed: bool
    discrepancy: float
    tolerance: float
    simulated_cost: float
    floor_violations: tuple[int, ...]
    pattern_mismatches: tuple[int, ...]
    boundary_mismatches: tuple[int, ...]
    pattern_checked: bool


def sim_tolerance(objective: float) -> float:
    return 1e-6 * (1.0 + abs(objective))


def verify_fit(result: FitResult, series: CashFlowSeries | np.ndarray, b0: float,
               alpha: CostStructure, b_min: float, eps_f: float = FLOOR_TOL) -> VerifyReport:
    if result.bounds is None:
        raise ValueError(f"result has no bounds to verify (status {result.status})")
    flows = series.flows if isinstance(series, CashFlowSeries) else np.asarray(series).tolist()
    bounds = result.bounds
    b = float(b0)
    cost = 0.0
    floor_hits = []
    triggers = []
    near_edge = []
    for t, f in enumerate(flows):
        w = b + f
        edge_tol = 1e-6 * (1.0 + abs(w))
        near_edge.append(abs(w - bounds.L) <= edge_tol or abs(w - bounds.H) <= edge_tol)
        x, b, trig = step(b, f, bounds)
        triggers.append(int(trig))
        # the fit charges holding linearly, matching the program's objective
        cost += transfer_cost(x, alpha) + alpha.v * b
        if b < b_min - eps_f:
            floor_hits.append(t)
    discrepancy = abs(result.objective - cost)
    tol = sim_tolerance(result.objective)
    mism, edge = [], []
    checked = result.milp_pattern is not None
    if checked:
        for t, (p, q) in enumerate(zip(result.milp_pattern, triggers)):
            if p != q:
                (edge if near_edge[t] else mism).append(t)
    passed = discrepancy <= tol and not floor_hits and not mism
    return VerifyReport(passed=passed, discrepancy=discrepancy, tolerance=tol,
                        simulated_cost=cost, floor_violations=tuple(floor_hits),
                        pattern_mismatches=tuple(mism), boundary_mismatches=tuple(edge),
                        pattern_checked=checked)


__all__ = ["VerifyReport", "verify_fit", "sim_tolerance"]
