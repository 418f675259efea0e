"""Exhaustive grid search over bound triples: a slow, independent check on ``fit_bounds``."""
from __future__ import annotations

import math
import time

import numpy as np

from .. import _kernels
from ..cost import CostStructure
from ..policy import BoundTriple
from ..series import CashFlowSeries
from .bnb import FitResult
from .instance import default_var_upper


class NoFeasibleTriple(ValueError):
    """Every grid triple drives some balance below the floor."""


def grid_levels(lo: float, hi: float, h: float) -> np.ndarray:
    """``lo, lo + h, ...`` up to ``hi`` (inclusive up to round-off)."""
    if not h > 0:
        raise ValueError(f"grid resolution must be > 0, got {h}")
    if hi < lo:
        raise ValueError(f"empty search box [{lo}, {hi}]")
    count = int(math.floor((hi - lo) / h + 1e-9)) + 1
    return lo + h * np.arange(count, dtype=np.float64)


def brute_force_fit(series: CashFlowSeries | np.ndarray, b0: float, alpha: CostStructure,
                    b_min: float, h: float = 0.25, box: tuple[float, float] | None = None,
                    backend=None) -> FitResult:
    """Cheapest triple L <= Z <= H on a grid of spacing ``h`` over ``box``.

    ``box`` defaults to [b_min, U] with the same U as the program. Each
    triple is simulated and charged the unaveraged cost; triples that let a
    balance fall below ``b_min`` are discarded. Ties go to the
    lexicographically smallest (L, Z, H). Cost is O(G^3 N) for G levels.
    """
    start = time.perf_counter()
    flows = np.ascontiguousarray(
        series.flows if isinstance(series, CashFlowSeries) else series, dtype=np.float64)
    if len(flows) == 0:
        raise ValueError("empty series")
    if box is None:
        box = (b_min, default_var_upper(flows, b0, b_min))
    levels = grid_levels(float(box[0]), float(box[1]), h)
    k = backend or _kernels.backend
    a = alpha
    cost, i, j, l = k.grid_search(flows, float(b0), levels, a.gamma0_plus, a.gamma0_minus,
                                  a.gamma1_plus, a.gamma1_minus, a.v, float(b_min), 0.0)
    G = len(levels)
    evaluated = G * (G + 1) * (G + 2) // 6
    if i < 0 or not math.isfinite(cost):
        raise NoFeasibleTriple(
            f"no triple on the {G}-level grid over [{box[0]}, {box[1]}] keeps balances >= {b_min}")
    L, Z, H = float(levels[i]), float(levels[j]), float(levels[l])
    _, _, trig = k.simulate(flows, float(b0), L, Z, H)
    return FitResult(bounds=BoundTriple(L, Z, H), objective=float(cost),
                     nodes_explored=evaluated, gap=0.0, status="optimal",
                     lower_bound=-math.inf, pattern=tuple(int(c) for c in trig),
                     wall_time=time.perf_counter() - start)
