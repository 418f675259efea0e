"""Best-first branch-and-bound over the trigger binaries, seeded by policy simulation."""
from __future__ import annotations

import heapq
import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..cost import CostStructure
from ..policy import BoundTriple
from ..series import CashFlowSeries
from .instance import MilpInstance, ZM, ZP, build_instance, default_trigger_margin
from .lp import INFEASIBLE, DualSimplex

STATUSES = ("optimal", "gap_limit", "node_limit", "time_limit", "infeasible")
DEFAULT_GAP = 1e-6
INT_TOL = 1e-6
FLOOR_TOL = 1e-7
RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class Limits:
    """Stopping rules and search options for ``fit_bounds``.

    ``gap`` is relative: the search stops once the incumbent is within
    ``gap * |incumbent|`` of the best open bound.
    """

    gap: float = DEFAULT_GAP
    max_nodes: int | None = None
    max_seconds: float | None = None
    branching: str = "most_fractional"
    cache_size: int = 256

    def __post_init__(self):
        if not self.gap >= 0:
            raise ValueError(f"gap must be >= 0, got {self.gap}")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ValueError("max_nodes must be >= 1")
        if self.max_seconds is not None and not self.max_seconds > 0:
            raise ValueError("max_seconds must be > 0")
        if self.branching not in ("most_fractional", "chronological"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass(frozen=True)
class FitResult:
    """Outcome of a bound fit.

    ``objective`` is the unaveraged cost of ``bounds`` replayed on the fitted
    flows; ``pattern`` holds the per-step trigger codes of that replay and
    ``milp_pattern`` the matching binary assignment of the program, when one
    was found.
    """

    bounds: BoundTriple | None
    objective: float
    nodes_explored: int
    gap: float
    status: str
    lower_bound: float = -math.inf
    pattern: tuple[int, ...] | None = None
    milp_pattern: tuple[int, ...] | None = None
    lp_iterations: int = 0
    big_m: float = math.nan
    var_upper: float = math.nan
    trigger_margin: float = math.nan
    wall_time: float = field(default=0.0, compare=False)


def _pattern_from_x(inst: MilpInstance, x: np.ndarray) -> tuple[int, ...]:
    out = []
    for t in range(inst.n_steps):
        if x[inst.var(t, ZP)] > 0.5:
            out.append(_kernels.UP)
        elif x[inst.var(t, ZM)] > 0.5:
            out.append(_kernels.DOWN)
        else:
            out.append(_kernels.NONE)
    return tuple(out)


class _Search:
    def __init__(self, inst: MilpInstance, limits: Limits, backend):
        self.inst = inst
        self.limits = limits
        self.k = backend or _kernels.backend
        self.eng = DualSimplex.from_instance(inst, backend=self.k)
        a = inst.alpha
        self.cost_args = (a.gamma0_plus, a.gamma0_minus, a.gamma1_plus, a.gamma1_minus,
                          a.v, inst.b_min, FLOOR_TOL)
        self.best = math.inf
        self.best_triple: tuple[float, float, float] | None = None
        self.best_milp: tuple[int, ...] | None = None
        self.nodes = 0
        self.iterations = 0
        self.bin = inst.binaries
        self.widen = 0.5 * inst.trigger_margin

    def replay(self, triple) -> float:
        return self.k.simulate_cost(self.inst.flows, self.inst.b0, *triple, *self.cost_args)

    def candidates(self, x: np.ndarray):
        """Bound triples read off an LP point.

        Besides the raw values, the band is widened by half the trigger
        margin: a step the program keeps inside [L, H] may sit on an edge up
        to round-off, while its trigger steps clear the edges by the full
        margin. Ties keep the earlier candidate.
        """
        L, Z, H = sorted(float(v) for v in x[:3])
        yield (L, Z, H)
        if self.widen > 0:
            Hw = H + self.widen
            if L - self.widen >= self.inst.b_min:
                yield (L - self.widen, Z, Hw)
            else:
                yield (L, Z, Hw)
                # a band edge resting on the floor; the replay still enforces the floor
                yield (L - self.widen, Z, Hw)

    def offer(self, x: np.ndarray, integral: bool) -> float:
        """Replay the bounds found in an LP point; keep them if they beat the incumbent."""
        best_here = math.inf
        for triple in self.candidates(x):
            cost = self.replay(triple)
            best_here = min(best_here, cost)
            if cost < self.best:
                self.best = cost
                self.best_triple = triple
                self.best_milp = _pattern_from_x(self.inst, x) if integral else None
        return best_here

    def tol(self) -> float:
        return self.limits.gap * abs(self.best) if math.isfinite(self.best) else 0.0

    def branch_var(self, x: np.ndarray, st, tol: float = INT_TOL) -> int:
        v = x[self.bin]
        frac = np.abs(v - np.round(v))
        frac[st.lo[self.bin] == st.hi[self.bin]] = 0.0
        cand = np.flatnonzero(frac > tol)
        if len(cand) == 0:
            return -1
        if self.limits.branching == "chronological":
            return int(self.bin[cand[0]])
        dist = np.abs(v[cand] - 0.5)
        # argmin returns the first, i.e. lowest-index, of equally fractional columns
        return int(self.bin[cand[int(np.argmin(dist))]])

    def solve(self, st) -> str:
        before = st.iterations
        status = self.eng.solve(st)
        self.iterations += st.iterations - before
        self.nodes += 1
        return status


def fit_bounds(series: CashFlowSeries | np.ndarray, b0: float, alpha: CostStructure,
               b_min: float, limits: Limits | None = None, *, big_m: float | None = None,
               var_upper: float | None = None, trigger_margin: float | None = None,
               backend=None) -> FitResult:
    """Cost-minimising (L, Z, H) for a known flow series started at ``b0``.

    Solves the big-M program by best-first branch-and-bound on its LP
    relaxation. Every node's LP point is replayed through the policy
    simulator, so the incumbent is always a realisable policy whose reported
    cost is its simulated cost. Resource limits end the search with a
    ``*_limit`` status and the best triple so far.
    """
    limits = limits or Limits()
    start = time.perf_counter()
    flows = np.ascontiguousarray(
        series.flows if isinstance(series, CashFlowSeries) else series, dtype=np.float64)
    if trigger_margin is None:
        trigger_margin = default_trigger_margin(flows)
    inst = build_instance(flows, b0, alpha, b_min, big_m=big_m, var_upper=var_upper,
                          trigger_margin=trigger_margin)
    S = _Search(inst, limits, backend)
    eng = S.eng
    consts = dict(big_m=inst.M, var_upper=inst.U, trigger_margin=inst.trigger_margin)

    root = eng.initial_state()
    if S.solve(root) == INFEASIBLE:
        return FitResult(None, math.inf, S.nodes, math.inf, "infeasible",
                         lower_bound=math.inf, lp_iterations=S.iterations, **consts,
                         wall_time=time.perf_counter() - start)
    root_obj = eng.objective(root)
    heap: list = []
    cache: OrderedDict = OrderedDict()
    seq = 0
    # lowest LP value among integral points whose replay cost more than the LP claimed
    unresolved = math.inf

    def admit(st, fixes):
        nonlocal seq, unresolved
        obj = eng.objective(st)
        x = eng.values(st)
        j = S.branch_var(x, st)
        cost = S.offer(x, integral=(j < 0))
        if j < 0:
            if cost <= obj + 1e-9 * (1.0 + abs(obj)) + S.tol():
                return
            # integral to tolerance, yet a binary of 1e-8 times M still loosens its
            # rows enough to misstate the policy: branch on the leftover fraction
            j = S.branch_var(x, st, RESIDUAL_TOL)
            if j < 0:
                unresolved = min(unresolved, obj)
                return
        if obj >= S.best - S.tol():
            return
        seq += 1
        heapq.heappush(heap, (obj, seq, fixes, j))
        cache[seq] = st
        if len(cache) > limits.cache_size:
            cache.popitem(last=False)

    admit(root, ())
    status = None
    lower = None
    while heap:
        obj, sid, fixes, j = heap[0]
        if obj >= S.best - S.tol():
            break
        if limits.max_nodes is not None and S.nodes >= limits.max_nodes:
            status = "node_limit"
            break
        if limits.max_seconds is not None and time.perf_counter() - start >= limits.max_seconds:
            status = "time_limit"
            break
        heapq.heappop(heap)
        st = cache.pop(sid, None)
        if st is None:
            st = root.copy()
            for jj, val in fixes:
                eng.set_bounds(st, jj, val, val)
            eng.solve(st)
        for val, last in ((0.0, False), (1.0, True)):
            child = st if last else st.copy()
            eng.set_bounds(child, j, val, val)
            if S.solve(child) == INFEASIBLE:
                continue
            if eng.objective(child) >= S.best - S.tol():
                continue
            admit(child, fixes + ((j, val),))

    open_bound = heap[0][0] if heap else math.inf
    lower = min(open_bound, unresolved, S.best)
    lower = max(lower, root_obj) if math.isfinite(lower) else lower

    if S.best_triple is None:
        if status is None:
            status = "infeasible"
        return FitResult(None, math.inf, S.nodes, math.inf, status, lower_bound=lower,
                         lp_iterations=S.iterations, **consts, wall_time=time.perf_counter() - start)

    _polish(S, root)
    best = S.best
    if best == 0.0:
        gap = 0.0 if lower >= 0.0 else math.inf
    else:
        gap = max(0.0, (best - lower) / abs(best))
    if status is None:
        status = "optimal" if gap <= DEFAULT_GAP else "gap_limit"
    L, Z, H = S.best_triple
    bounds = BoundTriple(L, Z, H)
    _, _, trig = S.k.simulate(inst.flows, inst.b0, L, Z, H)
    return FitResult(bounds=bounds, objective=best, nodes_explored=S.nodes, gap=gap,
                     status=status, lower_bound=lower,
                     pattern=tuple(int(c) for c in trig), milp_pattern=S.best_milp,
                     lp_iterations=S.iterations, **consts,
                     wall_time=time.perf_counter() - start)


def _polish(S: _Search, root) -> None:
    """Re-optimise the continuous bounds with the incumbent's trigger pattern fixed.

    This also yields a binary assignment of the program consistent with the
    returned triple, which the verifier compares against the replay.
    """
    inst, eng = S.inst, S.eng
    _, _, trig = S.k.simulate(inst.flows, inst.b0, *S.best_triple)
    st = root.copy()
    for t, code in enumerate(trig):
        eng.set_bounds(st, inst.var(t, ZP), float(code == _kernels.UP), float(code == _kernels.UP))
        eng.set_bounds(st, inst.var(t, ZM), float(code == _kernels.DOWN), float(code == _kernels.DOWN))
    before = st.iterations
    status = eng.solve(st)
    S.iterations += st.iterations - before
    if status == INFEASIBLE:
        return
    x = eng.values(st)
    fixed_pattern = _pattern_from_x(inst, x)
    slack = 1e-12 * (1.0 + abs(S.best))
    for triple in S.candidates(x):
        cost = S.replay(triple)
        if cost <= S.best + slack:
            _, _, trig2 = S.k.simulate(inst.flows, inst.b0, *triple)
            if tuple(int(c) for c in trig2) == fixed_pattern:
                S.best = cost
                S.best_triple = triple
                S.best_milp = fixed_pattern
                return
