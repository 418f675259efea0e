"""Bounded dual simplex on a dense condensed tableau, with warm starts for branch-and-bound."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from .instance import MilpInstance


class LpNumericalError(RuntimeError):
    """The simplex could not reach a verified basis (singular or ill-conditioned)."""


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int


class SimplexState:
    """Basis, tableau ``T = B^-1 N``, reduced costs, values and bounds of every column.

    Columns are the structural variables followed by one slack per row.
    """

    __slots__ = ("T", "d", "x", "lo", "hi", "head", "nb", "since_refactor", "iterations")

    def __init__(self, T, d, x, lo, hi, head, nb, since_refactor=0, iterations=0):
        self.T, self.d, self.x, self.lo, self.hi = T, d, x, lo, hi
        self.head, self.nb = head, nb
        self.since_refactor = since_refactor
        self.iterations = iterations

    def copy(self) -> "SimplexState":
        return SimplexState(self.T.copy(), self.d.copy(), self.x.copy(), self.lo.copy(),
                            self.hi.copy(), self.head.copy(), self.nb.copy(),
                            self.since_refactor, self.iterations)


class DualSimplex:
    """Dual simplex engine for ``min c x, A_ub x <= b_ub, A_eq x = b_eq, lb <= x <= ub``.

    Every variable is boxed, so the all-slack basis with each structural at
    the bound favoured by its cost is dual feasible and no phase one is
    needed. Slacks of inequality rows get the implied upper bound
    ``b - min(A x)`` over the box.
    """

    def __init__(self, c, A_ub, b_ub, A_eq, b_eq, lb, ub, backend=None,
                 refactor_every: int = 400, max_iter: int | None = None,
                 bland_after: int = 50):
        self.k = backend or _kernels.backend
        c = np.asarray(c, dtype=np.float64)
        A = np.vstack([A_ub, A_eq]).astype(np.float64)
        b = np.concatenate([b_ub, b_eq]).astype(np.float64)
        self.nv = nv = len(c)
        self.m = m = len(b)
        self.n_ub = len(b_ub)
        self.A_full = np.hstack([A, np.eye(m)])
        self.b = b
        self.c = c
        cmax = float(np.abs(c).max()) if np.any(c) else 1.0
        self.c_scaled = np.concatenate([c / cmax, np.zeros(m)])
        lb = np.asarray(lb, dtype=np.float64)
        ub = np.asarray(ub, dtype=np.float64)
        row_min = np.minimum(A * lb, A * ub).sum(axis=1)
        s_hi = b - row_min
        s_hi[self.n_ub:] = 0.0
        span = max(1.0, float(np.abs(b).max()), float(np.abs(ub).max()), float(np.abs(lb).max()))
        # absolute: a binary off by tol is magnified by M in its indicator rows
        self.tol_primal = 1e-9
        self.tol_dual = 1e-9
        self.tol_pivot = 1e-9
        self.tol_residual = 1e-8 * span
        self.row_infeasible = bool(np.any(s_hi[:self.n_ub] < -self.tol_primal))
        self.lo0 = np.concatenate([lb, np.zeros(m)])
        self.hi0 = np.concatenate([ub, np.maximum(s_hi, 0.0)])
        self.refactor_every = refactor_every
        self.max_iter = max_iter or 50 * (m + nv)
        self.bland_after = bland_after

    @classmethod
    def from_instance(cls, instance: MilpInstance, **kw) -> "DualSimplex":
        return cls(instance.c, instance.A_ub, instance.b_ub, instance.A_eq, instance.b_eq,
                   instance.lb, instance.ub, **kw)

    def initial_state(self) -> SimplexState:
        nv, m = self.nv, self.m
        lo, hi = self.lo0.copy(), self.hi0.copy()
        x = np.where(self.c_scaled >= 0, lo, hi)
        x[nv:] = 0.0
        T = np.ascontiguousarray(self.A_full[:, :nv])
        x[nv:] = self.b - T @ x[:nv]
        return SimplexState(T.copy(), self.c_scaled[:nv].copy(), x, lo, hi,
                            np.arange(nv, nv + m, dtype=np.int64),
                            np.arange(nv, dtype=np.int64))

    def refactor(self, st: SimplexState) -> None:
        """Rebuild tableau, basic values and reduced costs from the original data."""
        B = self.A_full[:, st.head]
        N = self.A_full[:, st.nb]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise LpNumericalError("basis matrix is singular") from exc
        if not np.all(np.isfinite(Binv)):
            raise LpNumericalError("basis inverse is not finite")
        st.T = np.ascontiguousarray(Binv @ N)
        st.x[st.head] = Binv @ (self.b - N @ st.x[st.nb])
        y = Binv.T @ self.c_scaled[st.head]
        st.d = np.ascontiguousarray(self.c_scaled[st.nb] - N.T @ y)
        st.since_refactor = 0

    def set_bounds(self, st: SimplexState, j: int, lo: float, hi: float) -> None:
        """Change the box of column ``j``; a nonbasic column moves to its new bound."""
        st.lo[j], st.hi[j] = lo, hi
        pos = np.flatnonzero(st.nb == j)
        if len(pos):
            k = int(pos[0])
            new = lo if (st.d[k] >= 0 or lo == hi) else hi
            delta = new - st.x[j]
            if delta != 0.0:
                st.x[st.head] -= st.T[:, k] * delta
                st.x[j] = new

    def _repair_duals(self, st: SimplexState) -> bool:
        """Flip nonbasic columns whose reduced cost sign disagrees with their bound."""
        xs = st.x[st.nb]
        lo, hi = st.lo[st.nb], st.hi[st.nb]
        free = lo < hi
        wrong_lo = free & (xs == lo) & (st.d < -1e-7)
        wrong_hi = free & (xs == hi) & (st.d > 1e-7)
        bad = np.flatnonzero(wrong_lo | wrong_hi)
        for k in bad:
            j = st.nb[k]
            new = hi[k] if wrong_lo[k] else lo[k]
            st.x[st.head] -= st.T[:, k] * (new - st.x[j])
            st.x[j] = new
        return len(bad) > 0

    def _residual(self, st: SimplexState) -> float:
        return float(np.abs(self.b - self.A_full @ st.x).max()) if self.m else 0.0

    def solve(self, st: SimplexState) -> str:
        """Reoptimise ``st`` in place; returns OPTIMAL or INFEASIBLE."""
        if self.row_infeasible or np.any(st.lo > st.hi):
            return INFEASIBLE
        if st.since_refactor >= self.refactor_every:
            self.refactor(st)
        for attempt in range(4):
            status, it, _ = self.k.dual_simplex(
                st.T, st.d, st.x, st.lo, st.hi, st.head, st.nb, self.max_iter,
                self.tol_primal, self.tol_dual, self.tol_pivot, self.bland_after)
            st.iterations += it
            st.since_refactor += it
            if status == _kernels.INFEASIBLE:
                # an accurate tableau keeps the row identities satisfied
                if attempt == 3 or self._residual(st) <= self.tol_residual:
                    return INFEASIBLE
                self.refactor(st)
                continue
            if status == _kernels.ITERATION_LIMIT:
                self.refactor(st)
                continue
            if self._residual(st) > self.tol_residual:
                self.refactor(st)
                continue
            if self._repair_duals(st):
                continue
            return OPTIMAL
        raise LpNumericalError(f"no verified basis after {st.iterations} iterations")

    def values(self, st: SimplexState) -> np.ndarray:
        return st.x[:self.nv].copy()

    def objective(self, st: SimplexState) -> float:
        return float(self.c @ st.x[:self.nv])


def solve_lp(instance: MilpInstance, fixed: dict | None = None, backend=None) -> LpSolution:
    """LP relaxation of ``instance`` with some binaries fixed.

    ``fixed`` maps a column index or variable name to 0 or 1; the remaining
    binaries are relaxed to [0, 1].
    """
    eng = DualSimplex.from_instance(instance, backend=backend)
    st = eng.initial_state()
    for key, val in (fixed or {}).items():
        j = instance.index(key) if isinstance(key, str) else int(key)
        if j not in set(instance.binaries.tolist()):
            raise ValueError(f"{instance.names[j]} is not a binary variable")
        if val not in (0, 1):
            raise ValueError(f"binary {instance.names[j]} can only be fixed to 0 or 1")
        eng.set_bounds(st, j, float(val), float(val))
    status = eng.solve(st)
    if status == INFEASIBLE:
        return LpSolution(x=np.full(instance.n_vars, np.nan), objective=np.inf,
                          status=INFEASIBLE, iterations=st.iterations)
    x = eng.values(st)
    return LpSolution(x=x, objective=eng.objective(st), status=OPTIMAL,
                      iterations=st.iterations)
