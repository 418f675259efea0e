"""Big-M mixed-integer program whose optimal (L, Z, H) fits a cash-flow data set."""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

from ..cost import CostStructure
from ..series import CashFlowSeries

# per-step variable order
XP, XM, B, ZP, ZM = range(5)
STEP_VARS = ("xp", "xm", "b", "zp", "zm")
IL, IZ, IH = 0, 1, 2


def default_var_upper(flows: np.ndarray, b0: float, b_min: float) -> float:
    """U = |b0| + sum|f| + |b_min| + max|f|; no balance reachable by a sensible policy exceeds it."""
    a = np.abs(flows)
    return float(abs(b0) + a.sum() + abs(b_min) + a.max())


def default_big_m(flows: np.ndarray, b0: float, U: float) -> float:
    M = float(2.0 * (abs(b0) + np.abs(flows).sum() + U))
    # an all-zero instance would give M = 0 and make the indicator rows vacuous
    return M if M > 0 else 1.0


def default_trigger_margin(flows: np.ndarray) -> float:
    return 1e-6 * max(1.0, float(np.abs(flows).max()))


@dataclass(frozen=True, eq=False)
class MilpInstance:
    """Dense LP data of the fitting program plus the inputs it was built from.

    Rows are ``A_ub x <= b_ub`` and ``A_eq x = b_eq``; ``lb <= x <= ub``.
    Variables are ``L, Z, H`` followed by ``xp_t, xm_t, b_t, zp_t, zm_t``
    for t = 1..N.
    """

    n_steps: int
    flows: np.ndarray
    b0: float
    alpha: CostStructure
    b_min: float
    M: float
    U: float
    trigger_margin: float
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    names: tuple[str, ...]
    ub_rows: tuple[str, ...]
    eq_rows: tuple[str, ...]
    binaries: np.ndarray

    @property
    def n_vars(self) -> int:
        return len(self.c)

    def var(self, t: int, k: int) -> int:
        """Column of per-step variable ``k`` (XP..ZM) at zero-based step ``t``."""
        return 3 + 5 * t + k

    def index(self, name: str) -> int:
        return self.names.index(name)

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def describe(self) -> dict:
        return {"n_steps": self.n_steps, "b0": self.b0, "b_min": self.b_min,
                "M": self.M, "U": self.U, "trigger_margin": self.trigger_margin,
                "n_vars": self.n_vars, "n_binaries": int(len(self.binaries)),
                "n_rows": int(len(self.b_ub) + len(self.b_eq))}


def build_instance(series: CashFlowSeries | np.ndarray, b0: float,
                   alpha: CostStructure, b_min: float, big_m: float | None = None,
                   var_upper: float | None = None,
                   trigger_margin: float = 0.0) -> MilpInstance:
    """Emit the fitting program for ``series`` started from balance ``b0``.

    Per step: balance transition, the up- and down-trigger pairs, the
    no-action band, ``x <= M z`` links and ``zp + zm <= 1``; globally
    ``b_min <= L <= Z <= H <= U``. Objective is the unaveraged sum of
    fixed, variable and holding costs.

    ``trigger_margin`` > 0 requires a transfer's pre-action balance to sit at
    least that far outside [L, H], matching the strict triggers of the
    simulator. Zero gives the textbook non-strict program.
    """
    flows = np.asarray(series.flows if isinstance(series, CashFlowSeries) else series,
                       dtype=np.float64)
    N = len(flows)
    if N == 0:
        raise ValueError("cannot build a program for an empty series")
    if not isinstance(alpha, CostStructure):
        raise TypeError("alpha must be a CostStructure")
    if trigger_margin < 0:
        raise ValueError("trigger_margin must be >= 0")
    b0 = float(b0)
    b_min = float(b_min)
    U = default_var_upper(flows, b0, b_min) if var_upper is None else float(var_upper)
    if not (np.isfinite(U) and U >= b_min):
        raise ValueError(f"var_upper must be finite and >= b_min, got {U}")
    M_min = default_big_m(flows, b0, U)
    if big_m is None:
        M = M_min
    else:
        M = float(big_m)
        if M < M_min:
            raise ValueError(f"big_m={M} is below the validity floor 2(|b0|+sum|f|+U)={M_min}")

    nv = 3 + 5 * N
    names = ["L", "Z", "H"]
    for t in range(1, N + 1):
        names += [f"{v}_{t}" for v in STEP_VARS]
    c = np.zeros(nv)
    lb = np.zeros(nv)
    ub = np.zeros(nv)
    lb[:3] = b_min
    ub[:3] = U

    A_ub = np.zeros((11 * N + 2, nv))
    b_ub = np.zeros(11 * N + 2)
    A_eq = np.zeros((N, nv))
    b_eq = np.zeros(N)
    ub_rows: list[str] = []
    eq_rows: list[str] = []

    def col(t, k):
        return 3 + 5 * t + k

    row = 0

    def add(coefs: dict, rhs: float, w_coef: float, t: int, name: str):
        # w_t = b_{t-1} + f_t enters with coefficient w_coef
        nonlocal row
        for j, a in coefs.items():
            A_ub[row, j] += a
        const = w_coef * flows[t]
        if t == 0:
            const += w_coef * b0
        else:
            A_ub[row, col(t - 1, B)] += w_coef
        b_ub[row] = rhs - const
        ub_rows.append(f"{name}_{t + 1}")
        row += 1

    g = alpha
    for t in range(N):
        xp, xm, b, zp, zm = (col(t, k) for k in range(5))
        c[xp], c[xm], c[b], c[zp], c[zm] = g.gamma1_plus, g.gamma1_minus, g.v, g.gamma0_plus, g.gamma0_minus
        lb[xp], ub[xp] = 0.0, U
        lb[xm], ub[xm] = 0.0, U
        lb[b], ub[b] = b_min, U
        lb[zp], ub[zp] = 0.0, 1.0
        lb[zm], ub[zm] = 0.0, 1.0

        # b_t - b_{t-1} - xp + xm = f_t
        A_eq[t, b] = 1.0
        A_eq[t, xp] = -1.0
        A_eq[t, xm] = 1.0
        if t == 0:
            b_eq[t] = flows[t] + b0
        else:
            A_eq[t, col(t - 1, B)] = -1.0
            b_eq[t] = flows[t]
        eq_rows.append(f"trans_{t + 1}")

        # z+ = 1 only when w <= L (strictly below by the margin), then x+ = Z - w
        add({IL: -1.0, zp: M}, M - trigger_margin, 1.0, t, "upL")
        add({xp: -1.0, IZ: 1.0, zp: M}, M, -1.0, t, "upZlo")
        add({xp: 1.0, IZ: -1.0, zp: M}, M, 1.0, t, "upZhi")
        # z- = 1 only when w >= H, then x- = w - Z
        add({IH: 1.0, zm: M}, M - trigger_margin, -1.0, t, "downH")
        add({xm: -1.0, IZ: -1.0, zm: M}, M, 1.0, t, "downZlo")
        add({xm: 1.0, IZ: 1.0, zm: M}, M, -1.0, t, "downZhi")
        # with no trigger the balance stays inside [L, H]
        add({IL: 1.0, zp: -M, zm: -M}, 0.0, -1.0, t, "bandL")
        add({IH: -1.0, zp: -M, zm: -M}, 0.0, 1.0, t, "bandH")
        # x <= M z (the lower halves of -Mz <= x <= Mz are the bounds x >= 0)
        add({xp: 1.0, zp: -M}, 0.0, 0.0, t, "linkp")
        add({xm: 1.0, zm: -M}, 0.0, 0.0, t, "linkm")
        add({zp: 1.0, zm: 1.0}, 1.0, 0.0, t, "excl")

    A_ub[row, IL], A_ub[row, IZ] = 1.0, -1.0
    ub_rows.append("order_LZ")
    row += 1
    A_ub[row, IZ], A_ub[row, IH] = 1.0, -1.0
    ub_rows.append("order_ZH")
    row += 1

    binaries = np.array([col(t, k) for t in range(N) for k in (ZP, ZM)], dtype=np.int64)
    return MilpInstance(
        n_steps=N, flows=flows, b0=b0, alpha=alpha, b_min=b_min, M=M, U=U,
        trigger_margin=float(trigger_margin), c=c, A_ub=A_ub, b_ub=b_ub,
        A_eq=A_eq, b_eq=b_eq, lb=lb, ub=ub, names=tuple(names),
        ub_rows=tuple(ub_rows), eq_rows=tuple(eq_rows), binaries=binaries)


def _fmt(a: float) -> str:
    return repr(float(a))


def _linear(coefs: np.ndarray, names) -> str:
    parts = []
    for j in np.flatnonzero(coefs):
        a = coefs[j]
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        term = names[j] if mag == 1.0 else f"{_fmt(mag)} {names[j]}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0 " + names[0]
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def write_lp(instance: MilpInstance, stream: IO[str]) -> None:
    """Dump ``instance`` in CPLEX LP text format for cross-checking with other solvers."""
    names = instance.names
    stream.write("\\ cash management bound-fitting program\n")
    stream.write(f"\\ N={instance.n_steps} b0={_fmt(instance.b0)} M={_fmt(instance.M)} U={_fmt(instance.U)}\n")
    stream.write("Minimize\n")
    stream.write(f" obj: {_linear(instance.c, names)}\n")
    stream.write("Subject To\n")
    for name, a, rhs in zip(instance.eq_rows, instance.A_eq, instance.b_eq):
        stream.write(f" {name}: {_linear(a, names)} = {_fmt(rhs)}\n")
    for name, a, rhs in zip(instance.ub_rows, instance.A_ub, instance.b_ub):
        stream.write(f" {name}: {_linear(a, names)} <= {_fmt(rhs)}\n")
    stream.write("Bounds\n")
    binary = set(instance.binaries.tolist())
    for j, name in enumerate(names):
        if j in binary:
            continue
        stream.write(f" {_fmt(instance.lb[j])} <= {name} <= {_fmt(instance.ub[j])}\n")
    stream.write("Binaries\n")
    stream.write(" " + " ".join(names[j] for j in instance.binaries) + "\n")
    stream.write("End\n")
