"""Bound-triple policies: the (L, Z, H) decision rule, simulation and closed-form bounds."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .series import CashFlowSeries


class Trigger(enum.IntEnum):
    NONE = _kernels.NONE
    TO_TARGET_UP = _kernels.UP
    TO_TARGET_DOWN = _kernels.DOWN


@dataclass(frozen=True)
class BoundTriple:
    """Lower bound ``L``, target ``Z`` and upper bound ``H``, with L <= Z <= H."""

    L: float
    Z: float
    H: float

    def __post_init__(self):
        for name in ("L", "Z", "H"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"bound {name} is not finite: {value}")
            object.__setattr__(self, name, value)
        if not self.L <= self.Z <= self.H:
            raise ValueError(f"bounds must satisfy L <= Z <= H, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.L, self.Z, self.H)

    def shifted(self, c: float) -> "BoundTriple":
        return BoundTriple(self.L + c, self.Z + c, self.H + c)

    def scaled(self, c: float) -> "BoundTriple":
        return BoundTriple(self.L * c, self.Z * c, self.H * c)

    def to_dict(self) -> dict:
        return {"L": self.L, "Z": self.Z, "H": self.H}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundTriple":
        return cls(float(d["L"]), float(d["Z"]), float(d["H"]))


@dataclass(frozen=True)
class PolicyTrace:
    """Per-day balances ``b_t``, actions ``x_t`` and trigger flags of a simulated policy."""

    balances: tuple[float, ...]
    actions: tuple[float, ...]
    initial_balance: float
    triggered: tuple[Trigger, ...]

    def __len__(self) -> int:
        return len(self.balances)


def step(b_prev: float, f: float, bounds: BoundTriple) -> tuple[float, float, Trigger]:
    """One day of the policy: returns (action, new balance, trigger).

    Transfers happen only when ``b_prev + f`` leaves the closed band [L, H];
    a transfer restores the balance to Z exactly.
    """
    w = b_prev + f
    if w > bounds.H:
        return bounds.Z - w, bounds.Z, Trigger.TO_TARGET_DOWN
    if w < bounds.L:
        return bounds.Z - w, bounds.Z, Trigger.TO_TARGET_UP
    return 0.0, w, Trigger.NONE


def simulate_arrays(flows, b0: float, bounds: BoundTriple, backend=None):
    """Fast path of ``simulate``: numpy arrays (balances, actions, trigger codes)."""
    k = backend or _kernels.backend
    return k.simulate(np.ascontiguousarray(flows, dtype=np.float64), float(b0),
                      bounds.L, bounds.Z, bounds.H)


def simulate(series: CashFlowSeries, b0: float, bounds: BoundTriple) -> PolicyTrace:
    balances, actions, triggers = simulate_arrays(series.to_array(), b0, bounds)
    return PolicyTrace(
        balances=tuple(balances.tolist()),
        actions=tuple(actions.tolist()),
        initial_balance=float(b0),
        triggered=tuple(Trigger(int(c)) for c in triggers),
    )


def lower_bound_from_risk(sigma: float, delta: float) -> float:
    """Precautionary lower bound ``delta * sigma``."""
    return delta * sigma


def miller_orr_bounds(L: float, sigma: float, gamma0: float, v: float) -> BoundTriple:
    """Miller-Orr target and upper bound for a given lower bound.

    Z = L + (3 gamma0 sigma^2 / (4 v))^(1/3) and H = 3Z - 2L.
    """
    if not v > 0:
        raise ValueError(f"holding rate v must be > 0, got {v}")
    if sigma < 0 or gamma0 < 0:
        raise ValueError("sigma and gamma0 must be >= 0")
    Z = L + (3.0 * gamma0 * sigma ** 2 / (4.0 * v)) ** (1.0 / 3.0)
    # H = 3Z - 2L written so that a zero spread gives H == Z exactly
    H = Z + 2.0 * (Z - L)
    return BoundTriple(L, Z, H)
