"""Cost structures and the transfer / holding / daily / policy cost functions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .policy import PolicyTrace

INF = math.inf


@dataclass(frozen=True)
class CostStructure:
    """Economic context: fixed and variable transfer costs, holding rate ``v``, shortage rate ``u``.

    Fixed costs are money amounts per transfer; ``gamma1_*``, ``v`` and ``u``
    are per-unit rates (0.01 % is stored as 1e-4). ``u`` may be ``math.inf``.
    """

    gamma0_plus: float
    gamma0_minus: float
    gamma1_plus: float
    gamma1_minus: float
    v: float
    u: float = INF

    def __post_init__(self):
        for name in ("gamma0_plus", "gamma0_minus", "gamma1_plus", "gamma1_minus", "v"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
            object.__setattr__(self, name, value)
        if not self.v > 0:
            raise ValueError(f"v must be > 0, got {self.v}")
        u = float(self.u)
        if math.isnan(u) or u <= 0:
            raise ValueError(f"u must be > 0 or inf, got {self.u}")
        object.__setattr__(self, "u", u)

    def scaled(self, c: float) -> "CostStructure":
        """Every coefficient multiplied by ``c``."""
        return CostStructure(*(c * getattr(self, f) for f in
                               ("gamma0_plus", "gamma0_minus", "gamma1_plus",
                                "gamma1_minus", "v", "u")))

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in
             ("gamma0_plus", "gamma0_minus", "gamma1_plus", "gamma1_minus", "v")}
        d["u"] = "inf" if math.isinf(self.u) else self.u
        return d

    @classmethod
    def from_dict(cls, d: dict, unit_scale: float = 1.0) -> "CostStructure":
        """Build from config values.

        Fixed costs are multiplied by ``unit_scale`` (e.g. 1e-6 for euros to
        millions). Rates accept numbers or percent strings such as ``"0.01%"``.
        ``u`` accepts a number or ``"inf"``.
        """
        missing = {"gamma0_plus", "gamma0_minus", "gamma1_plus", "gamma1_minus", "v"} - set(d)
        if missing:
            raise ValueError(f"cost structure is missing {sorted(missing)}")
        return cls(
            gamma0_plus=_scale(_number(d["gamma0_plus"], "gamma0_plus"), unit_scale),
            gamma0_minus=_scale(_number(d["gamma0_minus"], "gamma0_minus"), unit_scale),
            gamma1_plus=_rate(d["gamma1_plus"], "gamma1_plus"),
            gamma1_minus=_rate(d["gamma1_minus"], "gamma1_minus"),
            v=_rate(d["v"], "v"),
            u=_rate(d.get("u", "inf"), "u"),
        )


def _scale(x: float, unit_scale: float) -> float:
    # 20 * 1e-6 rounds to 1.9999999999999998e-05; 20 / 1e6 gives 2e-05
    inv = 1.0 / unit_scale
    if unit_scale < 1.0 and inv == round(inv):
        return x / round(inv)
    return x * unit_scale


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    return float(value)


def _rate(value, name: str) -> float:
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "infinity", "+inf"):
            return INF
        if s.endswith("%"):
            try:
                return float(s[:-1]) / 100.0
            except ValueError:
                raise ValueError(f"{name}: bad percentage {value!r}") from None
        raise ValueError(f"{name}: expected a number, a percentage or 'inf', got {value!r}")
    return _number(value, name)


@dataclass(frozen=True)
class DailyCost:
    transfer: float
    holding: float
    total: float


def transfer_cost(x: float, alpha: CostStructure) -> float:
    if x > 0:
        return alpha.gamma0_plus + alpha.gamma1_plus * x
    if x < 0:
        return alpha.gamma0_minus - alpha.gamma1_minus * x
    return 0.0


def holding_cost(b: float, alpha: CostStructure) -> float:
    if b >= 0:
        return alpha.v * b
    if math.isinf(alpha.u):
        return INF
    return -alpha.u * b


def daily_cost(x: float, b: float, alpha: CostStructure) -> DailyCost:
    g = transfer_cost(x, alpha)
    h = holding_cost(b, alpha)
    return DailyCost(transfer=g, holding=h, total=g + h)


def policy_cost(trace: "PolicyTrace", alpha: CostStructure, averaged: bool = False) -> float:
    """Sum of daily costs over a trace; divided by the horizon when ``averaged``."""
    x = np.asarray(trace.actions, dtype=np.float64)
    b = np.asarray(trace.balances, dtype=np.float64)
    if len(x) != len(b):
        raise ValueError("trace actions and balances differ in length")
    if len(b) == 0:
        return 0.0
    total = float(np.sum(transfer_costs(x, alpha)) + np.sum(holding_costs(b, alpha)))
    return total / len(b) if averaged else total


def transfer_costs(x: np.ndarray, alpha: CostStructure) -> np.ndarray:
    """Vectorised ``transfer_cost``."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, alpha.gamma0_plus + alpha.gamma1_plus * x,
                    np.where(x < 0, alpha.gamma0_minus - alpha.gamma1_minus * x, 0.0))


def holding_costs(b: np.ndarray, alpha: CostStructure) -> np.ndarray:
    """Vectorised ``holding_cost``."""
    b = np.asarray(b, dtype=np.float64)
    out = alpha.v * b
    neg = b < 0
    if neg.any():
        out[neg] = INF if math.isinf(alpha.u) else -alpha.u * b[neg]
    return out
