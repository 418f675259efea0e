"""Fit (L, Z, H) cash management policies to cash-flow data and measure how well they generalize."""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .cost import CostStructure, DailyCost, daily_cost, holding_cost, policy_cost, transfer_cost
from .ensemble import (Algorithm1Config, Algorithm1Result, EnsembleError, EnsembleModel,
                       EvaluationReport, SynthSpec, UndefinedRatioError, average_bounds,
                       context_sweep, fit_rcms, generalization_power, learning_curve,
                       replicate, run_algorithm1)
from .policy import (BoundTriple, PolicyTrace, Trigger, lower_bound_from_risk,
                     miller_orr_bounds, simulate, step)
from .series import (CashFlowSeries, SeriesError, SeriesStats, SplitSpec, gen_random_walk,
                     parse_csv, sample_subsequence, split, stats, write_csv)
from .solver import (FitResult, Limits, LpNumericalError, LpSolution, MilpInstance,
                     NoFeasibleTriple, VerifyReport, brute_force_fit, build_instance,
                     fit_bounds, solve_lp, verify_fit, write_lp)

__all__ = [
    "BACKEND", "CostStructure", "DailyCost", "daily_cost", "holding_cost", "policy_cost",
    "transfer_cost", "Algorithm1Config", "Algorithm1Result", "EnsembleError", "EnsembleModel",
    "EvaluationReport", "SynthSpec", "UndefinedRatioError", "average_bounds", "context_sweep",
    "fit_rcms", "generalization_power", "learning_curve", "replicate", "run_algorithm1",
    "BoundTriple", "PolicyTrace", "Trigger", "lower_bound_from_risk", "miller_orr_bounds",
    "simulate", "step", "CashFlowSeries", "SeriesError", "SeriesStats", "SplitSpec",
    "gen_random_walk", "parse_csv", "sample_subsequence", "split", "stats", "write_csv",
    "FitResult", "Limits", "LpNumericalError", "LpSolution", "MilpInstance", "NoFeasibleTriple",
    "VerifyReport", "brute_force_fit", "build_instance", "fit_bounds", "solve_lp",
    "verify_fit", "write_lp",
]
