"""Exact bound fitting: big-M program, LP engine, branch-and-bound, grid oracle and audit."""
from .bnb import DEFAULT_GAP, FLOOR_TOL, INT_TOL, FitResult, Limits, fit_bounds
from .instance import MilpInstance, build_instance, write_lp
from .lp import LpNumericalError, LpSolution, solve_lp
from .oracle import NoFeasibleTriple, brute_force_fit
from .verify import VerifyReport, verify_fit

__all__ = [
    "DEFAULT_GAP", "FLOOR_TOL", "INT_TOL", "FitResult", "Limits", "fit_bounds",
    "MilpInstance", "build_instance", "write_lp", "LpNumericalError", "LpSolution",
    "solve_lp", "NoFeasibleTriple", "brute_force_fit", "VerifyReport", "verify_fit",
]
