"""Numerical kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it imports; set ``CASHFIT_PURE_PYTHON=1``
to force the fallback. Both backends expose the same functions and make the
same pivoting and tie-breaking choices.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("CASHFIT_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

NONE, UP, DOWN = python_backend.NONE, python_backend.UP, python_backend.DOWN
OPTIMAL = python_backend.OPTIMAL
INFEASIBLE = python_backend.INFEASIBLE
ITERATION_LIMIT = python_backend.ITERATION_LIMIT


def get_backend(name=None):
    """Return the kernel module called ``name`` ("compiled"/"python"), or the active one."""
    if name is None:
        return backend
    if name == "python":
        return python_backend
    if name == "compiled":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not available")
        return compiled_backend
    raise ValueError(f"unknown kernel backend {name!r}")
