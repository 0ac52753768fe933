"""Optional numba acceleration.

Kernels are written once in a numba-compatible numpy subset. Setting
``SUPHUN_DISABLE_NUMBA=1`` (or running without numba installed) keeps them as
plain Python/numpy functions.
"""
import os

_DISABLED = os.environ.get("SUPHUN_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def maybe_njit(func):
    """Compile ``func`` with numba when enabled; the original stays at ``.py_func``."""
    if not NUMBA_ENABLED:
        func.py_func = func
        return func
    return _njit(cache=True)(func)
