"""Numba switch for the hot kernels.

Set ``INFOTESTS_NO_NUMBA=1`` to run every kernel through its pure Python /
NumPy path instead. Both paths must give identical results.
"""
import os

DISABLED = os.environ.get("INFOTESTS_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and not DISABLED


def njit(func):
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func
