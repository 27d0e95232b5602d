"""Numba switch.

Set ``PEPTILE_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. when
numba is missing or when debugging a kernel.
"""
import os

_disabled = os.environ.get("PEPTILE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError("numba disabled by PEPTILE_DISABLE_NUMBA")
    from numba import njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


__all__ = ["USE_NUMBA", "njit"]
