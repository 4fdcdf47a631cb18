"""Numba switch.

Set ``FERMISCAT_DISABLE_NUMBA=1`` to force the pure-numpy kernels (also
used automatically when numba cannot be imported).
"""
import os

_DISABLED = os.environ.get("FERMISCAT_DISABLE_NUMBA", "0").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by FERMISCAT_DISABLE_NUMBA")
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
