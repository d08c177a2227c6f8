"""Numba switch.

Set ``MAGNUS_MIDPOINT_NO_NUMBA=1`` to run every hot kernel through its
pure-numpy implementation instead of the jitted one.
"""
import os

_DISABLE = os.environ.get("MAGNUS_MIDPOINT_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
