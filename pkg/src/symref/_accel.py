"""Optional numba acceleration.

Kernels are written in a numba-compatible subset of Python.  When numba is
importable and ``SYMREF_DISABLE_NUMBA`` is unset (or ``0``), they are compiled
with ``njit``; otherwise the plain Python functions run unchanged.
"""
from __future__ import annotations

import os

_flag = os.environ.get("SYMREF_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def maybe_njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def python_version(fn):
    """Underlying Python function of a possibly compiled kernel."""
    return getattr(fn, "py_func", fn)
