"""Optional numba acceleration.

Hot kernels are written as plain loops over numpy arrays and decorated with
:func:`njit`.  When numba is importable and ``RICCONFLICT_DISABLE_NUMBA`` is
unset (or ``0``), they are compiled in nopython mode; otherwise the very same
function runs as ordinary Python.  Kernels that have a faster vectorized numpy
formulation register it through :func:`dispatch`.
"""

from __future__ import annotations

import os
import warnings

ENV_FLAG = "RICCONFLICT_DISABLE_NUMBA"


class PerformanceWarning(UserWarning):
    pass


def _flag_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _flag_disabled()

if not HAVE_NUMBA and not _flag_disabled():  # pragma: no cover
    warnings.warn(
        "numba is not available; kernels run as interpreted Python", PerformanceWarning
    )


def njit(fn):
    """Compile ``fn`` with numba when acceleration is active.

    The undecorated function stays reachable as ``fn.py_func`` in both modes so
    tests and benchmarks can run the interpreted path side by side.
    """
    if USE_NUMBA:
        compiled = _numba.njit(cache=True, nogil=True)(fn)
        return compiled
    fn.py_func = fn
    return fn


def dispatch(numba_impl, numpy_impl):
    """Pick the numba kernel or the vectorized numpy fallback."""
    return numba_impl if USE_NUMBA else numpy_impl


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
