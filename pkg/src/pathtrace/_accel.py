"""Optional numba acceleration.

Kernels are written once in plain numpy-compatible Python and decorated with
:func:`njit`. Setting ``PATHTRACE_NUMBA=0`` (or running without numba
installed) leaves them as ordinary Python functions, which is useful for
debugging and for checking that both paths agree.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("PATHTRACE_NUMBA", "1").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_ENABLED = _numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if NUMBA_ENABLED:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
