"""JIT selection for the numeric kernels.

Kernels are written once in numba-compatible Python. When numba is missing,
or ``SPHEREPPW_DISABLE_NUMBA`` is set to a truthy value, the decorator below
is the identity and the kernels run as plain Python over numpy arrays.
"""

import os

_FLAG = os.environ.get("SPHEREPPW_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and not DISABLED


def jit(func):
    """``numba.njit(cache=True, nogil=True)`` or the bare function."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def python_impl(func):
    """Return the uncompiled Python body of a kernel (for benchmarks/tests)."""
    return getattr(func, "py_func", func)
