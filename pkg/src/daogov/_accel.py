"""Numba dispatch.

Kernels are compiled with numba when it is importable and the environment
variable ``DAOGOV_DISABLE_NUMBA`` is unset (or ``0``). Otherwise every kernel
runs its pure-numpy twin. Callers can also force a backend per call with
``backend="numba"`` or ``backend="numpy"``.
"""
import os
import warnings

_flag = os.environ.get("DAOGOV_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None

if not _disabled and not HAVE_NUMBA:
    warnings.warn("numba not installed; using numpy kernels", RuntimeWarning, stacklevel=2)

DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def resolve_backend(backend=None):
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    return backend
