"""Optional numba acceleration.

Hot kernels are written once as plain Python/numpy functions and compiled with
``numba.njit`` when available. Set ``SSGAIN_NUMBA=0`` to force the pure-numpy
fallback (useful for debugging and for the comparison benchmark).
"""
import os

import numpy as np

_FLAG = os.environ.get("SSGAIN_NUMBA", "1").strip().lower()
_WANT = _FLAG not in ("0", "false", "no", "off")

try:  # pragma: no cover - exercised implicitly
    import numba as _nb
except ImportError:  # pragma: no cover
    _nb = None

NUMBA_ENABLED = bool(_WANT and _nb is not None)

if NUMBA_ENABLED and not os.environ.get("NUMBA_THREADING_LAYER"):
    # omp is thread-safe for concurrent callers (bench/tuning thread pools)
    # and avoids the TBB version probe.
    _nb.config.THREADING_LAYER = "omp"


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity otherwise."""
    if NUMBA_ENABLED:
        kwargs.setdefault("cache", True)
        return _nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


if NUMBA_ENABLED:
    prange = _nb.prange
else:
    prange = range


def thread_cap():
    """Parallelism cap from ``SSGAIN_THREADS`` (default: CPU count, max 4)."""
    raw = os.environ.get("SSGAIN_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 1
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


def configure_threads():
    n = thread_cap()
    if NUMBA_ENABLED:
        try:
            _nb.set_num_threads(min(n, _nb.config.NUMBA_NUM_THREADS))
        except Exception:  # pragma: no cover
            pass
    return n


__all__ = ["NUMBA_ENABLED", "njit", "prange", "thread_cap", "configure_threads", "np"]
