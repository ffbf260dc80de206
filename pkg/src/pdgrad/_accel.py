"""JIT plumbing: numba-compiled hot loops with a pure-numpy fallback.

Setting the environment variable ``PDGRAD_NO_NUMBA=1`` (before import)
forces the fallback; the same kernels then run as plain Python/numpy.
The flag is read once at import time.

The sampling stream is generated by the splitmix64 finalizer applied to
``seed + t * 0x9E3779B97F4A7C15`` (counter-based, one 64-bit state word),
so draw ``t`` is O(1)-addressable and identical across platforms and
across the numba/numpy paths.
"""

import os

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = 0xFFFFFFFFFFFFFFFF

NUMBA_DISABLED = os.environ.get("PDGRAD_NO_NUMBA", "").strip() not in ("", "0")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via PDGRAD_NO_NUMBA")
    from numba import njit as _numba_njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def maybe_njit(func=None, **kwargs):
    """``numba.njit`` when acceleration is on, identity decorator otherwise."""
    if not NUMBA_ENABLED:
        if func is not None:
            return func
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if func is not None:
        return _numba_njit(**kwargs)(func)
    return _numba_njit(**kwargs)


def uniform01_py(seed, t):
    """Pure-Python splitmix64 draw: uniform in [0, 1) for counter t."""
    z = (int(seed) + int(t) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z = z ^ (z >> 31)
    return (z >> 11) * 2.0**-53


if NUMBA_ENABLED:

    @_numba_njit(cache=True, nogil=True)
    def uniform01(seed, t):
        """splitmix64 draw: uniform in [0, 1) for counter t (uint64 path)."""
        z = np.uint64(seed) + np.uint64(t) * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)) * 2.0**-53

else:
    uniform01 = uniform01_py


@maybe_njit
def pick_index(cum, u):
    """Inverse-CDF index: smallest i with cum[i] >= u (ties to lower index)."""
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] >= u:
            hi = mid
        else:
            lo = mid + 1
    return lo
