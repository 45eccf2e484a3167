"""Floating-point helpers: exact-rounded summation and double-double phases.

Phases ``t * log n`` reach ~1e10 for the largest heights we support, so a
plain double product loses most of the fractional part that matters after
reduction mod 2*pi.  The helpers here carry ``log n`` as a (hi, lo) pair and
form the product with Dekker's error-free transformation before reducing.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

TWO_PI_HI = 6.283185307179586
TWO_PI_LO = 2.4492935982947064e-16

_SPLITTER = 134217729.0  # 2**27 + 1

# Fixed block length for every blocked reduction in the package.  Results are
# bit-reproducible for this value regardless of how blocks are scheduled.
BLOCK = 1 << 16


def fsum_complex(values) -> complex:
    """Correctly rounded sum of a complex array (real and imaginary parts)."""
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))
    return complex(math.fsum(arr.tolist()), 0.0)


def blocked_fsum(values) -> complex:
    """Sum ``values`` block by block, then combine the block partials.

    Every block is summed with :func:`math.fsum`; the partials are combined
    the same way, so the association order is fixed by :data:`BLOCK` alone.
    """
    arr = np.asarray(values)
    partials = [fsum_complex(arr[i:i + BLOCK]) for i in range(0, arr.size, BLOCK)]
    return complex(math.fsum(p.real for p in partials), math.fsum(p.imag for p in partials))


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    """Return ``(p, e)`` with ``p = fl(a*b)`` and ``p + e == a*b`` exactly."""
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


@lru_cache(maxsize=4)
def log_table(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """``log n`` for ``n = 1..n_max`` as a double-double (hi, lo) pair.

    The low word comes from the platform ``long double``; where that type is
    plain binary64 the low word is zero and phases degrade to double accuracy.
    """
    n = np.arange(1, n_max + 1, dtype=np.longdouble)
    full = np.log(n)
    hi = full.astype(np.float64)
    lo = (full - hi.astype(np.longdouble)).astype(np.float64)
    hi.setflags(write=False)
    lo.setflags(write=False)
    return hi, lo


def reduced_phase(t: float, log_hi: np.ndarray, log_lo: np.ndarray) -> np.ndarray:
    """``t * log n`` reduced to roughly ``[-pi, pi]`` using double-double products."""
    p, e = two_prod(np.float64(t), log_hi)
    e = e + t * log_lo
    k = np.rint(p / TWO_PI_HI)
    q, qe = two_prod(k, TWO_PI_HI)
    return ((p - q) - qe) + (e - k * TWO_PI_LO)
