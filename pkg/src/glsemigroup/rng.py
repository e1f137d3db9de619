"""Counter-based random streams (Philox4x32-10) usable inside numba kernels.

A stream is addressed by (seed, replica, tag).  The seed is the Philox key;
replica and tag occupy the upper counter words, and the lower two words
count draws.  Any replica's numbers are therefore fixed by its address alone,
independent of how replicas are spread over threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["philox4x32", "new_stream", "uniform", "normal", "poisson", "uniforms"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# stream state layout (uint64): key0, key1, replica, tag, draw counter, buffer index, spare flag
_K0, _K1, _REP, _TAG, _CTR, _IDX, _SPARE = range(7)


@njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on a 4x32-bit counter with a 2x32-bit key."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        n0 = (p1 >> _S32) ^ c1 ^ k0
        n2 = (p0 >> _S32) ^ c3 ^ k1
        c1 = p1 & _MASK
        c3 = p0 & _MASK
        c0 = n0
        c2 = n2
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def new_stream(seed, replica, tag):
    st = np.zeros(7, dtype=np.uint64)
    s = np.uint64(seed)
    st[_K0] = s & _MASK
    st[_K1] = s >> _S32
    st[_REP] = np.uint64(replica) & _MASK
    st[_TAG] = np.uint64(tag) & _MASK
    st[_IDX] = np.uint64(2)
    return st


@njit(cache=True, nogil=True)
def uniform(st, buf):
    """Next double in (0, 1); each Philox block yields two 53-bit values."""
    if st[_IDX] >= 2:
        ctr = st[_CTR]
        r0, r1, r2, r3 = philox4x32(ctr & _MASK, ctr >> _S32, st[_REP], st[_TAG], st[_K0], st[_K1])
        st[_CTR] = ctr + np.uint64(1)
        buf[0] = (float((r0 >> np.uint64(5)) * np.uint64(67108864) + (r1 >> np.uint64(6))) + 0.5) / 9007199254740992.0
        buf[1] = (float((r2 >> np.uint64(5)) * np.uint64(67108864) + (r3 >> np.uint64(6))) + 0.5) / 9007199254740992.0
        st[_IDX] = np.uint64(0)
    i = st[_IDX]
    st[_IDX] = i + np.uint64(1)
    return buf[i]


@njit(cache=True, nogil=True)
def normal(st, buf):
    """Standard normal by Box-Muller, caching the second variate in buf[2]."""
    if st[_SPARE] == 1:
        st[_SPARE] = np.uint64(0)
        return buf[2]
    u1 = uniform(st, buf)
    u2 = uniform(st, buf)
    r = np.sqrt(-2.0 * np.log(u1))
    buf[2] = r * np.sin(2.0 * np.pi * u2)
    st[_SPARE] = np.uint64(1)
    return r * np.cos(2.0 * np.pi * u2)


@njit(cache=True, nogil=True)
def poisson(st, buf, mean):
    """Poisson variate by sequential inversion (means here are small)."""
    u = uniform(st, buf)
    p = np.exp(-mean)
    s = p
    n = 0
    while u > s and n < 10_000:
        n += 1
        p *= mean / n
        s += p
    return n


@njit(cache=True)
def uniforms(seed, replica, tag, n):
    """First n uniforms of a stream (used for tests and diagnostics)."""
    st = new_stream(seed, replica, tag)
    buf = np.zeros(3)
    out = np.empty(n)
    for i in range(n):
        out[i] = uniform(st, buf)
    return out
