# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the sampling kernel.

Must stay bit-identical to ``_kernels_py``: same splitmix64 stream, same
float mapping, same first-weakly-exceeding tie rule. The test suite
enforces parity whenever this extension is importable.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint64_t

cnp.import_array()

IMPL = "compiled"

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t MUL1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MUL2 = 0x94D049BB133111EBULL
# 2**-53, so the top 53 bits of a draw land in [0, 1).
cdef double FLOAT_SCALE = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * MUL1
    z = (z ^ (z >> 27)) * MUL2
    return z ^ (z >> 31)


cdef inline Py_ssize_t lower_bound(const double* cdf, Py_ssize_t n, double u) nogil:
    # First index whose cdf entry weakly exceeds u (np.searchsorted, side='left').
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] < u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def sample_tokens(cdf, Py_ssize_t count, seed):
    """Draw ``count`` token ids from the distribution given by ``cdf``."""
    if count <= 0:
        return np.empty(0, dtype=np.int32)
    cdef cnp.ndarray[double, ndim=1, mode="c"] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef cnp.ndarray[int32_t, ndim=1, mode="c"] out = np.empty(count, dtype=np.int32)
    cdef uint64_t state = <uint64_t> (<object> seed & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i, idx
    cdef double u
    cdef const double* cp = &c[0]
    with nogil:
        for i in range(count):
            state = state + GAMMA
            u = <double> (mix64(state) >> 11) * FLOAT_SCALE
            idx = lower_bound(cp, n, u)
            if idx >= n:
                idx = n - 1
            out[i] = <int32_t> idx
    return out


def accumulate_counts(cdf, Py_ssize_t count, seed, counts):
    """Sample ``count`` tokens and add their tallies into ``counts`` (int64)."""
    if count <= 0:
        return
    cdef cnp.ndarray[double, ndim=1, mode="c"] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef cnp.ndarray[int64_t, ndim=1, mode="c"] k = counts
    cdef uint64_t state = <uint64_t> (<object> seed & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i, idx
    cdef double u
    cdef const double* cp = &c[0]
    cdef int64_t* kp = &k[0]
    with nogil:
        for i in range(count):
            state = state + GAMMA
            u = <double> (mix64(state) >> 11) * FLOAT_SCALE
            idx = lower_bound(cp, n, u)
            if idx >= n:
                idx = n - 1
            kp[idx] += 1
