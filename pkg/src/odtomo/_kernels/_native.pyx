# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: subset-product moments and seeded Poisson sampling.

Semantics mirror ``_pyref`` exactly; ``poisson_fill`` is bit-identical
(same SplitMix64 stream, same floating-point operation order), the moment
kernels agree with the numpy fallback up to summation order.
"""

from libc.math cimport exp, fabs, floor, log, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

DEF MASK64 = 0xFFFFFFFFFFFFFFFF

cdef extern from *:
    """
    static inline unsigned long long sm64_next(unsigned long long *state) {
        unsigned long long z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long sm64_next(unsigned long long* state) nogil

cdef double _INV53 = 1.0 / 9007199254740992.0  # 2**-53

PTRS_CUTOFF = 30.0
cdef double _PTRS_CUTOFF = 30.0

_MAX_SUBSET_ORDER = 20


def subset_means(data):
    """Empirical means of all subset products of the columns of ``data``.

    data: (N, p) float64. out[s] = mean over rows of the product of the
    columns in subset s; out[0] = 1.
    """
    data = np.ascontiguousarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("data must be 2-d")
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t p = data.shape[1]
    if p < 1 or p > _MAX_SUBSET_ORDER:
        raise ValueError(f"column count {p} out of range 1..{_MAX_SUBSET_ORDER}")
    cdef Py_ssize_t n_sub = 1 << p
    out = np.zeros(n_sub, dtype=np.float64)
    cdef double[::1] acc = out
    cdef const double[:, ::1] d = data
    cdef double* prod = <double*> malloc(n_sub * sizeof(double))
    cdef int* low = <int*> malloc(n_sub * sizeof(int))
    if prod == NULL or low == NULL:
        free(prod); free(low)
        raise MemoryError()
    cdef Py_ssize_t r, s
    cdef int b
    with nogil:
        for s in range(1, n_sub):
            b = 0
            while not (s >> b) & 1:
                b += 1
            low[s] = b
        prod[0] = 1.0
        for r in range(n):
            for s in range(1, n_sub):
                prod[s] = prod[s & (s - 1)] * d[r, low[s]]
                acc[s] += prod[s]
    free(prod)
    free(low)
    out /= n
    out[0] = 1.0
    return out


def centered_product_stats(data, means):
    """Mean and population variance of per-row centered-column products."""
    data = np.ascontiguousarray(data, dtype=np.float64)
    means = np.ascontiguousarray(means, dtype=np.float64)
    if data.ndim != 2 or means.shape != (data.shape[1],):
        raise ValueError("data must be (N, p) with one mean per column")
    cdef const double[:, ::1] d = data
    cdef const double[::1] mu = means
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t p = d.shape[1]
    cdef double total = 0.0, total_sq = 0.0, t
    cdef Py_ssize_t r, i
    with nogil:
        for r in range(n):
            t = 1.0
            for i in range(p):
                t *= d[r, i] - mu[i]
            total += t
            total_sq += t * t
    cdef double mean_t = total / n
    cdef double var_t = total_sq / n - mean_t * mean_t
    if var_t < 0.0:
        var_t = 0.0
    return mean_t, var_t


# log(k!) table shared by PTRS draws; grown on demand, values built by the
# same sequential summation as the fallback so both backends agree bitwise.
cdef double* _logfact = NULL
cdef Py_ssize_t _logfact_len = 0


cdef int _grow_logfact(Py_ssize_t k) except -1:
    global _logfact, _logfact_len
    cdef Py_ssize_t new_len, i
    cdef double* fresh
    if k < _logfact_len:
        return 0
    new_len = _logfact_len * 2 if _logfact_len * 2 > k + 1 else k + 1
    if new_len < 1024:
        new_len = 1024
    fresh = <double*> malloc(new_len * sizeof(double))
    if fresh == NULL:
        raise MemoryError()
    if _logfact_len > 0:
        for i in range(_logfact_len):
            fresh[i] = _logfact[i]
        free(_logfact)
    else:
        fresh[0] = 0.0
        fresh[1] = 0.0
        _logfact_len = 2
    for i in range(_logfact_len, new_len):
        fresh[i] = fresh[i - 1] + log(<double> i)
    _logfact = fresh
    _logfact_len = new_len
    return 0


cdef long long _poisson_knuth(double mean, unsigned long long* state) nogil:
    cdef double limit = exp(-mean)
    cdef double prob = 1.0
    cdef long long k = 0
    while True:
        prob *= (sm64_next(state) >> 11) * _INV53
        if prob <= limit:
            return k
        k += 1


cdef long long _poisson_ptrs(double mean, unsigned long long* state) nogil:
    cdef double slam = sqrt(mean)
    cdef double loglam = log(mean)
    cdef double b = 0.931 + 2.53 * slam
    cdef double a = -0.059 + 0.02483 * b
    cdef double invalpha = 1.1239 + 1.1328 / (b - 3.4)
    cdef double vr = 0.9277 - 3.6224 / (b - 2.0)
    cdef double u, v, us
    cdef long long k
    while True:
        u = (sm64_next(state) >> 11) * _INV53 - 0.5
        v = (sm64_next(state) >> 11) * _INV53
        us = 0.5 - fabs(u)
        k = <long long> floor((2.0 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        with gil:
            _grow_logfact(k)
        if (log(v) + log(invalpha) - log(a / (us * us) + b)) <= (
            k * loglam - mean - _logfact[k]
        ):
            return k


def poisson_fill(out, double mean, state):
    """Fill ``out`` (int64) with Poisson(mean) draws; return advanced state."""
    if not (mean > 0.0) or mean != mean or mean == float("inf"):
        raise ValueError(f"mean must be positive and finite, got {mean}")
    cdef long long[::1] o = out
    cdef unsigned long long st = <unsigned long long> (state & MASK64)
    cdef Py_ssize_t i, n = o.shape[0]
    cdef bint small = mean < _PTRS_CUTOFF
    if not small:
        # pre-size the factorial table so the hot loop rarely takes the GIL
        _grow_logfact(<Py_ssize_t> (mean + 12.0 * sqrt(mean) + 64.0))
    with nogil:
        if small:
            for i in range(n):
                o[i] = _poisson_knuth(mean, &st)
        else:
            for i in range(n):
                o[i] = _poisson_ptrs(mean, &st)
    return int(st)
