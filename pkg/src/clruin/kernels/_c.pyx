# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; see ``_py`` for the reference semantics."""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log1p
from numpy.random cimport bitgen_t

from ._streams import BLOCK, path_bitgen

cnp.import_array()

DEF KIND_EXPONENTIAL = 0
DEF KIND_GAMMA2 = 1


cdef inline double _dot_rev(const double* a, const double* b, Py_ssize_t lo, Py_ssize_t hi,
                            Py_ssize_t j) noexcept nogil:
    # sum_{i=lo}^{hi} a[i] b[j-i] with four independent partial sums
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t i = lo
    while i + 3 <= hi:
        s0 += a[i] * b[j - i]
        s1 += a[i + 1] * b[j - i - 1]
        s2 += a[i + 2] * b[j - i - 2]
        s3 += a[i + 3] * b[j - i - 3]
        i += 4
    while i <= hi:
        s0 += a[i] * b[j - i]
        i += 1
    return (s0 + s1) + (s2 + s3)


def volterra_march(surv, surv_end, tail, double a, double h, double v0):
    cdef double[::1] s = np.ascontiguousarray(surv, dtype=np.float64)
    cdef double[::1] se = np.ascontiguousarray(surv_end, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(tail, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0], i, j
    out = np.empty(n)
    cdef double[::1] v = out
    cdef double denom = a - 0.5 * h * s[0]
    cdef double acc
    v[0] = v0
    with nogil:
        for j in range(1, n):
            acc = _dot_rev(&s[0], &v[0], 1, j - 1, j) + 0.5 * v0 * se[j]
            v[j] = (h * acc + t[j]) / denom
    return out


def panjer_geometric(f, double q):
    cdef double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t n = fv.shape[0], i, j
    out = np.empty(n)
    cdef double[::1] g = out
    cdef double scale = 1.0 / (1.0 - q * fv[0])
    cdef double qs = q * scale
    g[0] = (1.0 - q) * scale
    with nogil:
        for j in range(1, n):
            g[j] = qs * _dot_rev(&fv[0], &g[0], 1, j, j)
    return out


cdef inline double _claim(int kind, const double[::1] params, const double[::1] cum,
                          double* u, int upc) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid, m
    if kind == KIND_EXPONENTIAL:
        return -log1p(-u[0]) / params[0]
    if kind == KIND_GAMMA2:
        return -(log1p(-u[0]) + log1p(-u[1])) / params[0]
    m = cum.shape[0]
    lo = 0
    hi = m
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u[0]:
            lo = mid + 1
        else:
            hi = mid
    if lo > params.shape[0] - 1:
        lo = params.shape[0] - 1
    return params[lo]


cdef int _one_path(int kind, const double[::1] params, const double[::1] cum, int upc,
                   double lam, double c, double x, double barrier, bitgen_t* rng,
                   long long max_claims, double* tbuf, double* ybuf, int block) noexcept nogil:
    cdef double s = x
    cdef long long done = 0
    cdef int k, r
    if x >= barrier:
        return 1
    while done < max_claims:
        for k in range(block):
            tbuf[k] = rng.next_double(rng.state)
        for k in range(block * upc):
            ybuf[k] = rng.next_double(rng.state)
        for k in range(block):
            if done >= max_claims:
                return 2
            s += c * (-log1p(-tbuf[k]) / lam)
            s -= _claim(kind, params, cum, &ybuf[k * upc], upc)
            done += 1
            if s < 0.0:
                return 0
            if s >= barrier:
                return 1
    return 2


def simulate_paths(int kind, params, cum, int upc, double lam, double c, double x,
                   double barrier, seed, long long path_start, long long path_stop,
                   long long max_claims):
    cdef const double[::1] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(cum, dtype=np.float64)
    cdef int block = BLOCK
    tarr = np.empty(block)
    yarr = np.empty(block * upc)
    cdef double[::1] tb = tarr
    cdef double[::1] yb = yarr
    cdef long long counts[3]
    cdef long long path
    cdef int res
    cdef bitgen_t* rng
    counts[0] = 0
    counts[1] = 0
    counts[2] = 0
    for path in range(path_start, path_stop):
        bg = path_bitgen(seed, path)
        rng = <bitgen_t*> PyCapsule_GetPointer(bg.capsule, "BitGenerator")
        with nogil:
            res = _one_path(kind, pv, cv, upc, lam, c, x, barrier, rng, max_claims,
                            &tb[0], &yb[0], block)
        counts[res] += 1
    return (counts[0], counts[1], counts[2])
