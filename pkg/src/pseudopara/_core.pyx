# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must stay signature-compatible with ``_core_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, exp, sqrt, acosh, ceil, sinh, fabs

from . import _core_py

cnp.import_array()


cdef void _source_half(const double[::1] u, const double[::1] prof, double scale,
                       double m, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double s, f, thr = 0.0, slope = 0.0
    if m > 0:
        thr = pow(m, -2.0)
        slope = m
    for i in range(n):
        s = u[i]
        s = s if s > 0.0 else 0.0
        f = sqrt(s)
        if s < thr:
            f = slope * s
        out[i] = scale * prof[i] * f


def source_term(u, profile, double scale, double p, double m):
    if p != 0.5:
        # libm pow in a scalar loop loses to numpy's vectorised power
        return _core_py.source_term(u, profile, scale, p, m)
    ua = np.ascontiguousarray(u, dtype=np.float64)
    pa = np.ascontiguousarray(np.broadcast_to(profile, ua.shape), dtype=np.float64)
    out = np.empty_like(ua)
    _source_half(ua.reshape(-1), pa.reshape(-1), scale, m, out.reshape(-1))
    return out


def clamp_nonneg(u):
    if not (u.flags.c_contiguous and u.flags.writeable):
        raise ValueError("clamp_nonneg needs a writeable C-contiguous array")
    # numpy's SIMD min/maximum beat a scalar loop here (no fast-math reductions)
    return _core_py.clamp_nonneg(u)


def weighted_sup(values, weight, mask):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
    cdef const double[::1] w = np.ascontiguousarray(weight, dtype=np.float64).reshape(-1)
    cdef const unsigned char[::1] mk = np.ascontiguousarray(mask, dtype=np.uint8).reshape(-1)
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double best = 0.0, c
    with nogil:
        for i in range(n):
            if mk[i]:
                c = fabs(v[i]) * w[i]
                if c > best:
                    best = c
    return best


cdef double _kve_scalar(double alpha, double x) noexcept nogil:
    cdef double a = fabs(alpha)
    cdef double h = 0.5 / sqrt(x)
    if h > 0.1:
        h = 0.1
    cdef double tmax = acosh(1.0 + 45.0 / x)
    cdef int k
    for k in range(4):
        tmax = acosh(1.0 + (45.0 + a * tmax) / x)
    cdef Py_ssize_t n = <Py_ssize_t>ceil(tmax / h) + 1
    cdef Py_ssize_t i
    cdef double t, sh, e, acc = 0.5
    for i in range(1, n):
        t = h * i
        sh = sinh(0.5 * t)
        e = -2.0 * x * sh * sh
        acc += 0.5 * (exp(e + a * t) + exp(e - a * t))
    return h * acc


def kve(double alpha, x):
    xa = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(xa)
    cdef const double[::1] xv = xa.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _kve_scalar(alpha, xv[i])
    return out
