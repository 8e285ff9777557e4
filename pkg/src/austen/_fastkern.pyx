# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: digamma/trigamma over arrays plus the fused row
operations. Mirrors ``_kernels_np`` (same recurrence cutoff, same
Bernoulli tails) so the two backends agree to float rounding."""

import numpy as np

from libc.math cimport log


cdef double _dg(double x) nogil:
    cdef double acc = 0.0
    cdef double r, r2, poly
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    r = 1.0 / x
    r2 = r * r
    poly = 1.0 / 12.0
    poly = poly * r2 + (-691.0 / 32760.0)
    poly = poly * r2 + (1.0 / 132.0)
    poly = poly * r2 + (-1.0 / 240.0)
    poly = poly * r2 + (1.0 / 252.0)
    poly = poly * r2 + (-1.0 / 120.0)
    poly = poly * r2 + (1.0 / 12.0)
    return acc + log(x) - 0.5 * r - r2 * poly


cdef double _tg(double x) nogil:
    cdef double acc = 0.0
    cdef double r, r2, poly
    while x < 10.0:
        acc += 1.0 / (x * x)
        x += 1.0
    r = 1.0 / x
    r2 = r * r
    poly = 7.0 / 6.0
    poly = poly * r2 + (-691.0 / 2730.0)
    poly = poly * r2 + (5.0 / 66.0)
    poly = poly * r2 + (-1.0 / 30.0)
    poly = poly * r2 + (1.0 / 42.0)
    poly = poly * r2 + (-1.0 / 30.0)
    poly = poly * r2 + (1.0 / 6.0)
    return acc + r + 0.5 * r2 + (r2 * r) * poly


def digamma(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ov[i] = _dg(xv[i])
    return out


def trigamma(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ov[i] = _tg(xv[i])
    return out


def bracket_rows(g, double m):
    """Per-row psi(g*m + 1) - psi((1-g)*m) - psi(g*m) + psi((1-g)*m + 1)."""
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = gv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double a, b
    with nogil:
        for i in range(n):
            a = gv[i] * m
            b = (1.0 - gv[i]) * m
            ov[i] = _dg(a + 1.0) - _dg(b) - _dg(a) + _dg(b + 1.0)
    return out


def trig_term_rows(g, t, double m):
    """Per-row psi1(g*m + t) + psi1((1-g)*m + 1 - t)."""
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = gv.shape[0]
    if tv.shape[0] != n:
        raise ValueError("g and t must have equal length")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            # (1 - t) first: t is exactly 0 or 1, so the tiny (1-g)*m term
            # is never rounded through an intermediate near 1
            ov[i] = _tg(gv[i] * m + tv[i]) + _tg((1.0 - gv[i]) * m + (1.0 - tv[i]))
    return out
