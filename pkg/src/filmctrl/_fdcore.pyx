# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the nonlinear stepping kernels.

Mirrors ``filmctrl._fdcore_py`` expression for expression (compiled with
-ffp-contract=off) so both backends produce identical floating-point results.
See the pure-Python module for the formula documentation.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BENNEY_OFFSETS = (-3, -2, -1, 0, 1, 2, 3)
WR_OFFSETS = (-5, -4, -3, -2, -1, 0, 1, 2, 3)

cdef double THIRD = 1.0 / 3.0
cdef double C815 = 8.0 / 15.0
cdef double C23 = 2.0 / 3.0
cdef double C4815 = 48.0 / 15.0
cdef double C83 = 8.0 / 3.0
cdef double C1835 = 18.0 / 35.0
cdef double C3435 = 34.0 / 35.0
cdef double C3635 = 36.0 / 35.0


cdef inline Py_ssize_t wrap(Py_ssize_t i, Py_ssize_t n) nogil:
    if i >= n:
        return i - n
    if i < 0:
        return i + n
    return i


cdef void _flux_into(double[::1] h, double[::1] f, double re, double twoct,
                     double invca, double inv2dx, double invdx3,
                     double[::1] q_out) nogil:
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t i, ip1, im1, ip2, im2
    cdef double hx, hxxx, h3, s, hi
    for i in range(n):
        ip1 = wrap(i + 1, n)
        im1 = wrap(i - 1, n)
        ip2 = wrap(i + 2, n)
        im2 = wrap(i - 2, n)
        hi = h[i]
        hx = (h[ip1] - h[im1]) * inv2dx
        hxxx = (0.5 * (h[ip2] - h[im2]) - (h[ip1] - h[im1])) * invdx3
        h3 = hi * hi * hi
        s = 2.0 - twoct * hx + invca * hxxx
        q_out[i] = h3 * s * THIRD + re * (C815 * (h3 * h3) * hx - C23 * (h3 * hi) * f[i])


def benney_flux(double[::1] h, double[::1] f, double re, double twoct,
                double invca, double inv2dx, double invdx3):
    cdef cnp.ndarray[double, ndim=1] q = np.empty(h.shape[0])
    _flux_into(h, f, re, twoct, invca, inv2dx, invdx3, q)
    return q


def benney_residual(double[::1] h, double[::1] hist, double[::1] f, double alpha0,
                    double re, double twoct, double invca, double inv2dx,
                    double invdx3):
    cdef Py_ssize_t n = h.shape[0]
    cdef cnp.ndarray[double, ndim=1] q = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] r = np.empty(n)
    cdef double[::1] qv = q
    cdef double[::1] rv = r
    cdef Py_ssize_t i
    _flux_into(h, f, re, twoct, invca, inv2dx, invdx3, qv)
    for i in range(n):
        rv[i] = alpha0 * h[i] + hist[i] + (qv[wrap(i + 1, n)] - qv[wrap(i - 1, n)]) * inv2dx - f[i]
    return r


def benney_bands(double[::1] h, double[::1] f, double alpha0, double re,
                 double twoct, double invca, double inv2dx, double invdx3):
    cdef Py_ssize_t n = h.shape[0]
    cdef cnp.ndarray[double, ndim=2] scratch = np.empty((5, n))
    cdef cnp.ndarray[double, ndim=2] bands = np.empty((7, n))
    cdef double[:, ::1] bq = scratch
    cdef double[:, ::1] bv = bands
    cdef Py_ssize_t i, ip1, im1, ip2, im2
    cdef double hx, hxxx, h2, h3, s, a, b, c, hi
    for i in range(n):
        ip1 = wrap(i + 1, n)
        im1 = wrap(i - 1, n)
        ip2 = wrap(i + 2, n)
        im2 = wrap(i - 2, n)
        hi = h[i]
        hx = (h[ip1] - h[im1]) * inv2dx
        hxxx = (0.5 * (h[ip2] - h[im2]) - (h[ip1] - h[im1])) * invdx3
        h2 = hi * hi
        h3 = h2 * hi
        s = 2.0 - twoct * hx + invca * hxxx
        a = h2 * s + re * (C4815 * (h3 * h2) * hx - C83 * h3 * f[i])
        b = re * C815 * (h3 * h3) - THIRD * twoct * h3
        c = THIRD * invca * h3
        bq[0, i] = -0.5 * invdx3 * c          # dq_i/dh_{i-2}
        bq[1, i] = -inv2dx * b + invdx3 * c   # dq_i/dh_{i-1}
        bq[2, i] = a                          # dq_i/dh_i
        bq[3, i] = inv2dx * b - invdx3 * c    # dq_i/dh_{i+1}
        bq[4, i] = 0.5 * invdx3 * c           # dq_i/dh_{i+2}
    for i in range(n):
        ip1 = wrap(i + 1, n)
        im1 = wrap(i - 1, n)
        bv[0, i] = -inv2dx * bq[0, im1]
        bv[1, i] = -inv2dx * bq[1, im1]
        bv[2, i] = inv2dx * (bq[0, ip1] - bq[2, im1])
        bv[3, i] = alpha0 + inv2dx * (bq[1, ip1] - bq[3, im1])
        bv[4, i] = inv2dx * (bq[2, ip1] - bq[4, im1])
        bv[5, i] = inv2dx * bq[3, ip1]
        bv[6, i] = inv2dx * bq[4, ip1]
    return bands


def wr_residual(double[::1] h, double[::1] q, double[::1] histh, double[::1] histq,
                double[::1] f, double alpha0, double re, double twoct,
                double invca, double inv2dx, double invdx3):
    cdef Py_ssize_t n = h.shape[0]
    cdef cnp.ndarray[double, ndim=1] r = np.empty(2 * n)
    cdef double[::1] rv = r
    cdef Py_ssize_t i, ip1, im1, ip2, im2
    cdef double hx, hxxx, qx, h2, h3, s, rhs, hi, qi
    for i in range(n):
        ip1 = wrap(i + 1, n)
        im1 = wrap(i - 1, n)
        ip2 = wrap(i + 2, n)
        im2 = wrap(i - 2, n)
        hi = h[i]
        qi = q[i]
        hx = (h[ip1] - h[im1]) * inv2dx
        hxxx = (0.5 * (h[ip2] - h[im2]) - (h[ip1] - h[im1])) * invdx3
        qx = (q[ip1] - q[im1]) * inv2dx
        h2 = hi * hi
        h3 = h2 * hi
        s = 2.0 - twoct * hx + invca * hxxx
        rhs = h3 * s * THIRD + re * (C1835 * (qi * qi) * hx - C3435 * (hi * qi) * qx
                                     + 0.2 * (hi * qi) * f[i])
        rv[2 * i] = alpha0 * hi + histh[i] + qx - f[i]
        rv[2 * i + 1] = 0.4 * re * h2 * (alpha0 * qi + histq[i]) + qi - rhs
    return r


def wr_bands(double[::1] h, double[::1] q, double[::1] histq, double[::1] f,
             double alpha0, double re, double twoct, double invca,
             double inv2dx, double invdx3):
    cdef Py_ssize_t n = h.shape[0]
    cdef cnp.ndarray[double, ndim=2] bands = np.zeros((9, 2 * n))
    cdef double[:, ::1] bv = bands
    cdef Py_ssize_t i, ip1, im1, ip2, im2, row
    cdef double hx, hxxx, qx, h2, h3, s, qdot, d_h, d_q, g1, g3, qcpl, hi, qi
    for i in range(n):
        ip1 = wrap(i + 1, n)
        im1 = wrap(i - 1, n)
        ip2 = wrap(i + 2, n)
        im2 = wrap(i - 2, n)
        hi = h[i]
        qi = q[i]
        hx = (h[ip1] - h[im1]) * inv2dx
        hxxx = (0.5 * (h[ip2] - h[im2]) - (h[ip1] - h[im1])) * invdx3
        qx = (q[ip1] - q[im1]) * inv2dx
        h2 = hi * hi
        h3 = h2 * hi
        s = 2.0 - twoct * hx + invca * hxxx
        qdot = alpha0 * qi + histq[i]
        d_h = 0.8 * re * hi * qdot - h2 * s + re * (C3435 * qi * qx - 0.2 * qi * f[i])
        d_q = 0.4 * re * h2 * alpha0 + 1.0 - re * (C3635 * qi * hx - C3435 * hi * qx
                                                   + 0.2 * hi * f[i])
        g1 = re * C1835 * (qi * qi) - THIRD * twoct * h3
        g3 = THIRD * invca * h3
        qcpl = re * C3435 * (hi * qi) * inv2dx
        row = 2 * i
        bv[5, row] = alpha0
        bv[4, row] = -inv2dx
        bv[8, row] = inv2dx
        row = 2 * i + 1
        bv[4, row] = d_h
        bv[5, row] = d_q
        bv[6, row] = -g1 * inv2dx + g3 * invdx3
        bv[2, row] = g1 * inv2dx - g3 * invdx3
        bv[8, row] = -0.5 * invdx3 * g3
        bv[0, row] = 0.5 * invdx3 * g3
        bv[7, row] = qcpl
        bv[3, row] = -qcpl
    return bands
