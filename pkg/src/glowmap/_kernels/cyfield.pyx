# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for field composition and footprint sums.

Mirrors the NumPy module in this package function for function; the Python
wrappers there document the math. Loops are written distance-at-a-time so no
n_queries x n_sources temporary is ever allocated.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

COINCIDENT_EPS_M = 1e-6
cdef double _EPS = 1e-6


def field_values(
    double[::1] qx,
    double[::1] qy,
    double[::1] sx,
    double[::1] sy,
    double[::1] i0,
    double[::1] c1,
    double[::1] c2,
    double[::1] alpha,
):
    cdef Py_ssize_t nq = qx.shape[0]
    cdef Py_ssize_t ns = sx.shape[0]
    out_arr = np.zeros(nq, dtype=np.float64)
    cdef double[::1] out = out_arr
    if ns == 0:
        return out_arr
    cdef Py_ssize_t i, j
    cdef double dx, dy, d2, d, y, inten, w
    cdef double num, den, co_sum
    cdef int co_count
    for i in range(nq):
        num = 0.0
        den = 0.0
        co_sum = 0.0
        co_count = 0
        for j in range(ns):
            dx = qx[i] - sx[j]
            dy = qy[i] - sy[j]
            d2 = dx * dx + dy * dy
            d = sqrt(d2)
            if d < _EPS:
                co_sum += i0[j]
                co_count += 1
                continue
            y = alpha[j] * d
            inten = i0[j] / (1.0 + c1[j] * y + c2[j] * y * y)
            w = 1.0 / d2
            num += w * inten
            den += w
        if co_count > 0:
            out[i] = co_sum / co_count
        elif den > 0.0:
            out[i] = num / den
    return out_arr


def footprint_attenuation(
    double[::1] qx,
    double[::1] qy,
    double[::1] sx,
    double[::1] sy,
    double[::1] i0,
    double[::1] c1,
    double[::1] c2,
    double[::1] alpha,
    double i0_max,
):
    cdef Py_ssize_t nq = qx.shape[0]
    cdef Py_ssize_t ns = sx.shape[0]
    sums_arr = np.zeros(ns, dtype=np.float64)
    cdef double[::1] sums = sums_arr
    if ns == 0 or nq == 0:
        return sums_arr
    cdef Py_ssize_t i, j
    cdef double dx, dy, y, acc
    for j in range(ns):
        acc = 0.0
        for i in range(nq):
            dx = qx[i] - sx[j]
            dy = qy[i] - sy[j]
            y = alpha[j] * sqrt(dx * dx + dy * dy)
            acc += i0[j] / (1.0 + c1[j] * y + c2[j] * y * y)
        sums[j] = acc / i0_max
    return sums_arr


def footprint_inverse_square(
    double[::1] qx,
    double[::1] qy,
    double[::1] sx,
    double[::1] sy,
    double mount_height_m,
):
    cdef Py_ssize_t nq = qx.shape[0]
    cdef Py_ssize_t ns = sx.shape[0]
    sums_arr = np.zeros(ns, dtype=np.float64)
    cdef double[::1] sums = sums_arr
    if ns == 0 or nq == 0:
        return sums_arr
    cdef Py_ssize_t i, j
    cdef double dx, dy, rho2, acc
    cdef double h = mount_height_m
    cdef double h3 = h * h * h
    for j in range(ns):
        acc = 0.0
        for i in range(nq):
            dx = qx[i] - sx[j]
            dy = qy[i] - sy[j]
            rho2 = dx * dx + dy * dy + h * h
            acc += h3 / (rho2 * sqrt(rho2))
        sums[j] = acc
    return sums_arr
