# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loops for the Hamiltonian vector field and passive advection."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

# family codes shared with _backend.py
cdef enum:
    GAUSSIAN = 0
    MATERN = 1
    CAUCHY = 2
    FLAT_TAIL = 3


cdef inline double _gamma(int fam, int order, double a, double plateau, double r) nogil:
    cdef double x, e, w
    if fam == GAUSSIAN:
        return exp(-0.5 * r * r / (a * a))
    if fam == CAUCHY:
        return 1.0 / (1.0 + r * r / (a * a))
    if fam == MATERN:
        x = r / a
        e = exp(-x)
        if order == 1:
            return e
        if order == 3:
            return (1.0 + x) * e
        if order == 5:
            return (1.0 + x + x * x / 3.0) * e
        return (1.0 + x + 2.0 * x * x / 5.0 + x * x * x / 15.0) * e
    x = r / a
    if x >= 1.0:
        return plateau
    w = 1.0 - x
    return plateau + (1.0 - plateau) * w * w * w * w * (4.0 * x + 1.0)


cdef inline double _slope_over_r(int fam, int order, double a, double plateau, double r) nogil:
    # gamma'(r) / r for r > 0
    cdef double x, e, w
    if fam == GAUSSIAN:
        return -exp(-0.5 * r * r / (a * a)) / (a * a)
    if fam == CAUCHY:
        w = 1.0 / (1.0 + r * r / (a * a))
        return -2.0 * w * w / (a * a)
    if fam == MATERN:
        x = r / a
        e = exp(-x)
        if order == 1:
            return -e / (a * r)
        if order == 3:
            return -e / (a * a)
        if order == 5:
            return -(1.0 + x) / 3.0 * e / (a * a)
        return -(3.0 + 3.0 * x + x * x) / 15.0 * e / (a * a)
    x = r / a
    if x >= 1.0:
        return 0.0
    w = 1.0 - x
    return -(1.0 - plateau) * 20.0 * w * w * w / (a * a)


def ham_rhs(double[:, ::1] q, double[:, ::1] p, int fam, int order, double a, double plateau):
    cdef Py_ssize_t n = q.shape[0], d = q.shape[1], i, j, k
    qdot_arr = np.zeros((n, d))
    pdot_arr = np.zeros((n, d))
    cdef double[:, ::1] qdot = qdot_arr
    cdef double[:, ::1] pdot = pdot_arr
    cdef double r2, r, g, s, pp, diff
    with nogil:
        for i in range(n):
            g = _gamma(fam, order, a, plateau, 0.0)
            for k in range(d):
                qdot[i, k] += g * p[i, k]
            for j in range(i + 1, n):
                r2 = 0.0
                pp = 0.0
                for k in range(d):
                    diff = q[i, k] - q[j, k]
                    r2 += diff * diff
                    pp += p[i, k] * p[j, k]
                r = sqrt(r2)
                g = _gamma(fam, order, a, plateau, r)
                s = _slope_over_r(fam, order, a, plateau, r) * pp
                for k in range(d):
                    qdot[i, k] += g * p[j, k]
                    qdot[j, k] += g * p[i, k]
                    diff = q[i, k] - q[j, k]
                    pdot[i, k] -= s * diff
                    pdot[j, k] += s * diff
    return qdot_arr, pdot_arr


def field_velocity(double[:, ::1] x, double[:, ::1] q, double[:, ::1] p,
                   int fam, int order, double a, double plateau):
    cdef Py_ssize_t m = x.shape[0], n = q.shape[0], d = q.shape[1], i, j, k
    out_arr = np.zeros((m, d))
    cdef double[:, ::1] out = out_arr
    cdef double r2, diff, g
    with nogil:
        for i in range(m):
            for j in range(n):
                r2 = 0.0
                for k in range(d):
                    diff = x[i, k] - q[j, k]
                    r2 += diff * diff
                g = _gamma(fam, order, a, plateau, sqrt(r2))
                for k in range(d):
                    out[i, k] += g * p[j, k]
    return out_arr
