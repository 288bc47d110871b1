# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element kernels; signatures mirror :mod:`cavedamage._kernels_py`."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def element_strains(const cnp.int64_t[:, ::1] tris, const double[:, :, ::1] grads, const double[::1] u):
    cdef Py_ssize_t ne = tris.shape[0], e, i
    cdef cnp.int64_t n
    cdef double exx, eyy, exy, ux, uy, gx, gy
    out = np.empty((ne, 3))
    cdef double[:, ::1] o = out
    for e in range(ne):
        exx = 0.0
        eyy = 0.0
        exy = 0.0
        for i in range(3):
            n = tris[e, i]
            ux = u[2 * n]
            uy = u[2 * n + 1]
            gx = grads[e, i, 0]
            gy = grads[e, i, 1]
            exx += ux * gx
            eyy += uy * gy
            exy += ux * gy + uy * gx
        o[e, 0] = exx
        o[e, 1] = eyy
        o[e, 2] = 0.5 * exy
    return out


def scatter_add(const cnp.int64_t[:, ::1] emap, const double[:, ::1] la, const double[::1] wa,
                const double[:, ::1] lb, const double[::1] wb, Py_ssize_t nnz):
    cdef Py_ssize_t ne = emap.shape[0], m = emap.shape[1], e, k
    cdef cnp.int64_t idx
    cdef double a, b
    data = np.zeros(nnz)
    cdef double[::1] d = data
    for e in range(ne):
        a = wa[e]
        b = wb[e]
        for k in range(m):
            idx = emap[e, k]
            if idx >= 0:
                d[idx] += a * la[e, k] + b * lb[e, k]
    return data


cdef inline double _ipow(double s, int k) nogil:
    cdef double r = 1.0
    cdef int i
    if k < 0:
        return 0.0
    for i in range(k):
        r *= s
    return r


def bulk_value_grad(const cnp.int64_t[:, ::1] tris, const double[::1] area, const double[::1] const_,
                    const double[::1] coef, int k, double w1, const double[::1] alpha, Py_ssize_t nn):
    cdef Py_ssize_t ne = tris.shape[0], e
    cdef double abar, s, de, value = 0.0
    grad = np.zeros(nn)
    cdef double[::1] g = grad
    for e in range(ne):
        abar = (alpha[tris[e, 0]] + alpha[tris[e, 1]] + alpha[tris[e, 2]]) / 3.0
        s = 1.0 - abar
        value += area[e] * (const_[e] + coef[e] * _ipow(s, k) + w1 * abar * abar)
        de = area[e] * (-k * coef[e] * _ipow(s, k - 1) + 2.0 * w1 * abar) / 3.0
        g[tris[e, 0]] += de
        g[tris[e, 1]] += de
        g[tris[e, 2]] += de
    return value, grad


def bulk_curvature(const cnp.int64_t[:, ::1] tris, const double[::1] area, const double[::1] coef,
                   int k, double w1, const double[::1] alpha, bint convexify):
    cdef Py_ssize_t ne = tris.shape[0], e
    cdef double s, c2
    out = np.empty(ne)
    cdef double[::1] o = out
    for e in range(ne):
        s = 1.0 - (alpha[tris[e, 0]] + alpha[tris[e, 1]] + alpha[tris[e, 2]]) / 3.0
        c2 = k * (k - 1) * coef[e] * _ipow(s, k - 2)
        if convexify and c2 < 0.0:
            c2 = 0.0
        o[e] = area[e] * (c2 + 2.0 * w1) / 9.0
    return out


def bulk_hessp(const cnp.int64_t[:, ::1] tris, const double[::1] area, const double[::1] coef,
               int k, double w1, const double[::1] alpha, const double[::1] v, Py_ssize_t nn):
    cdef Py_ssize_t ne = tris.shape[0], e
    cdef double s, c2, t
    out = np.zeros(nn)
    cdef double[::1] o = out
    for e in range(ne):
        s = 1.0 - (alpha[tris[e, 0]] + alpha[tris[e, 1]] + alpha[tris[e, 2]]) / 3.0
        c2 = k * (k - 1) * coef[e] * _ipow(s, k - 2)
        t = area[e] * (c2 + 2.0 * w1) / 9.0 * (v[tris[e, 0]] + v[tris[e, 1]] + v[tris[e, 2]])
        o[tris[e, 0]] += t
        o[tris[e, 1]] += t
        o[tris[e, 2]] += t
    return out


def bulk_difference(const cnp.int64_t[:, ::1] tris, const double[::1] area, const double[::1] coef,
                    int k, double w1, const double[::1] alpha, const double[::1] beta):
    cdef Py_ssize_t ne = tris.shape[0], e
    cdef double a, b, delta, s, sb, sq, total = 0.0
    for e in range(ne):
        a = (alpha[tris[e, 0]] + alpha[tris[e, 1]] + alpha[tris[e, 2]]) / 3.0
        b = (beta[tris[e, 0]] + beta[tris[e, 1]] + beta[tris[e, 2]]) / 3.0
        delta = b - a
        s = 1.0 - a
        sb = 1.0 - b
        sq = -delta * (2.0 * s - delta)
        if k == 4:
            sq = sq * (sb * sb + s * s)
        elif k != 2:
            sq = _ipow(sb, k) - _ipow(s, k)
        total += area[e] * (coef[e] * sq + w1 * delta * (a + b))
    return total
