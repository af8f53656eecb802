# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Hermite tables, Gauss-Hermite overlaps, stack products."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, M_PI, pow

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)


cdef inline double complex _cexp(double complex z) nogil:
    return cexp(z)

cdef double PI_M14 = pow(M_PI, -0.25)


def hermite_table(int nmax, x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t npts = xv.shape[0]
    out = np.empty((nmax + 1, npts))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i
    cdef int n
    cdef double a, b
    for i in range(npts):
        o[0, i] = PI_M14
    if nmax >= 1:
        for i in range(npts):
            o[1, i] = sqrt(2.0) * xv[i] * PI_M14
    for n in range(1, nmax):
        a = sqrt(n / 2.0)
        b = 1.0 / sqrt((n + 1) / 2.0)
        for i in range(npts):
            o[n + 1, i] = (xv[i] * o[n, i] - a * o[n - 1, i]) * b
    return out


cdef inline double _herm(int order, double x) nogil:
    cdef double prev = 0.0, cur = PI_M14, nxt
    cdef int n
    for n in range(order):
        nxt = (x * cur - sqrt(n / 2.0) * prev) / sqrt((n + 1) / 2.0)
        prev = cur
        cur = nxt
    return cur


def gh_overlap(na, nb, sa, sb, q, nodes, weights):
    na_b, nb_b, sa_b, sb_b, q_b = np.broadcast_arrays(
        np.asarray(na, dtype=np.int64), np.asarray(nb, dtype=np.int64),
        np.asarray(sa, dtype=np.float64), np.asarray(sb, dtype=np.float64),
        np.asarray(q, dtype=np.float64))
    shape = na_b.shape
    cdef long long[::1] nav = np.ascontiguousarray(na_b).ravel()
    cdef long long[::1] nbv = np.ascontiguousarray(nb_b).ravel()
    cdef double[::1] sav = np.ascontiguousarray(sa_b).ravel()
    cdef double[::1] sbv = np.ascontiguousarray(sb_b).ravel()
    cdef double[::1] qv = np.ascontiguousarray(q_b).ravel()
    cdef double[::1] xn = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef double[::1] wn = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t npair = nav.shape[0], nq = xn.shape[0], p, j
    out = np.empty(npair, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef double scale, pref, y, f, re, im
    with nogil:
        for p in range(npair):
            scale = 1.0 / sqrt(1.0 / (sav[p] * sav[p]) + 1.0 / (sbv[p] * sbv[p]))
            pref = sqrt(2.0 / (sav[p] * sbv[p])) * scale
            re = 0.0
            im = 0.0
            for j in range(nq):
                y = scale * xn[j]
                f = wn[j] * _herm(<int>nav[p], sqrt(2.0) * y / sav[p]) \
                    * _herm(<int>nbv[p], sqrt(2.0) * y / sbv[p])
                re += f * cos(qv[p] * y)
                im += f * sin(qv[p] * y)
            ov[p] = pref * (re + 1j * im)
    return out.reshape(shape)


def stack_matrices(k0, n, d, mirror_r, mirror_t):
    cdef double[::1] kv = np.ascontiguousarray(k0, dtype=np.float64).ravel()
    cdef double complex[::1] nv = np.ascontiguousarray(n, dtype=np.complex128)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t nf = kv.shape[0], m = nv.shape[0], f, j
    # boundary matrices are frequency independent
    bmat = np.empty((max(m - 1, 1), 2, 2), dtype=np.complex128)
    for j in range(m - 1):
        bmat[j] = _boundary(n[j], n[j + 1], mirror_r[j], mirror_t[j])
    cdef double complex[:, :, ::1] bv = bmat
    out = np.empty((nf, 2, 2), dtype=np.complex128)
    cdef double complex[:, :, ::1] ov = out
    cdef double complex a00, a01, a10, a11, t00, t01, t10, t11, ph, phi
    cdef double complex arg
    for f in range(nf):
        a00 = 1.0
        a01 = 0.0
        a10 = 0.0
        a11 = 1.0
        for j in range(m):
            arg = 1j * nv[j] * kv[f] * dv[j]
            ph = _cexp(arg)
            phi = 1.0 / ph
            a00 = a00 * ph
            a01 = a01 * ph
            a10 = a10 * phi
            a11 = a11 * phi
            if j == m - 1:
                break
            t00 = bv[j, 0, 0] * a00 + bv[j, 0, 1] * a10
            t01 = bv[j, 0, 0] * a01 + bv[j, 0, 1] * a11
            t10 = bv[j, 1, 0] * a00 + bv[j, 1, 1] * a10
            t11 = bv[j, 1, 0] * a01 + bv[j, 1, 1] * a11
            a00 = t00
            a01 = t01
            a10 = t10
            a11 = t11
        ov[f, 0, 0] = a00
        ov[f, 0, 1] = a01
        ov[f, 1, 0] = a10
        ov[f, 1, 1] = a11
    return out


def _boundary(n1, n2, r, t):
    s = 1.0 / (2.0 * np.sqrt(complex(n1) * complex(n2)))
    face = s * np.array([[n2 + n1, n2 - n1], [n2 - n1, n2 + n1]], dtype=np.complex128)
    mirror = np.array([[(t * t - r * r) / t, r / t], [-r / t, 1.0 / t]], dtype=np.complex128)
    return mirror @ face
