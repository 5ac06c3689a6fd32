# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for piecewise-activation evaluation, inversion,
iterated composition maps, and indicator-tree evaluation.

Table format documented in uaplab._kernels.pure (the reference backend).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, INFINITY, isfinite

cnp.import_array()

BACKEND_NAME = "cython"

KIND_AFFINE = 0
KIND_POWER = 1


cdef inline double _sgn(double x) nogil:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


cdef inline int _branch_of(const double* edges, int nb, double x) nogil:
    # branch j covers [edges[j], edges[j+1]); binary search over interior edges
    cdef int lo = 0, hi = nb - 1, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if x < edges[mid + 1]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline double _val(const int* kinds, const double* par, int j, double x) nogil:
    cdef const double* p = par + 4 * j
    if kinds[j] == 0:
        return p[0] * x + p[1]
    return p[0] * _sgn(x) * pow(fabs(x), p[1]) + p[2] * x + p[3]


cdef inline double _dval(const int* kinds, const double* par, int j, double x) nogil:
    cdef const double* p = par + 4 * j
    if kinds[j] == 0:
        return p[0]
    return p[0] * p[1] * pow(fabs(x), p[1] - 1.0) + p[2]


def act_eval(cnp.ndarray edges_a, cnp.ndarray kinds_a, cnp.ndarray par_a, x):
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = x_arr.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = x_arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] edges = np.ascontiguousarray(edges_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] kinds = np.ascontiguousarray(kinds_a, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] par = np.ascontiguousarray(par_a, dtype=np.float64)
    cdef Py_ssize_t i, n = flat.shape[0]
    cdef int nb = kinds.shape[0]
    cdef const double* e = &edges[0]
    cdef const int* k = <const int*> &kinds[0]
    cdef const double* p = &par[0, 0]
    cdef int j
    with nogil:
        for i in range(n):
            j = _branch_of(e, nb, flat[i])
            out[i] = _val(k, p, j, flat[i])
    return np.asarray(out).reshape(shape)


def act_deriv(cnp.ndarray edges_a, cnp.ndarray kinds_a, cnp.ndarray par_a, x):
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = x_arr.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = x_arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] edges = np.ascontiguousarray(edges_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] kinds = np.ascontiguousarray(kinds_a, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] par = np.ascontiguousarray(par_a, dtype=np.float64)
    cdef Py_ssize_t i, n = flat.shape[0]
    cdef int nb = kinds.shape[0]
    cdef const double* e = &edges[0]
    cdef const int* k = <const int*> &kinds[0]
    cdef const double* p = &par[0, 0]
    cdef int j
    with nogil:
        for i in range(n):
            j = _branch_of(e, nb, flat[i])
            out[i] = _dval(k, p, j, flat[i])
    return np.asarray(out).reshape(shape)


cdef inline int _branch_of_value(const double* vedges, int nb, double y) nogil:
    cdef int lo = 0, hi = nb - 1, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if y < vedges[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef double _invert_one(const int* kinds, const double* par, const double* edges,
                        int j, double y, double tol) nogil:
    cdef const double* p = par + 4 * j
    cdef double lo = edges[j], hi = edges[j + 1]
    cdef double anchor, xlo, xhi, step, mid, vm
    if kinds[j] == 0:
        return (y - p[1]) / p[0]
    if isfinite(lo):
        anchor = lo
    elif isfinite(hi):
        anchor = hi
    else:
        anchor = 0.0
    if isfinite(lo):
        xlo = lo
    else:
        xlo = anchor - 1.0
        step = 1.0
        while _val(kinds, par, j, xlo) > y:
            xlo -= step
            step *= 2.0
    if isfinite(hi):
        xhi = hi
    else:
        xhi = anchor + 1.0
        step = 1.0
        while _val(kinds, par, j, xhi) < y:
            xhi += step
            step *= 2.0
    cdef int it
    for it in range(200):
        mid = 0.5 * (xlo + xhi)
        vm = _val(kinds, par, j, mid)
        if vm < y:
            xlo = mid
        else:
            xhi = mid
        if xhi - xlo < tol * (1.0 + fabs(xlo)):
            break
    # Newton polish drives the value residual to machine precision
    cdef double xm = 0.5 * (xlo + xhi), v, d
    for it in range(3):
        v = _val(kinds, par, j, xm) - y
        d = _dval(kinds, par, j, xm)
        if d > 0.0:
            xm -= v / d
        if xm < xlo:
            xm = xlo
        if xm > xhi:
            xm = xhi
    return xm


def act_invert(cnp.ndarray edges_a, cnp.ndarray kinds_a, cnp.ndarray par_a,
               cnp.ndarray vedges_a, y, double tol=1e-14):
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    shape = y_arr.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = y_arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] edges = np.ascontiguousarray(edges_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] kinds = np.ascontiguousarray(kinds_a, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] par = np.ascontiguousarray(par_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vedges = np.ascontiguousarray(vedges_a, dtype=np.float64)
    cdef Py_ssize_t i, n = flat.shape[0]
    cdef int nb = kinds.shape[0]
    cdef const double* e = &edges[0]
    cdef const int* k = <const int*> &kinds[0]
    cdef const double* p = &par[0, 0]
    cdef const double* ve
    cdef int j
    if nb > 1:
        ve = &vedges[0]
    else:
        ve = NULL
    with nogil:
        for i in range(n):
            if nb > 1:
                j = _branch_of_value(ve, nb, flat[i])
            else:
                j = 0
            out[i] = _invert_one(k, p, e, j, flat[i], tol)
    return np.asarray(out).reshape(shape)


def s_iter(cnp.ndarray edges_a, cnp.ndarray kinds_a, cnp.ndarray par_a,
           x, cnp.ndarray b_a, int n):
    x_arr = np.array(x, dtype=np.float64, copy=True)
    if x_arr.ndim == 1:
        x_arr = x_arr[:, None]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(x_arr)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] edges = np.ascontiguousarray(edges_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] kinds = np.ascontiguousarray(kinds_a, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] par = np.ascontiguousarray(par_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(b_a, dtype=np.float64)
    cdef Py_ssize_t i, r, npts = pts.shape[0]
    cdef int c, m = pts.shape[1], nb = kinds.shape[0]
    cdef const double* e = &edges[0]
    cdef const int* k = <const int*> &kinds[0]
    cdef const double* p = &par[0, 0]
    cdef double z
    cdef int j
    with nogil:
        for i in range(npts):
            for c in range(m):
                z = pts[i, c]
                for r in range(n):
                    z = z + b[c]
                    j = _branch_of(e, nb, z)
                    z = _val(k, p, j, z)
                pts[i, c] = z
    return np.asarray(pts)


def s_inv_iter(cnp.ndarray edges_a, cnp.ndarray kinds_a, cnp.ndarray par_a,
               cnp.ndarray vedges_a, y, cnp.ndarray b_a, int n, double tol=1e-14):
    y_arr = np.array(y, dtype=np.float64, copy=True)
    if y_arr.ndim == 1:
        y_arr = y_arr[:, None]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(y_arr)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] edges = np.ascontiguousarray(edges_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] kinds = np.ascontiguousarray(kinds_a, dtype=np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] par = np.ascontiguousarray(par_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vedges = np.ascontiguousarray(vedges_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(b_a, dtype=np.float64)
    cdef Py_ssize_t i, r, npts = pts.shape[0]
    cdef int c, m = pts.shape[1], nb = kinds.shape[0]
    cdef const double* e = &edges[0]
    cdef const int* k = <const int*> &kinds[0]
    cdef const double* p = &par[0, 0]
    cdef const double* ve
    cdef double z
    cdef int j
    if nb > 1:
        ve = &vedges[0]
    else:
        ve = NULL
    with nogil:
        for i in range(npts):
            for c in range(m):
                z = pts[i, c]
                for r in range(n):
                    if nb > 1:
                        j = _branch_of_value(ve, nb, z)
                    else:
                        j = 0
                    z = _invert_one(k, p, e, j, z, tol) - b[c]
                pts[i, c] = z
    return np.asarray(pts)


def tree_eval(cnp.ndarray amp_a, cnp.ndarray lo_a, cnp.ndarray hi_a, x):
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = x_arr.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = x_arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros_like(flat)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] amp = np.ascontiguousarray(amp_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lo = np.ascontiguousarray(lo_a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hi = np.ascontiguousarray(hi_a, dtype=np.float64)
    cdef Py_ssize_t i, t, n = flat.shape[0], nt = amp.shape[0]
    cdef double acc, xv
    with nogil:
        for i in range(n):
            xv = flat[i]
            acc = 0.0
            for t in range(nt):
                if lo[t] < xv and xv < hi[t]:
                    acc += amp[t]
            out[i] = acc
    return np.asarray(out).reshape(shape)
