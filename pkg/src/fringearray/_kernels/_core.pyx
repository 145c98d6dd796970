# Compiled versions of the hot kernels.
#
# The arithmetic mirrors _fallback.py expression for expression; together
# with -ffp-contract=off this keeps both backends bit-identical.

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def inverse_cdf(cnp.ndarray[cnp.float64_t, ndim=1] u,
                cnp.ndarray[cnp.float64_t, ndim=1] grid,
                cnp.ndarray[cnp.float64_t, ndim=1] cdf):
    """See _fallback.inverse_cdf."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = cdf.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u)
    cdef double[::1] gv = np.ascontiguousarray(grid)
    cdef double[::1] cv = np.ascontiguousarray(cdf)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, lo, hi, mid, j
    cdef double ui, c0, c1, x0, x1, w, t
    for i in range(n):
        ui = uv[i]
        # first index with cdf[idx] > ui  (= searchsorted side='right')
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) // 2
            if cv[mid] <= ui:
                lo = mid + 1
            else:
                hi = mid
        j = lo
        if j < 1:
            j = 1
        if j > m - 1:
            j = m - 1
        c0 = cv[j - 1]
        c1 = cv[j]
        x0 = gv[j - 1]
        x1 = gv[j]
        w = c1 - c0
        if w > 0.0:
            t = (ui - c0) / w
        else:
            t = 0.0
        ov[i] = x0 + t * (x1 - x0)
    return out


def ou_paths(cnp.ndarray[cnp.float64_t, ndim=2] z, double rho, double sigma):
    """See _fallback.ou_paths."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zc = np.ascontiguousarray(z)
    cdef Py_ssize_t n = zc.shape[0]
    cdef Py_ssize_t nodes = zc.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x = np.empty((n, nodes), dtype=np.float64)
    cdef double[:, ::1] zv = zc
    cdef double[:, ::1] xv = x
    cdef double s = sigma * sqrt(1.0 - rho * rho)
    cdef Py_ssize_t i, j
    for i in range(n):
        xv[i, 0] = sigma * zv[i, 0]
        for j in range(1, nodes):
            xv[i, j] = rho * xv[i, j - 1] + s * zv[i, j]
    return x
