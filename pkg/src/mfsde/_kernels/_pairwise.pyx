# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise-reduction kernels.

Each output row i is a sequential sum over j, so rows are independent and
the result is deterministic for any outer parallelization over i.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sin

cnp.import_array()


def sin_product_mean(x, y, w, double scale=1.0):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t m = yv.shape[0]
    if wv.shape[0] != m:
        raise ValueError("weights must align with y")
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc, xi
    with nogil:
        for i in range(n):
            acc = 0.0
            xi = xv[i]
            for j in range(m):
                acc += wv[j] * sin(scale * xi * yv[j])
            out[i] = acc
    return out_arr
