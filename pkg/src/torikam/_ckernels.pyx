# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled inner loops. See ``_pykernels`` for the reference semantics."""

import numpy as np


def conv_accumulate(const Py_ssize_t[::1] ia, va, const Py_ssize_t[::1] ib, vb, out):
    cdef const double[::1] a = np.ascontiguousarray(va).view(np.float64)
    cdef const double[::1] b = np.ascontiguousarray(vb).view(np.float64)
    cdef double[::1] o = out.view(np.float64)
    cdef Py_ssize_t na = ia.shape[0], nb = ib.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double ar, ai, br, bi
    with nogil:
        for i in range(na):
            ar = a[2 * i]
            ai = a[2 * i + 1]
            for j in range(nb):
                br = b[2 * j]
                bi = b[2 * j + 1]
                k = 2 * (ia[i] + ib[j])
                o[k] += ar * br - ai * bi
                o[k + 1] += ar * bi + ai * br

