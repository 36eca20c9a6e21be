# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split-scan kernels; must stay bit-identical to _split_np."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def gini_scan(double[::1] values, double[::1] labels, long min_leaf):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i, best_idx = -1
    cdef double total1 = 0.0
    cdef double n1l = 0.0
    cdef double nl, nr, n1r, score
    cdef double best = np.inf
    if n < 2 * min_leaf:
        return np.inf, -1
    for i in range(n):
        total1 = total1 + labels[i]
    for i in range(n - 1):
        n1l = n1l + labels[i]
        nl = <double> (i + 1)
        nr = <double> (n - i - 1)
        if values[i + 1] <= values[i] or nl < min_leaf or nr < min_leaf:
            continue
        n1r = total1 - n1l
        score = n1l * (nl - n1l) / nl + n1r * (nr - n1r) / nr
        if score < best:
            best = score
            best_idx = i
    if best_idx < 0:
        return np.inf, -1
    return best, best_idx


def newton_scan(double[::1] values, double[::1] grad, double[::1] hess,
                double lam, long min_leaf, double min_child_weight):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i, best_idx = -1
    cdef double gtot = 0.0, htot = 0.0
    cdef double gl = 0.0, hl = 0.0
    cdef double gr, hr, nl, nr, gain
    cdef double best = -np.inf
    if n < 2 * min_leaf:
        return -np.inf, -1
    for i in range(n):
        gtot = gtot + grad[i]
        htot = htot + hess[i]
    for i in range(n - 1):
        gl = gl + grad[i]
        hl = hl + hess[i]
        nl = <double> (i + 1)
        nr = <double> (n - i - 1)
        if values[i + 1] <= values[i] or nl < min_leaf or nr < min_leaf:
            continue
        gr = gtot - gl
        hr = htot - hl
        if hl < min_child_weight or hr < min_child_weight:
            continue
        gain = gl * gl / (hl + lam) + gr * gr / (hr + lam)
        if gain > best:
            best = gain
            best_idx = i
    if best_idx < 0:
        return -np.inf, -1
    return best, best_idx
