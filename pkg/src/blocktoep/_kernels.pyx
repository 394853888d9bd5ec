# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: dense block-Toeplitz fill and modified Gram-Schmidt."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def block_toeplitz_fill(const double complex[:, :, ::1] coef, Py_ssize_t kmin,
                        Py_ssize_t n, Py_ssize_t m):
    """Dense ``(s*n) x (t*m)`` matrix with block (i, j) = coef[i - j - kmin]."""
    cdef Py_ssize_t K = coef.shape[0], s = coef.shape[1], t = coef.shape[2]
    out_arr = np.zeros((s * n, t * m), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, a, b, idx
    for i in range(n):
        for j in range(m):
            idx = i - j - kmin
            if idx < 0 or idx >= K:
                continue
            for a in range(s):
                for b in range(t):
                    out[i * s + a, j * t + b] = coef[idx, a, b]
    return out_arr


def mgs_orthogonalize(double[:, ::1] V, double[::1] w, Py_ssize_t j):
    """Orthogonalise ``w`` against rows ``0..j`` of ``V`` in place.

    Returns the vector of projection coefficients (length j+2, last entry
    is the norm of the remainder).
    """
    cdef Py_ssize_t n = w.shape[0], i, k
    h_arr = np.zeros(j + 2)
    cdef double[::1] h = h_arr
    cdef double acc
    for i in range(j + 1):
        acc = 0.0
        for k in range(n):
            acc += V[i, k] * w[k]
        h[i] = acc
        for k in range(n):
            w[k] -= acc * V[i, k]
    acc = 0.0
    for k in range(n):
        acc += w[k] * w[k]
    h[j + 1] = sqrt(acc)
    return h_arr
