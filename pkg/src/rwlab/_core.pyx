# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Stieltjes product-integration weights and series Horner."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p

cnp.import_array()

cdef double SERIES_CUT = 1e-2


cdef inline void _weights(double a, double b, double c, double *wa, double *wb) noexcept nogil:
    cdef double d = (b - a) / (a + c)
    cdef double L
    if d < SERIES_CUT:
        wa[0] = d * (1.0 / 2 - d * (1.0 / 6 - d * (1.0 / 12 - d * (1.0 / 20 - d * (1.0 / 30 - d * (1.0 / 42 - d / 56))))))
        wb[0] = d * (1.0 / 2 - d * (1.0 / 3 - d * (1.0 / 4 - d * (1.0 / 5 - d * (1.0 / 6 - d * (1.0 / 7 - d / 8))))))
    else:
        L = log1p(d)
        wa[0] = ((1.0 + d) * L - d) / d
        wb[0] = (d - L) / d


def cell_weights(a, b, c):
    cdef cnp.ndarray[double, ndim=1] A, B, C, WA, WB
    A, B, C = np.broadcast_arrays(np.asarray(a, dtype=float).ravel(),
                                  np.asarray(b, dtype=float).ravel(),
                                  np.asarray(c, dtype=float).ravel())
    shape = np.broadcast_shapes(np.shape(a), np.shape(b), np.shape(c))
    A = np.ascontiguousarray(A)
    B = np.ascontiguousarray(B)
    C = np.ascontiguousarray(C)
    cdef Py_ssize_t n = A.shape[0], i
    WA = np.empty(n)
    WB = np.empty(n)
    cdef double wa, wb
    for i in range(n):
        _weights(A[i], B[i], C[i], &wa, &wb)
        WA[i] = wa
        WB[i] = wb
    return WA.reshape(shape), WB.reshape(shape)


def stieltjes_matrix(u, tail):
    cdef cnp.ndarray[double, ndim=1] U = np.ascontiguousarray(u, dtype=float)
    cdef cnp.ndarray[double, ndim=1] T = np.ascontiguousarray(tail, dtype=float)
    cdef Py_ssize_t n = U.shape[0], i, j
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, n))
    cdef double wa, wb
    with nogil:
        for i in range(n):
            for j in range(n - 1):
                _weights(U[j + 1], U[j], U[i], &wa, &wb)
                out[i, j] += wb
                out[i, j + 1] += wa
            out[i, n - 1] += T[i]
    return out


def stieltjes_apply(u, f, tail):
    cdef cnp.ndarray[double, ndim=1] U = np.ascontiguousarray(u, dtype=float)
    cdef cnp.ndarray[double, ndim=1] T = np.ascontiguousarray(tail, dtype=float)
    F0 = np.asarray(f, dtype=float)
    vec = F0.ndim == 1
    cdef cnp.ndarray[double, ndim=2] F = np.ascontiguousarray(F0[:, None] if vec else F0)
    cdef Py_ssize_t n = U.shape[0], m = F.shape[1], i, j, k
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n, m))
    cdef double wa, wb
    with nogil:
        for i in range(n):
            for j in range(n - 1):
                _weights(U[j + 1], U[j], U[i], &wa, &wb)
                for k in range(m):
                    out[i, k] += wb * F[j, k] + wa * F[j + 1, k]
            for k in range(m):
                out[i, k] += T[i] * F[n - 1, k]
    return out[:, 0] if vec else out


def series_horner(coef, z):
    cdef cnp.ndarray[double, ndim=1] C = np.ascontiguousarray(coef, dtype=float)
    Z0 = np.asarray(z, dtype=complex)
    cdef cnp.ndarray[double complex, ndim=1] Z = np.ascontiguousarray(Z0.ravel())
    cdef Py_ssize_t n = C.shape[0], m = Z.shape[0], i, k
    cdef cnp.ndarray[double complex, ndim=1] out = np.zeros(m, dtype=complex)
    cdef double complex acc, zz
    with nogil:
        for i in range(m):
            acc = 0
            zz = Z[i]
            for k in range(n - 1, -1, -1):
                acc = acc * zz + C[k]
            out[i] = acc
    return out.reshape(Z0.shape)
