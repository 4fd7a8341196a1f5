# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for discrete-path Newton solves.

Mirrors ``_fallback.py`` exactly; see that module for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

DEF PIVOT_TOL = 1e-300


cdef int _lu_factor(double[:, ::1] A, int[::1] piv, int n) noexcept nogil:
    """In-place LU with partial pivoting. Returns 1 if a pivot vanishes."""
    cdef int i, j, k, p
    cdef double amax, t
    for k in range(n):
        p = k
        amax = fabs(A[k, k])
        for i in range(k + 1, n):
            if fabs(A[i, k]) > amax:
                amax = fabs(A[i, k])
                p = i
        piv[k] = p
        if amax <= PIVOT_TOL:
            return 1
        if p != k:
            for j in range(n):
                t = A[k, j]
                A[k, j] = A[p, j]
                A[p, j] = t
        for i in range(k + 1, n):
            A[i, k] /= A[k, k]
            for j in range(k + 1, n):
                A[i, j] -= A[i, k] * A[k, j]
    return 0


cdef void _lu_solve(double[:, ::1] LU, int[::1] piv, double* b, int n) noexcept nogil:
    cdef int i, j
    cdef double t
    for i in range(n):
        if piv[i] != i:
            t = b[i]
            b[i] = b[piv[i]]
            b[piv[i]] = t
    for i in range(n):
        for j in range(i):
            b[i] -= LU[i, j] * b[j]
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            b[i] -= LU[i, j] * b[j]
        b[i] /= LU[i, i]


cdef bint _cholesky_ok(double[:, ::1] M, double[:, ::1] work, int n) noexcept nogil:
    """True if the symmetric part of M admits a Cholesky factorization."""
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for j in range(n):
            work[i, j] = 0.5 * (M[i, j] + M[j, i])
    for j in range(n):
        s = work[j, j]
        for k in range(j):
            s -= work[j, k] * work[j, k]
        if not s > 0.0:
            return False
        work[j, j] = sqrt(s)
        for i in range(j + 1, n):
            s = work[i, j]
            for k in range(j):
                s -= work[i, k] * work[j, k]
            work[i, j] = s / work[j, j]
    return True


def assemble_path_system(ga, gb, haa, hab, hbb):
    """Interior gradient and block-tridiagonal Hessian of a path action."""
    cdef double[:, ::1] GA = np.ascontiguousarray(ga, dtype=np.float64)
    cdef double[:, ::1] GB = np.ascontiguousarray(gb, dtype=np.float64)
    cdef double[:, :, ::1] HAA = np.ascontiguousarray(haa, dtype=np.float64)
    cdef double[:, :, ::1] HAB = np.ascontiguousarray(hab, dtype=np.float64)
    cdef double[:, :, ::1] HBB = np.ascontiguousarray(hbb, dtype=np.float64)
    cdef Py_ssize_t N = GA.shape[0]
    cdef Py_ssize_t n = GA.shape[1]
    if N < 2:
        raise ValueError("need at least two segments")
    grad_arr = np.empty((N - 1, n))
    diag_arr = np.empty((N - 1, n, n))
    off_arr = np.empty((max(N - 2, 0), n, n))
    cdef double[:, ::1] G = grad_arr
    cdef double[:, :, ::1] D = diag_arr
    cdef double[:, :, ::1] C = off_arr
    cdef Py_ssize_t i, a, b
    with nogil:
        for i in range(N - 1):
            for a in range(n):
                G[i, a] = GB[i, a] + GA[i + 1, a]
                for b in range(n):
                    D[i, a, b] = HBB[i, a, b] + HAA[i + 1, a, b]
            if i < N - 2:
                for a in range(n):
                    for b in range(n):
                        C[i, a, b] = HAB[i + 1, a, b]
    return grad_arr, diag_arr, off_arr


def solve_block_tridiagonal(diag, off, rhs):
    """Solve a symmetric block-tridiagonal system by block elimination.

    Returns ``(x, positive_definite, status)``; ``status`` is 0 on success
    and 1 if an elimination pivot block is singular.
    """
    cdef double[:, :, ::1] D = np.array(diag, dtype=np.float64, order="C", copy=True)
    cdef double[:, :, ::1] C = np.ascontiguousarray(off, dtype=np.float64)
    cdef double[:, ::1] R = np.array(rhs, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t m = D.shape[0]
    cdef int n = <int>D.shape[1]
    x_arr = np.zeros((m, n))
    if m == 0:
        return x_arr, True, 0
    cdef double[:, ::1] X = x_arr
    cdef double[:, :, ::1] G = np.zeros((m, n, n))
    cdef int[:, ::1] piv = np.zeros((m, n), dtype=np.intc)
    cdef double[:, ::1] work = np.zeros((n, n))
    cdef double[::1] col = np.zeros(n)
    cdef Py_ssize_t i
    cdef int a, b, c
    cdef double s
    cdef bint pd = True
    cdef int status = 0
    with nogil:
        for i in range(m):
            if i > 0:
                # D_i -= C_{i-1}^T G_{i-1};  R_i -= C_{i-1}^T R_{i-1}
                for a in range(n):
                    for b in range(n):
                        s = 0.0
                        for c in range(n):
                            s = s + C[i - 1, c, a] * G[i - 1, c, b]
                        D[i, a, b] -= s
                    s = 0.0
                    for c in range(n):
                        s = s + C[i - 1, c, a] * R[i - 1, c]
                    col[a] = s
                for a in range(n):
                    R[i, a] -= col[a]
            if pd and not _cholesky_ok(D[i], work, n):
                pd = False
            if _lu_factor(D[i], piv[i], n) != 0:
                status = 1
                break
            _lu_solve(D[i], piv[i], &R[i, 0], n)
            if i < m - 1:
                for b in range(n):
                    for a in range(n):
                        col[a] = C[i, a, b]
                    _lu_solve(D[i], piv[i], &col[0], n)
                    for a in range(n):
                        G[i, a, b] = col[a]
        if status == 0:
            for a in range(n):
                X[m - 1, a] = R[m - 1, a]
            for i in range(m - 2, -1, -1):
                for a in range(n):
                    s = R[i, a]
                    for b in range(n):
                        s = s - G[i, a, b] * X[i + 1, b]
                    X[i, a] = s
    return x_arr, bool(pd), status
