"""Pure-Python kernels for discrete-path Newton solves.

A path ``q_0 .. q_N`` with fixed endpoints has ``N - 1`` interior points
and the action is a sum of segment terms ``phi_k(q_k, q_{k+1})``. Its
gradient over the interior points is assembled from per-segment partials,
and its Hessian is symmetric block tridiagonal with ``n x n`` blocks.
"""

from __future__ import annotations

import numpy as np


def assemble_path_system(ga, gb, haa, hab, hbb):
    """Interior gradient and block-tridiagonal Hessian of a path action.

    Parameters
    ----------
    ga, gb : (N, n) arrays
        Partials of segment ``k`` with respect to its left/right point.
    haa, hab, hbb : (N, n, n) arrays
        Second partials of segment ``k``; ``hab[k]`` has rows indexed by the
        left point.

    Returns
    -------
    grad : (N-1, n)
    diag : (N-1, n, n)
    off : (N-2, n, n), ``off[i]`` couples interior points ``i`` and ``i+1``.
    """
    ga, gb = np.asarray(ga, dtype=float), np.asarray(gb, dtype=float)
    if ga.shape[0] < 2:
        raise ValueError("need at least two segments")
    grad = gb[:-1] + ga[1:]
    diag = np.asarray(hbb, dtype=float)[:-1] + np.asarray(haa, dtype=float)[1:]
    off = np.asarray(hab, dtype=float)[1:-1].copy()
    return grad, diag, off


def _cholesky_ok(M: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError:
        return False
    return True


def solve_block_tridiagonal(diag, off, rhs):
    """Solve a symmetric block-tridiagonal system by block elimination.

    The eliminated pivot blocks are the Schur complements of the leading
    principal submatrices, so the matrix is positive definite exactly when
    every pivot block admits a Cholesky factorization.

    Returns ``(x, positive_definite, status)``; ``status`` is 0 on success
    and 1 if a pivot block is singular.
    """
    D = np.array(diag, dtype=float)
    C = np.asarray(off, dtype=float)
    R = np.array(rhs, dtype=float)
    m = D.shape[0]
    n = D.shape[1] if m else 0
    x = np.zeros((m, n))
    if m == 0:
        return x, True, 0
    G = np.zeros((m, n, n))
    pd = True
    for i in range(m):
        if i > 0:
            D[i] -= C[i - 1].T @ G[i - 1]
            R[i] -= C[i - 1].T @ R[i - 1]
        if pd and not _cholesky_ok(D[i]):
            pd = False
        try:
            R[i] = np.linalg.solve(D[i], R[i])
            if i < m - 1:
                G[i] = np.linalg.solve(D[i], C[i])
        except np.linalg.LinAlgError:
            return x, pd, 1
    x[m - 1] = R[m - 1]
    for i in range(m - 2, -1, -1):
        x[i] = R[i] - G[i] @ x[i + 1]
    return x, pd, 0
