import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commuting_actions import _kernels
from commuting_actions._kernels import _fallback

try:
    from commuting_actions._kernels import _core
except ImportError:  # extension not built
    _core = None

BACKENDS = [pytest.param(_fallback, id="python")]
BACKENDS.append(pytest.param(_core, id="compiled", marks=pytest.mark.skipif(_core is None, reason="not built")))


def _random_system(rng, m, n, spd=True):
    diag = rng.normal(size=(m, n, n))
    off = rng.normal(size=(m - 1, n, n))
    if spd:
        diag = np.einsum("kij,klj->kil", diag, diag) + 4 * (n + 1) * np.eye(n)
    else:
        diag = 0.5 * (diag + diag.transpose(0, 2, 1))
    return diag, off, rng.normal(size=(m, n))


def _dense(diag, off):
    m, n = diag.shape[:2]
    A = np.zeros((m * n, m * n))
    for i in range(m):
        A[i * n : (i + 1) * n, i * n : (i + 1) * n] = diag[i]
    for i in range(m - 1):
        A[i * n : (i + 1) * n, (i + 1) * n : (i + 2) * n] = off[i]
        A[(i + 1) * n : (i + 2) * n, i * n : (i + 1) * n] = off[i].T
    return A


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("m, n", [(1, 1), (2, 1), (7, 2), (40, 3)])
def test_block_solve_matches_dense(backend, m, n):
    rng = np.random.default_rng(m * 10 + n)
    diag, off, rhs = _random_system(rng, m, n)
    x, pd, status = backend.solve_block_tridiagonal(diag, off, rhs)
    A = _dense(diag, off)
    assert status == 0
    assert pd == bool(np.all(np.linalg.eigvalsh(A) > 0))
    np.testing.assert_allclose(x.ravel(), np.linalg.solve(A, rhs.ravel()), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_indefinite_system_flagged(backend):
    rng = np.random.default_rng(5)
    diag, off, rhs = _random_system(rng, 6, 2, spd=False)
    x, pd, status = backend.solve_block_tridiagonal(diag, off, rhs)
    A = _dense(diag, off)
    assert pd == bool(np.all(np.linalg.eigvalsh(A) > 0))
    np.testing.assert_allclose(A @ x.ravel(), rhs.ravel(), atol=1e-8)


@pytest.mark.parametrize("backend", BACKENDS)
def test_singular_pivot_reported(backend):
    diag = np.zeros((3, 1, 1))
    off = np.zeros((2, 1, 1))
    _, _, status = backend.solve_block_tridiagonal(diag, off, np.ones((3, 1)))
    assert status == 1


@pytest.mark.skipif(_core is None, reason="compiled kernels not built")
@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_backends_agree(N, n, seed):
    rng = np.random.default_rng(seed)
    terms = [rng.normal(size=(N, n)), rng.normal(size=(N, n))] + [rng.normal(size=(N, n, n)) for _ in range(3)]
    a = _fallback.assemble_path_system(*terms)
    b = _core.assemble_path_system(*terms)
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)
    if N > 2:
        diag = np.einsum("kij,klj->kil", a[1], a[1]) + 4 * (n + 1) * np.eye(n)
        xa = _fallback.solve_block_tridiagonal(diag, a[2], a[0])
        xb = _core.solve_block_tridiagonal(diag, a[2], a[0])
        np.testing.assert_allclose(xa[0], xb[0], rtol=1e-10, atol=1e-12)
        assert xa[1] == xb[1]


def test_assemble_layout():
    N, n = 4, 1
    ga = np.arange(N, dtype=float)[:, None]
    gb = 10 + np.arange(N, dtype=float)[:, None]
    h = np.arange(N, dtype=float)[:, None, None]
    grad, diag, off = _fallback.assemble_path_system(ga, gb, h, 100 + h, 1000 + h)
    np.testing.assert_array_equal(grad.ravel(), [11, 13, 15])
    np.testing.assert_array_equal(diag.ravel(), [1001, 1003, 1005])
    np.testing.assert_array_equal(off.ravel(), [101, 102])


def test_backend_selected():
    assert _kernels.BACKEND in ("compiled", "python")
    if _core is not None:
        assert _kernels.BACKEND == "compiled" or __import__("os").environ.get("COMMUTING_ACTIONS_KERNELS") == "python"
