"""Finite differences, Newton root finding and smooth minimization.

Every scalar field in the package (Lagrangians, Hamiltonians, discrete
Lagrangians) is a :class:`DifferentiableScalarField`. Fields are evaluated
on arrays whose last axis is the coordinate axis, so a batch of points of
shape ``(k, m)`` evaluates to ``k`` values in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteError, NotConverged, SingularJacobian

EPS = np.finfo(float).eps
GRAD_STEP = EPS ** (1 / 3)
HESS_STEP = EPS ** (1 / 4)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100
SINGULAR_CONDITION = 1e12


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    final_residual_norm: float
    converged: bool
    hessian_positive_definite: bool | None = None


def _steps(x: np.ndarray, step: float) -> np.ndarray:
    return step * np.maximum(1.0, np.abs(x))


def _check_finite(values: np.ndarray, component: int, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"non-finite {what} while differencing component {component}")


def fd_gradient(f: Callable, x, step: float = GRAD_STEP) -> np.ndarray:
    """Central-difference gradient of ``f`` at ``x``.

    Component ``i`` is differenced with ``step * max(1, |x_i|)``. ``x`` may
    carry leading batch axes as long as ``f`` is vectorized over them.
    """
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    hs = _steps(x, step)
    for i in range(x.shape[-1]):
        xp = x.copy()
        xm = x.copy()
        xp[..., i] += hs[..., i]
        xm[..., i] -= hs[..., i]
        fp = np.asarray(f(xp), dtype=float)
        fm = np.asarray(f(xm), dtype=float)
        _check_finite(fp, i, "evaluation")
        _check_finite(fm, i, "evaluation")
        grad[..., i] = (fp - fm) / (xp[..., i] - xm[..., i])
    return grad


def fd_jacobian(F: Callable, x, step: float = GRAD_STEP) -> np.ndarray:
    """Central-difference Jacobian of a vector function of one point."""
    x = np.asarray(x, dtype=float)
    hs = _steps(x, step)
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += hs[i]
        xm[i] -= hs[i]
        fp = np.atleast_1d(np.asarray(F(xp), dtype=float))
        fm = np.atleast_1d(np.asarray(F(xm), dtype=float))
        _check_finite(fp, i, "evaluation")
        _check_finite(fm, i, "evaluation")
        cols.append((fp - fm) / (xp[i] - xm[i]))
    return np.stack(cols, axis=-1)


def fd_hessian(f: Callable, x, step: float = HESS_STEP) -> np.ndarray:
    """Second-order central-difference Hessian from values only (batched)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    hs = _steps(x, step)
    hess = np.empty(x.shape + (m,))
    f0 = np.asarray(f(x), dtype=float)

    def shifted(i, si, j=None, sj=0.0):
        y = x.copy()
        y[..., i] += si * hs[..., i]
        if j is not None:
            y[..., j] += sj * hs[..., j]
        val = np.asarray(f(y), dtype=float)
        _check_finite(val, i, "evaluation")
        return val

    for i in range(m):
        hi = hs[..., i]
        hess[..., i, i] = (shifted(i, 1.0) - 2.0 * f0 + shifted(i, -1.0)) / (hi * hi)
        for j in range(i + 1, m):
            hj = hs[..., j]
            val = (
                shifted(i, 1.0, j, 1.0)
                - shifted(i, 1.0, j, -1.0)
                - shifted(i, -1.0, j, 1.0)
                + shifted(i, -1.0, j, -1.0)
            ) / (4.0 * hi * hj)
            hess[..., i, j] = val
            hess[..., j, i] = val
    return hess


def fd_hessian_from_gradient(grad: Callable, x, step: float = GRAD_STEP) -> np.ndarray:
    """Hessian by central differences of an exact gradient, symmetrized (batched)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    hs = _steps(x, step)
    hess = np.empty(x.shape + (m,))
    for i in range(m):
        xp = x.copy()
        xm = x.copy()
        xp[..., i] += hs[..., i]
        xm[..., i] -= hs[..., i]
        gp = np.asarray(grad(xp), dtype=float)
        gm = np.asarray(grad(xm), dtype=float)
        _check_finite(gp, i, "gradient")
        _check_finite(gm, i, "gradient")
        hess[..., :, i] = (gp - gm) / (xp[..., i] - xm[..., i])[..., None]
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


@dataclass(frozen=True)
class DifferentiableScalarField:
    """Scalar field on R^m with value, gradient and Hessian.

    ``func`` must accept arrays of shape ``(..., m)`` and return shape
    ``(...)``. Missing ``grad``/``hess`` fall back to central differences
    (the Hessian prefers differencing an exact gradient when one exists).
    """

    dimension: int
    func: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dimension,):
            raise ValueError(f"expected trailing axis of length {self.dimension}, got shape {x.shape}")
        return x

    def __call__(self, x) -> np.ndarray | float:
        return self.eval(x)

    def eval(self, x):
        x = self._as_points(x)
        val = self.func(x)
        return float(val) if x.ndim == 1 else np.asarray(val, dtype=float)

    def gradient(self, x) -> np.ndarray:
        x = self._as_points(x)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self.func, x)

    def hessian(self, x) -> np.ndarray:
        x = self._as_points(x)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        if self.grad is not None:
            return fd_hessian_from_gradient(self.grad, x)
        return fd_hessian(self.func, x)


def _inf_norm(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def newton_solve(
    F: Callable,
    x0,
    jac: Callable | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Solve ``F(x) = 0`` by Newton's method with residual backtracking.

    Returns ``(root, diag)`` with ``||F(root)||_inf <= tol`` on success.
    Scalars are promoted to length-1 vectors and the root is returned with
    the shape of ``x0``.

    Raises
    ------
    SingularJacobian
        if the Jacobian condition estimate exceeds 1e12.
    NotConverged
        after ``max_iter`` iterations; carries the best iterate.
    """
    shape = np.shape(x0)
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()

    def residual(y):
        r = np.atleast_1d(np.asarray(F(y.reshape(shape)), dtype=float))
        if not np.all(np.isfinite(r)):
            raise NonFiniteError("non-finite residual in Newton iteration")
        return r

    def jacobian(y):
        if jac is None:
            return fd_jacobian(lambda z: residual(z), y)
        return np.atleast_2d(np.asarray(jac(y.reshape(shape)), dtype=float))

    r = residual(x)
    rnorm = _inf_norm(r)
    best_x, best_norm = x.copy(), rnorm
    for it in range(max_iter + 1):
        if rnorm <= tol:
            return x.reshape(shape), SolveDiagnostics(it, rnorm, True)
        if it == max_iter:
            break
        J = jacobian(x)
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
            raise SingularJacobian(f"Jacobian condition estimate {cond:.3g} exceeds {SINGULAR_CONDITION:g}", cond)
        dx = np.linalg.solve(J, -r)
        step = 1.0
        for _ in range(30):
            trial = x + step * dx
            try:
                r_trial = residual(trial)
            except NonFiniteError:
                step *= 0.5
                continue
            if _inf_norm(r_trial) < rnorm or step < 1e-8:
                break
            step *= 0.5
        else:
            raise NonFiniteError("line search could not find a finite residual")
        x, r = trial, r_trial
        rnorm = _inf_norm(r)
        if rnorm < best_norm:
            best_x, best_norm = x.copy(), rnorm
    diag = SolveDiagnostics(max_iter, best_norm, False)
    raise NotConverged(
        f"Newton did not reach tol={tol:g} in {max_iter} iterations (best residual {best_norm:.3e})",
        best=best_x.reshape(shape),
        diag=diag,
    )


def is_positive_definite(hess: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Numerical positive definiteness.

    The smallest eigenvalue must exceed ``sqrt(tol) * max(1, ||H||)``:
    curvature below that level is not resolved by a gradient tolerance of
    ``tol`` and counts as degenerate.
    """
    eig = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    scale = max(1.0, float(np.max(np.abs(eig))))
    return bool(eig[0] > np.sqrt(tol) * scale)


def minimize(
    f: DifferentiableScalarField,
    x0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, float, SolveDiagnostics]:
    """Newton minimization with eigenvalue modification and backtracking.

    Negative or tiny Hessian eigenvalues are replaced by their absolute
    value (floored at 1e-8 of the spectral radius) so every step is a
    descent direction. The stationary point found is always returned; the
    diagnostics record whether the Hessian there is positive definite.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    fx = f.eval(x)
    if not np.isfinite(fx):
        raise NonFiniteError("non-finite objective at the starting point")
    g = f.gradient(x)
    gnorm = _inf_norm(g)
    for it in range(max_iter + 1):
        if gnorm <= tol:
            pd = is_positive_definite(f.hessian(x), tol)
            return x, fx, SolveDiagnostics(it, gnorm, True, pd)
        if it == max_iter:
            break
        H = f.hessian(x)
        lam, V = np.linalg.eigh(0.5 * (H + H.T))
        floor = 1e-8 * max(1.0, float(np.max(np.abs(lam))))
        lam = np.maximum(np.abs(lam), floor)
        dx = -V @ ((V.T @ g) / lam)
        slope = float(g @ dx)
        step = 1.0
        for _ in range(60):
            trial = x + step * dx
            f_trial = f.eval(trial)
            if np.isfinite(f_trial):
                if f_trial <= fx + 1e-4 * step * slope:
                    break
                # below round-off in f, accept any step that shrinks the gradient
                if abs(f_trial - fx) <= 16 * EPS * max(1.0, abs(fx)):
                    if _inf_norm(f.gradient(trial)) < gnorm:
                        break
            step *= 0.5
        else:
            raise NotConverged("line search failed", best=x, diag=SolveDiagnostics(it, gnorm, False))
        x, fx = trial, f_trial
        g = f.gradient(x)
        gnorm = _inf_norm(g)
    raise NotConverged(
        f"minimize did not reach tol={tol:g} in {max_iter} iterations (gradient {gnorm:.3e})",
        best=x,
        diag=SolveDiagnostics(max_iter, gnorm, False),
    )
