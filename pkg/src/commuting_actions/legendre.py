"""Legendre transform between Lagrangian and Hamiltonian descriptions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteError, NotConverged, SingularJacobian
from .numerics import DEFAULT_MAX_ITER, DEFAULT_TOL, DifferentiableScalarField
from .systems import HamiltonianSystem, LagrangianSystem

NONDEGENERACY_TOL = 1e-10


def _point(q, v) -> np.ndarray:
    return np.concatenate([np.atleast_1d(np.asarray(q, dtype=float)), np.atleast_1d(np.asarray(v, dtype=float))])


def momentum_of_velocity(L: LagrangianSystem, q, qdot) -> np.ndarray:
    """Fiber derivative ``p = dL/dqdot (q, qdot)``."""
    n = L.n
    p = L.L.gradient(_point(q, qdot))[n:]
    if not np.all(np.isfinite(p)):
        raise NonFiniteError(f"non-finite momentum at q={q}, qdot={qdot}")
    return p


def velocity_hessian(L: LagrangianSystem, q, qdot) -> np.ndarray:
    n = L.n
    return L.L.hessian(_point(q, qdot))[n:, n:]


def velocity_of_momentum(
    L: LagrangianSystem, q, p, qdot_guess=None, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> np.ndarray:
    """Invert the Legendre map locally: find ``qdot`` with ``dL/dqdot(q, qdot) = p``.

    The inverse is only local, so the branch is the one Newton reaches from
    ``qdot_guess`` (zero by default).
    """
    n = L.n
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    v = np.zeros(n) if qdot_guess is None else np.atleast_1d(np.asarray(qdot_guess, dtype=float)).copy()
    field = L.L
    x = np.concatenate([q, v])
    r = field.gradient(x)[n:] - p
    rnorm = float(np.max(np.abs(r)))
    # the extra pass after reaching tol polishes the residual to round-off
    polished = False
    for _ in range(max_iter):
        if rnorm <= tol and polished:
            return v
        J = field.hessian(x)[n:, n:]
        det = np.linalg.det(J)
        if not np.isfinite(det) or abs(det) <= NONDEGENERACY_TOL:
            if rnorm <= tol:
                return v
            raise SingularJacobian(f"velocity Hessian is singular (det={det:.3g}) at q={q}, qdot={v}")
        polished = rnorm <= tol
        dv = np.linalg.solve(J, -r)
        lam = 1.0
        for _ in range(30):
            trial = v + lam * dv
            xt = np.concatenate([q, trial])
            rt = field.gradient(xt)[n:] - p
            tnorm = float(np.max(np.abs(rt)))
            if np.isfinite(tnorm) and (tnorm < rnorm or (polished and tnorm <= tol)):
                break
            lam *= 0.5
        else:
            if rnorm <= tol:
                return v
            raise NotConverged("Legendre inversion line search failed", best=v)
        v, x, r, rnorm = trial, xt, rt, tnorm
    if rnorm <= tol:
        return v
    raise NotConverged(f"Legendre inversion did not converge (residual {rnorm:.3e})", best=v)


def check_nondegeneracy(L: LagrangianSystem, q, qdot) -> tuple[float, bool]:
    """Determinant of the velocity Hessian and whether the Legendre map is invertible there.

    Points outside the declared domain of ``L`` are reported as degenerate.
    """
    det = float(np.linalg.det(np.atleast_2d(velocity_hessian(L, q, qdot))))
    ok = L.in_domain(q, qdot) and np.isfinite(det) and abs(det) > NONDEGENERACY_TOL
    return det, bool(ok)


@dataclass(frozen=True)
class LegendrePair:
    lagrangian: LagrangianSystem
    hamiltonian: HamiltonianSystem
    velocity_guess: Callable[[np.ndarray, np.ndarray], np.ndarray] | None
    tol: float = DEFAULT_TOL

    def velocity(self, q, p) -> np.ndarray:
        guess = None if self.velocity_guess is None else self.velocity_guess(np.asarray(q), np.asarray(p))
        return velocity_of_momentum(self.lagrangian, q, p, guess, self.tol)


def legendre_pair(L: LagrangianSystem, tol: float = DEFAULT_TOL) -> LegendrePair:
    """Lagrangian together with its derived Hamiltonian.

    ``H(q, p) = <p, qdot> - L(q, qdot)`` with ``qdot = qdot(q, p)`` solved
    numerically. The gradient uses the envelope identities
    ``dH/dp = qdot`` and ``dH/dq = -dL/dq``; the Hessian differences that
    gradient.
    """
    n = L.n
    guess_fn = L.velocity_guess

    def velocity(q, p):
        guess = None if guess_fn is None else guess_fn(q, p)
        return velocity_of_momentum(L, q, p, guess, tol)

    def per_point(fn, x, width):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2 * n)
        out = np.array([fn(row) for row in flat], dtype=float)
        return out.reshape(x.shape[:-1] + ((width,) if width else ()))

    def h_value(row):
        q, p = row[:n], row[n:]
        v = velocity(q, p)
        return float(p @ v - L.L.eval(np.concatenate([q, v])))

    def h_grad(row):
        q, p = row[:n], row[n:]
        v = velocity(q, p)
        dL = L.L.gradient(np.concatenate([q, v]))
        return np.concatenate([-dL[:n], v])

    field = DifferentiableScalarField(
        2 * n,
        lambda x: per_point(h_value, x, 0),
        lambda x: per_point(h_grad, x, 2 * n),
    )
    H = HamiltonianSystem(L.space, field, name=f"H[{L.name}]")
    return LegendrePair(L, H, guess_fn, tol)


def hamiltonian_of(L: LagrangianSystem, tol: float = DEFAULT_TOL) -> HamiltonianSystem:
    """Legendre transform of a non-degenerate Lagrangian."""
    return legendre_pair(L, tol).hamiltonian

