"""Discrete Lagrangians: implicit symplectic maps, corner equations, commutativity.

A discrete Lagrangian ``Lambda(q0, q1)`` defines a map ``F(q0, p0) =
(q1, p1)`` through

    p0 = dLambda/dq0 (q0, q1),    p1 = -dLambda/dq1 (q0, q1).

This is the sign convention used throughout; note it is the negative of
the usual generating-function convention, so the quadratic
``|q1 - q0|^2 / (2h)`` gives ``(q, p) -> (q - h p, p)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CommutingActionsError, InvalidGrid
from .numerics import DEFAULT_TOL, SolveDiagnostics, fd_jacobian, is_positive_definite, newton_solve
from .report import CommutativityReport, PhaseProbe, PointRecord, decide_verdict
from .systems import DiscreteLagrangian

log = logging.getLogger(__name__)

DISCRETE_VALUE_TOL = 1e-12


def _vec(q) -> np.ndarray:
    return np.atleast_1d(np.asarray(q, dtype=float))


@dataclass(frozen=True)
class DiscreteMapResult:
    q_next: np.ndarray
    p_next: np.ndarray
    diag: SolveDiagnostics

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.q_next, self.p_next])


def discrete_map(Lam: DiscreteLagrangian, q0, p0, q_guess=None, tol: float = DEFAULT_TOL) -> DiscreteMapResult:
    """Apply the map generated by ``Lam`` to ``(q0, p0)``.

    Newton on ``dLambda/dq0 (q0, q1) = p0`` starting from ``q_guess``
    (``q0`` by default, i.e. near the identity).
    """
    q0, p0 = _vec(q0), _vec(p0)
    guess = q0.copy() if q_guess is None else _vec(q_guess)

    def residual(q1):
        return Lam.d_q0(q0, q1) - p0

    def jac(q1):
        return Lam.hessian_blocks(q0, q1)[1]

    q1, diag = newton_solve(residual, guess, jac=jac, tol=tol)
    return DiscreteMapResult(q1, -Lam.d_q1(q0, q1), diag)


def _solve_corner_equation(first: DiscreteLagrangian, second: DiscreteLagrangian, q0, q12, guess, tol):
    """Critical point ``q`` of ``first(q0, q) + second(q, q12)``."""

    def residual(q):
        return first.d_q1(q0, q) + second.d_q0(q, q12)

    def jac(q):
        return first.hessian_blocks(q0, q)[2] + second.hessian_blocks(q, q12)[0]

    q, diag = newton_solve(residual, guess, jac=jac, tol=tol)
    hess = jac(q)
    return q, SolveDiagnostics(diag.iterations, diag.final_residual_norm, diag.converged, is_positive_definite(hess))


@dataclass(frozen=True)
class CornerSolution:
    """Both corner solutions of an elementary square.

    ``q_mid`` solves the corner equation of ``(first, second)`` and
    ``q_swap`` that of ``(second, first)``. ``E_mid`` and ``E_swap`` are
    their residuals; ``E0`` and ``E12`` are the residuals of the remaining
    two corner equations at those points.
    """

    q_mid: np.ndarray
    q_swap: np.ndarray
    E_mid: np.ndarray
    E_swap: np.ndarray
    E0: np.ndarray
    E12: np.ndarray
    S12: float
    S21: float
    diag_mid: SolveDiagnostics
    diag_swap: SolveDiagnostics

    @property
    def is_minimum(self) -> tuple[bool, bool]:
        return bool(self.diag_mid.hessian_positive_definite), bool(self.diag_swap.hessian_positive_definite)


def solve_corner(
    first: DiscreteLagrangian, second: DiscreteLagrangian, q0, q12, q_guess=None, tol: float = DEFAULT_TOL
) -> CornerSolution:
    """Solve the two corner equations at ``(q0, q12)`` and evaluate all four.

    With ``first = Lambda1`` and ``second = Lambda2`` this is ``q_mid = q1``
    from ``dLambda1/dq1 (q0, q1) + dLambda2/dq1 (q1, q12) = 0`` and
    ``q_swap = q2`` from the same equation with the roles exchanged.
    """
    q0 = _vec(q0)
    q12 = first.space.lift(q0, _vec(q12))
    guess = 0.5 * (q0 + q12) if q_guess is None else _vec(q_guess)
    q1, d1 = _solve_corner_equation(first, second, q0, q12, guess, tol)
    q2, d2 = _solve_corner_equation(second, first, q0, q12, guess, tol)
    return CornerSolution(
        q_mid=q1,
        q_swap=q2,
        E_mid=first.d_q1(q0, q1) + second.d_q0(q1, q12),
        E_swap=second.d_q1(q0, q2) + first.d_q0(q2, q12),
        E0=first.d_q0(q0, q1) - second.d_q0(q0, q2),
        E12=first.d_q1(q2, q12) - second.d_q1(q1, q12),
        S12=first(q0, q1) + second(q1, q12),
        S21=second(q0, q2) + first(q2, q12),
        diag_mid=d1,
        diag_swap=d2,
    )


def discrete_composed_action(Lam1, Lam2, q0, q12, order: str = "12", q_guess=None) -> float:
    """``Lambda1(q0, q1) + Lambda2(q1, q12)`` at the critical ``q1`` (order ``"12"``), or the swapped sum."""
    if order not in ("12", "21"):
        raise ValueError(f"order must be '12' or '21', got {order!r}")
    first, second = (Lam1, Lam2) if order == "12" else (Lam2, Lam1)
    q0 = _vec(q0)
    q12 = first.space.lift(q0, _vec(q12))
    guess = 0.5 * (q0 + q12) if q_guess is None else _vec(q_guess)
    q, diag = _solve_corner_equation(first, second, q0, q12, guess, DEFAULT_TOL)
    if not diag.hessian_positive_definite:
        log.warning("critical point q=%s of the order-%s composition is not a minimum", q, order)
    return float(first(q0, q) + second(q, q12))


def discrete_action_commutator(Lam1, Lam2, q0, q12) -> float:
    """``S12(q0, q12) - S21(q0, q12)``."""
    corner = solve_corner(Lam1, Lam2, q0, q12)
    return corner.S12 - corner.S21


def corner_consistency_check(Lam1, Lam2, q0, q12) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the two corner equations not used to find ``q1``, ``q2``."""
    corner = solve_corner(Lam1, Lam2, q0, q12)
    return corner.E0, corner.E12


def map_commutator(Lam1, Lam2, q0, p0):
    """``|F2(F1(x)) - F1(F2(x))|_inf`` at ``x = (q0, p0)`` and both images."""
    q0, p0 = _vec(q0), _vec(p0)
    a = discrete_map(Lam1, q0, p0)
    x12 = discrete_map(Lam2, a.q_next, a.p_next).state
    b = discrete_map(Lam2, q0, p0)
    x21 = discrete_map(Lam1, b.q_next, b.p_next).state
    return float(np.max(np.abs(x12 - x21))), x12, x21


def canonical_matrix(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def symplecticity_check(Lam: DiscreteLagrangian, q0, p0) -> float:
    """``|DF^T J DF - J|_inf`` with ``DF`` from central differences of the map."""
    q0, p0 = _vec(q0), _vec(p0)
    n = q0.size
    center = discrete_map(Lam, q0, p0)

    def F(x):
        return discrete_map(Lam, x[:n], x[n:], q_guess=center.q_next).state

    DF = fd_jacobian(F, np.concatenate([q0, p0]))
    J = canonical_matrix(n)
    return float(np.max(np.abs(DF.T @ J @ DF - J)))


# ---------------------------------------------------------------------------
# report


def default_phase_grid(n: int = 1, size: int = 5, qrange: float = 0.5):
    """``size x size`` phase points with ``q`` in ``[-qrange, qrange]`` and ``p`` in ``[-1, 1]``."""
    qs = np.linspace(-qrange, qrange, size)
    ps = np.linspace(-1.0, 1.0, size)
    return [(np.full(n, q), np.full(n, p)) for q in qs for p in ps]


def _floats(v) -> list[float]:
    return [float(x) for x in np.atleast_1d(v)]


def discrete_commutativity_report(
    Lam1: DiscreteLagrangian,
    Lam2: DiscreteLagrangian,
    grid: Iterable | None = None,
    phase_grid: Iterable | None = None,
    value_tol: float = DISCRETE_VALUE_TOL,
    commuting_factor: float = 10.0,
    noncommuting_factor: float = 100.0,
    config: dict | None = None,
) -> CommutativityReport:
    """Action commutator and corner residuals on ``grid``; map commutator on ``phase_grid``.

    Without time discretization the only error is the solve itself, so each
    point's error estimate is ``value_tol * max(1, |S12|, |S21|)``.
    """
    from .composition import default_grid

    n = Lam1.n
    grid = default_grid(n) if grid is None else [(_vec(a), _vec(b)) for a, b in grid]
    phase_grid = default_phase_grid(n) if phase_grid is None else [(_vec(q), _vec(p)) for q, p in phase_grid]
    if not grid:
        raise InvalidGrid("grid of (q0, q12) points is empty")
    if not phase_grid:
        raise InvalidGrid("phase grid is empty")

    records = []
    for q0, q12 in grid:
        rec = PointRecord(q0=_floats(q0), q12=_floats(q12))
        try:
            c = solve_corner(Lam1, Lam2, q0, q12)
            rec.S12, rec.S21 = c.S12, c.S21
            rec.action_commutator = c.S12 - c.S21
            rec.error_estimate = value_tol * max(1.0, abs(c.S12), abs(c.S21))
            rec.corner_residuals = _floats(np.concatenate([c.E0, c.E12]))
            rec.is_minimum = list(c.is_minimum)
        except (CommutingActionsError, ArithmeticError, ValueError) as exc:
            rec.status = "failed"
            rec.message = f"{type(exc).__name__}: {exc}"
        records.append(rec)

    probes = []
    for q, p in phase_grid:
        probe = PhaseProbe(q=_floats(q), p=_floats(p))
        try:
            probe.map_commutator_norm = map_commutator(Lam1, Lam2, q, p)[0]
        except (CommutingActionsError, ArithmeticError, ValueError) as exc:
            probe.status = "failed"
            probe.message = f"{type(exc).__name__}: {exc}"
        probes.append(probe)

    cfg = {
        "grid_points": len(grid),
        "phase_points": len(phase_grid),
        "value_tol": value_tol,
        "commuting_factor": commuting_factor,
        "noncommuting_factor": noncommuting_factor,
    }
    if config:
        cfg = {**config, **cfg}
    verdict = decide_verdict(records, commuting_factor, noncommuting_factor)
    return CommutativityReport(cfg, records, probes, verdict)
