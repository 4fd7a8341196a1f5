"""Critical paths, principal actions, Hamiltonian flows and Hamilton-Jacobi checks.

Paths are discretized with the midpoint rule: a segment from ``a`` to ``b``
of duration ``h`` contributes ``h * L((a + b)/2, (b - a)/h)``. The
discrete action is stationary in the interior points; its Hessian is
block tridiagonal and solved by the kernels in :mod:`._kernels`.

A path may consist of several pieces with different Lagrangians and
step sizes (used for composed actions). The junctions between pieces are
ordinary interior nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import FlowBlowUp, NonFiniteError, NotConverged, ResolutionCapExceeded, TimeHorizonError
from .legendre import hamiltonian_of
from .numerics import DEFAULT_MAX_ITER, DEFAULT_TOL, EPS, SolveDiagnostics
from .systems import HamiltonianSystem, LagrangianSystem

DEFAULT_START_RESOLUTION = 50
RESOLUTION_CAP = 2**14


@dataclass(frozen=True)
class DiscretePath:
    """Time-discretized path ``q_0 .. q_N``.

    ``pieces`` lists ``(first_node, last_node, step)`` for each stretch of
    uniform step; a composed path has one piece per Lagrangian and the
    switch happens at the shared node.
    """

    points: np.ndarray
    t_start: float
    t_end: float
    pieces: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "points", pts)
        if pts.shape[0] < 3:
            raise ValueError("a discrete path needs at least two steps")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if not self.pieces:
            N = pts.shape[0] - 1
            object.__setattr__(self, "pieces", ((0, N, (self.t_end - self.t_start) / N),))

    @property
    def N(self) -> int:
        return self.points.shape[0] - 1

    @property
    def switch_nodes(self) -> tuple[int, ...]:
        return tuple(piece[1] for piece in self.pieces[:-1])

    @property
    def times(self) -> np.ndarray:
        out = [self.t_start]
        for first, last, h in self.pieces:
            out.extend(out[-1] + h * np.arange(1, last - first + 1))
        return np.asarray(out)


@dataclass(frozen=True)
class ActionResult:
    value: float
    path: DiscretePath
    p_start: np.ndarray
    p_end: np.ndarray
    diag: SolveDiagnostics
    resolution: int
    error_estimate: float
    junction_momenta: tuple[tuple[np.ndarray, np.ndarray], ...] = ()

    @property
    def is_minimum(self) -> bool:
        return bool(self.diag.hessian_positive_definite)


@dataclass(frozen=True)
class PhasePath:
    states: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        if len(self.states) != len(self.times) or len(self.times) < 2:
            raise ValueError("states and times must have equal length >= 2")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


# ---------------------------------------------------------------------------
# segment terms


@dataclass(frozen=True)
class SegmentTerms:
    value: np.ndarray
    ga: np.ndarray
    gb: np.ndarray
    haa: np.ndarray
    hab: np.ndarray
    hbb: np.ndarray


def segment_terms(L: LagrangianSystem, a: np.ndarray, b: np.ndarray, h: float, hessian: bool = True) -> SegmentTerms:
    """Midpoint-rule segment action ``h L((a+b)/2, (b-a)/h)`` and its derivatives (batched)."""
    n = L.n
    mid = 0.5 * (a + b)
    vel = (b - a) / h
    x = np.concatenate([mid, vel], axis=-1)
    val = h * np.asarray(L.L.eval(x), dtype=float)
    g = L.L.gradient(x)
    Lq, Lv = g[..., :n], g[..., n:]
    ga = 0.5 * h * Lq - Lv
    gb = 0.5 * h * Lq + Lv
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(ga)) and np.all(np.isfinite(gb))):
        raise NonFiniteError(f"non-finite discrete action terms for {L.name}")
    if not hessian:
        return SegmentTerms(val, ga, gb, None, None, None)
    Hm = L.L.hessian(x)
    A = Hm[..., :n, :n]
    B = Hm[..., :n, n:]
    Bt = np.swapaxes(B, -1, -2)
    C = Hm[..., n:, n:]
    sym = 0.5 * (B + Bt)
    haa = 0.25 * h * A - sym + C / h
    hbb = 0.25 * h * A + sym + C / h
    hab = 0.25 * h * A + 0.5 * (B - Bt) - C / h
    return SegmentTerms(val, ga, gb, haa, hab, hbb)


@dataclass(frozen=True)
class _Piece:
    L: LagrangianSystem
    duration: float
    steps: int

    @property
    def h(self) -> float:
        return self.duration / self.steps


def _path_terms(pieces: Sequence[_Piece], points: np.ndarray, hessian: bool = True) -> list[SegmentTerms]:
    out, node = [], 0
    for piece in pieces:
        a = points[node : node + piece.steps]
        b = points[node + 1 : node + piece.steps + 1]
        out.append(segment_terms(piece.L, a, b, piece.h, hessian))
        node += piece.steps
    return out


def _concat(terms: list[SegmentTerms], name: str) -> np.ndarray:
    return np.concatenate([getattr(t, name) for t in terms], axis=0)


def _interior_gradient(pieces, points) -> np.ndarray:
    terms = _path_terms(pieces, points, hessian=False)
    ga, gb = _concat(terms, "ga"), _concat(terms, "gb")
    return gb[:-1] + ga[1:]


@dataclass(frozen=True)
class _PathSolution:
    value: float
    points: np.ndarray
    p_start: np.ndarray
    p_end: np.ndarray
    junctions: tuple[tuple[np.ndarray, np.ndarray], ...]
    diag: SolveDiagnostics


def _check_horizon(L: LagrangianSystem, t: float) -> None:
    if not t > 0:
        raise ValueError(f"time must be positive, got {t!r}")
    if t >= L.max_time:
        raise TimeHorizonError(
            f"t={t:g} is past the guarded horizon {L.max_time:g} of {L.name}; the critical path is no longer unique"
        )


def solve_path(
    pieces: Sequence[_Piece],
    q_a,
    q_b,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: np.ndarray | None = None,
) -> _PathSolution:
    """Newton solve for the critical discrete path through the given pieces."""
    L0 = pieces[0].L
    n = L0.n
    q_a = np.atleast_1d(np.asarray(q_a, dtype=float))
    q_b = L0.space.lift(q_a, np.atleast_1d(np.asarray(q_b, dtype=float)))
    N = sum(p.steps for p in pieces)
    if N < 2:
        raise ValueError("need at least two steps")
    if initial is None:
        times = np.concatenate([[0.0], np.cumsum(np.concatenate([np.full(p.steps, p.h) for p in pieces]))])
        s = (times / times[-1])[:, None]
        points = (1.0 - s) * q_a + s * q_b
    else:
        points = np.array(initial, dtype=float).reshape(N + 1, n)
        points[0], points[-1] = q_a, q_b

    def grad_norm(pts):
        g = _interior_gradient(pieces, pts)
        return float(np.max(np.abs(g))), g

    it = 0
    pd = None
    while True:
        terms = _path_terms(pieces, points)
        grad, diag, off = _kernels.assemble_path_system(
            _concat(terms, "ga"), _concat(terms, "gb"), _concat(terms, "haa"), _concat(terms, "hab"), _concat(terms, "hbb")
        )
        gnorm = float(np.max(np.abs(grad)))
        step, pd, status = _kernels.solve_block_tridiagonal(diag, off, -grad)
        if status != 0:
            raise NotConverged("singular path Hessian", best=points, diag=SolveDiagnostics(it, gnorm, False, None))
        if gnorm <= tol:
            break
        if it >= max_iter:
            raise NotConverged(
                f"path Newton did not reach tol={tol:g} in {max_iter} iterations (gradient {gnorm:.3e})",
                best=points,
                diag=SolveDiagnostics(it, gnorm, False, pd),
            )
        lam = 1.0
        g2 = float(np.linalg.norm(grad))
        for _ in range(30):
            trial = points.copy()
            trial[1:-1] += lam * step
            try:
                tnorm, tg = grad_norm(trial)
            except NonFiniteError:
                lam *= 0.5
                continue
            if np.linalg.norm(tg) < g2 or lam < 1e-6:
                break
            lam *= 0.5
        points = trial
        it += 1

    values = np.concatenate([t.value for t in terms])
    first, last = terms[0], terms[-1]
    junctions = []
    for k in range(len(pieces) - 1):
        left, right = terms[k], terms[k + 1]
        junctions.append((left.gb[-1].copy(), -right.ga[0].copy()))
    return _PathSolution(
        value=float(math.fsum(values)),
        points=points,
        p_start=-first.ga[0].copy(),
        p_end=last.gb[-1].copy(),
        junctions=tuple(junctions),
        diag=SolveDiagnostics(it, gnorm, True, bool(pd)),
    )


def _to_result(sol: _PathSolution, pieces: Sequence[_Piece], resolution: int, error: float) -> ActionResult:
    T = sum(p.duration for p in pieces)
    spans, node = [], 0
    for p in pieces:
        spans.append((node, node + p.steps, p.h))
        node += p.steps
    path = DiscretePath(sol.points, 0.0, T, tuple(spans))
    return ActionResult(sol.value, path, sol.p_start, sol.p_end, sol.diag, resolution, error, sol.junctions)


def minimize_action(
    L: LagrangianSystem, q_a, q_b, t: float, N: int, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> ActionResult:
    """Critical discrete action between ``q_a`` and ``q_b`` in time ``t`` at ``N`` steps.

    A single resolution carries no error estimate, so ``error_estimate`` is
    infinite; see :func:`principal_action` for the extrapolated value.
    """
    _check_horizon(L, t)
    if N < 2:
        raise ValueError("N must be at least 2")
    pieces = [_Piece(L, float(t), int(N))]
    sol = solve_path(pieces, q_a, q_b, tol, max_iter)
    return _to_result(sol, pieces, N, math.inf)


def roundoff_floor(values: Sequence[float], steps: int) -> float:
    """Error floor from summing ``steps`` segment terms in floating point."""
    return steps * EPS * max(1.0, *(abs(v) for v in values))


def richardson(
    solve: Callable[[int], tuple[_PathSolution, list[_Piece]]],
    n_start: int,
    target_tol: float | None,
    cap: int = RESOLUTION_CAP,
) -> ActionResult:
    """Second-order Richardson extrapolation with doubling.

    ``solve(level)`` returns the path solution with step counts scaled by
    ``2**level``. With ``target_tol=None`` a single pair (levels 0, 1) is
    used; otherwise levels increase until ``|S_2N - S_N| / 3`` (plus a
    round-off floor) is below ``target_tol``.
    """
    level = 0
    coarse, _ = solve(0)
    best = None
    while True:
        fine, pieces = solve(level + 1)
        steps = sum(p.steps for p in pieces)
        err = abs(fine.value - coarse.value) / 3.0 + roundoff_floor((fine.value, coarse.value), steps)
        value = (4.0 * fine.value - coarse.value) / 3.0
        p_start = (4.0 * fine.p_start - coarse.p_start) / 3.0
        p_end = (4.0 * fine.p_end - coarse.p_end) / 3.0
        sol = _PathSolution(value, fine.points, p_start, p_end, fine.junctions, fine.diag)
        best = _to_result(sol, pieces, steps, err)
        if target_tol is None or err <= target_tol:
            return best
        if 2 * steps > cap:
            raise ResolutionCapExceeded(
                f"error estimate {err:.3e} above {target_tol:g} at resolution cap {cap}", best=best
            )
        coarse = fine
        level += 1


def principal_action(
    L: LagrangianSystem,
    q_a,
    q_b,
    t: float,
    target_tol: float = 1e-8,
    n_start: int = DEFAULT_START_RESOLUTION,
    adaptive: bool = True,
    solver_tol: float = DEFAULT_TOL,
    cap: int = RESOLUTION_CAP,
) -> ActionResult:
    """Richardson-extrapolated principal action ``S(q_a, q_b, t)``.

    Solves at ``N`` and ``2N`` steps and returns ``(4 S_2N - S_N)/3`` with
    ``error_estimate = |S_2N - S_N|/3``. With ``adaptive=True`` the
    resolution doubles until the estimate is below ``target_tol`` (at most
    ``cap`` steps); with ``adaptive=False`` exactly ``n_start`` and
    ``2 n_start`` are used, which keeps finite differences of the result
    smooth. Boundary momenta are extrapolated the same way.
    """
    _check_horizon(L, t)

    def solve(level):
        pieces = [_Piece(L, float(t), n_start * 2**level)]
        return solve_path(pieces, q_a, q_b, solver_tol), pieces

    return richardson(solve, n_start, target_tol if adaptive else None, cap)


def euler_lagrange_residual(L: LagrangianSystem, path: DiscretePath) -> float:
    """Infinity norm of the discrete Euler-Lagrange expression at interior nodes."""
    if path.N < 2:
        raise ValueError("path needs at least three points")
    pieces = [_Piece(L, (last - first) * h, last - first) for first, last, h in path.pieces]
    return float(np.max(np.abs(_interior_gradient(pieces, path.points))))


# ---------------------------------------------------------------------------
# Hamiltonian flows


def hamiltonian_vector_field(H: HamiltonianSystem, x: np.ndarray) -> np.ndarray:
    n = H.n
    g = H.H.gradient(x)
    return np.concatenate([g[n:], -g[:n]])


def integrate_flow(H: HamiltonianSystem, x0, t: float, steps: int = 100) -> PhasePath:
    """Time-``t`` flow of ``H`` from ``x0 = (q, p)`` by the classical RK4 method."""
    if steps < 1:
        raise ValueError("steps must be positive")
    x = np.asarray(x0, dtype=float).copy()
    states = np.empty((steps + 1, x.size))
    states[0] = x
    times = np.linspace(0.0, t, steps + 1)
    if t == 0:
        states[:] = x
        return PhasePath(states, times)
    dt = t / steps
    for k in range(steps):
        # overflow is reported as FlowBlowUp below, not as a numpy warning
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = hamiltonian_vector_field(H, x)
            k2 = hamiltonian_vector_field(H, x + 0.5 * dt * k1)
            k3 = hamiltonian_vector_field(H, x + 0.5 * dt * k2)
            k4 = hamiltonian_vector_field(H, x + dt * k3)
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise FlowBlowUp(f"flow of {H.name} blew up after t={times[k]:g}", float(times[k]))
        states[k + 1] = x
    return PhasePath(states, times)


# ---------------------------------------------------------------------------
# Hamilton-Jacobi identities


@dataclass(frozen=True)
class HJResiduals:
    res_qa: np.ndarray
    res_qb: np.ndarray
    res_t: float
    center: ActionResult = field(repr=False)

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.res_qa)), np.max(np.abs(self.res_qb)), abs(self.res_t)))


def central_difference(fn: Callable[[float], float], x: float, step: float) -> float:
    return (fn(x + step) - fn(x - step)) / (2.0 * step)


def hj_check(
    L: LagrangianSystem,
    q_a,
    q_b,
    t: float,
    H: HamiltonianSystem | None = None,
    fd_step: float = 1e-4,
    target_tol: float = 1e-9,
    n_start: int = DEFAULT_START_RESOLUTION,
) -> HJResiduals:
    """Compare finite-difference partials of ``S`` with endpoint momenta and energy.

    Returns ``dS/dq_a + p_start``, ``dS/dq_b - p_end`` and
    ``dS/dt + H(q_b, p_end)``. The resolution found adaptively at the
    center is frozen for all shifted evaluations.
    """
    H = hamiltonian_of(L) if H is None else H
    q_a = np.atleast_1d(np.asarray(q_a, dtype=float))
    q_b = np.atleast_1d(np.asarray(q_b, dtype=float))
    center = principal_action(L, q_a, q_b, t, target_tol, n_start)
    n_fixed = center.resolution // 2

    def S(qa, qb, tt):
        return principal_action(L, qa, qb, tt, n_start=n_fixed, adaptive=False).value

    def shifted(vec, i, d):
        out = vec.copy()
        out[i] += d
        return out

    dqa = np.array([central_difference(lambda d: S(shifted(q_a, i, d), q_b, t), 0.0, fd_step) for i in range(L.n)])
    dqb = np.array([central_difference(lambda d: S(q_a, shifted(q_b, i, d), t), 0.0, fd_step) for i in range(L.n)])
    dt = central_difference(lambda tt: S(q_a, q_b, tt), t, fd_step)
    q_end = center.path.points[-1]
    return HJResiduals(
        res_qa=dqa + center.p_start,
        res_qb=dqb - center.p_end,
        res_t=float(dt + H(q_end, center.p_end)),
        center=center,
    )
