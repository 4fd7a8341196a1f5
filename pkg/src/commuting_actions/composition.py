"""Composed principal actions and the commuting-actions criterion.

``S12(q0, q12, t1, t2)`` is the critical action of a path that follows
``L1`` for time ``t1`` and then ``L2`` for time ``t2``; ``S21`` uses the
opposite order. The Lagrangians commute when the two agree. Everything
else here cross-checks the Hamiltonian consequences: momentum continuity
at the switch, endpoint momenta, energy transport, the Poisson bracket and
commuting flows.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CommutingActionsError, InvalidGrid
from .legendre import hamiltonian_of
from .numerics import DEFAULT_TOL
from .report import CommutativityReport, PhaseProbe, PointRecord, decide_verdict
from .systems import HamiltonianSystem, LagrangianSystem
from .trajectories import (
    DEFAULT_START_RESOLUTION,
    RESOLUTION_CAP,
    ActionResult,
    _check_horizon,
    _Piece,
    central_difference,
    integrate_flow,
    principal_action,
    richardson,
    solve_path,
)

ORDERS = ("12", "21")
DEFAULT_GRID = 5
DEFAULT_QRANGE = 0.5
DEFAULT_TIMES = ((0.5, 0.5), (1.0, 1.0))
DEFAULT_FLOW_STEPS = 100
DEFAULT_ACTION_TOL = 1e-8


@dataclass(frozen=True)
class ComposedActionResult:
    value: float
    junction: np.ndarray
    action: ActionResult
    p_start: np.ndarray
    p_end: np.ndarray
    junction_jump: np.ndarray
    order: str

    @property
    def error_estimate(self) -> float:
        return self.action.error_estimate


def _vec(q) -> np.ndarray:
    return np.atleast_1d(np.asarray(q, dtype=float))


def _split_steps(n_total: int, durations: Sequence[float]) -> list[int]:
    T = sum(durations)
    return [max(1, int(round(n_total * d / T))) for d in durations]


def composed_action(
    L1: LagrangianSystem,
    L2: LagrangianSystem,
    q0,
    q12,
    t1: float,
    t2: float,
    order: str = "12",
    tol: float | None = DEFAULT_ACTION_TOL,
    n_start: int = DEFAULT_START_RESOLUTION,
    adaptive: bool = True,
    junction=None,
    solver_tol: float = DEFAULT_TOL,
    piece_steps: tuple[int, int] | None = None,
    cap: int = RESOLUTION_CAP,
) -> ComposedActionResult:
    """Critical action of the glued path (``L1`` then ``L2`` for order ``"12"``).

    The whole path, switch node included, is solved jointly and
    Richardson-extrapolated like :func:`principal_action`. Passing
    ``junction`` pins the switch node instead, which yields the sum of two
    separate principal actions and a generally nonzero momentum jump.
    ``piece_steps`` fixes the coarse step counts of the two pieces
    (otherwise ``n_start`` is split in proportion to the durations).
    """
    if order not in ORDERS:
        raise ValueError(f"order must be '12' or '21', got {order!r}")
    if not (t1 > 0 and t2 > 0):
        raise ValueError("t1 and t2 must be positive")
    first, second = ((L1, t1), (L2, t2)) if order == "12" else ((L2, t2), (L1, t1))
    _check_horizon(*first)
    _check_horizon(*second)
    q0, q12 = _vec(q0), _vec(q12)
    target = tol if adaptive else None

    if junction is not None:
        qj = _vec(junction)
        steps = _split_steps(n_start, (first[1], second[1]))
        a = principal_action(first[0], q0, qj, first[1], tol or 1e-8, steps[0], adaptive, solver_tol, cap)
        b = principal_action(second[0], qj, q12, second[1], tol or 1e-8, steps[1], adaptive, solver_tol, cap)
        merged = ActionResult(
            value=a.value + b.value,
            path=a.path,
            p_start=a.p_start,
            p_end=b.p_end,
            diag=a.diag,
            resolution=a.resolution + b.resolution,
            error_estimate=a.error_estimate + b.error_estimate,
        )
        return ComposedActionResult(merged.value, qj, merged, a.p_start, b.p_end, a.p_end - b.p_start, order)

    base = list(piece_steps) if piece_steps else _split_steps(n_start, (first[1], second[1]))

    def solve(level):
        pieces = [
            _Piece(first[0], float(first[1]), base[0] * 2**level),
            _Piece(second[0], float(second[1]), base[1] * 2**level),
        ]
        return solve_path(pieces, q0, q12, solver_tol), pieces

    res = richardson(solve, sum(base), target, cap)
    switch = res.path.switch_nodes[0]
    p_minus, p_plus = res.junction_momenta[0]
    return ComposedActionResult(
        value=res.value,
        junction=res.path.points[switch].copy(),
        action=res,
        p_start=res.p_start,
        p_end=res.p_end,
        junction_jump=p_minus - p_plus,
        order=order,
    )


def junction_momentum_jump(result: ComposedActionResult) -> np.ndarray:
    """Momentum just before minus just after the switch; zero on a critical path."""
    return result.junction_jump


@dataclass(frozen=True)
class ComposedPair:
    S12: ComposedActionResult
    S21: ComposedActionResult

    @property
    def delta(self) -> float:
        return self.S12.value - self.S21.value

    @property
    def error_estimate(self) -> float:
        return self.S12.error_estimate + self.S21.error_estimate


def composed_pair(
    L1, L2, q0, q12, t1, t2, tol=DEFAULT_ACTION_TOL, n_start=DEFAULT_START_RESOLUTION, cap=RESOLUTION_CAP
) -> ComposedPair:
    return ComposedPair(
        composed_action(L1, L2, q0, q12, t1, t2, "12", tol, n_start, cap=cap),
        composed_action(L1, L2, q0, q12, t1, t2, "21", tol, n_start, cap=cap),
    )


def action_commutator(L1, L2, q0, q12, t1, t2, tol=DEFAULT_ACTION_TOL) -> tuple[float, float]:
    """``S12(q0, q12, t1, t2) - S21(q0, q12, t2, t1)`` and the summed error estimate."""
    pair = composed_pair(L1, L2, q0, q12, t1, t2, tol)
    return pair.delta, pair.error_estimate


@dataclass(frozen=True)
class GenHJEResiduals:
    r_q0: np.ndarray
    r_q12: np.ndarray
    r_t1: float
    r_t2: float

    def as_list(self) -> list[float]:
        return [*map(float, self.r_q0), *map(float, self.r_q12), float(self.r_t1), float(self.r_t2)]


def composed_action_derivatives(
    L1,
    L2,
    q0,
    q12,
    t1,
    t2,
    fd_step: float = 1e-4,
    tol: float = DEFAULT_ACTION_TOL,
    H1: HamiltonianSystem | None = None,
    H2: HamiltonianSystem | None = None,
    center: ComposedActionResult | None = None,
) -> GenHJEResiduals:
    """Finite-difference partials of ``S12`` against momenta and energies.

    ``dS12/dq0 + p_start``, ``dS12/dq12 - p_end``, ``dS12/dt1 + H1(start)``
    and ``dS12/dt2 + H2(end)``. The resolution of the center solve is
    frozen for the shifted ones.
    """
    H1 = hamiltonian_of(L1) if H1 is None else H1
    H2 = hamiltonian_of(L2) if H2 is None else H2
    q0, q12 = _vec(q0), _vec(q12)
    if center is None:
        center = composed_action(L1, L2, q0, q12, t1, t2, "12", tol)
    steps = tuple((last - first) // 2 for first, last, _ in center.action.path.pieces)

    def S(a, b, s1, s2):
        return composed_action(L1, L2, a, b, s1, s2, "12", adaptive=False, piece_steps=steps).value

    def shifted(vec, i, d):
        out = vec.copy()
        out[i] += d
        return out

    n = q0.size
    d_q0 = np.array([central_difference(lambda d: S(shifted(q0, i, d), q12, t1, t2), 0.0, fd_step) for i in range(n)])
    d_q12 = np.array([central_difference(lambda d: S(q0, shifted(q12, i, d), t1, t2), 0.0, fd_step) for i in range(n)])
    d_t1 = central_difference(lambda s: S(q0, q12, s, t2), t1, fd_step)
    d_t2 = central_difference(lambda s: S(q0, q12, t1, s), t2, fd_step)
    q_end = center.action.path.points[-1]
    return GenHJEResiduals(
        r_q0=d_q0 + center.p_start,
        r_q12=d_q12 - center.p_end,
        r_t1=float(d_t1 + H1(q0, center.p_start)),
        r_t2=float(d_t2 + H2(q_end, center.p_end)),
    )


def endpoint_momentum_mismatch(L1, L2, q0, q12, t1, t2, tol=DEFAULT_ACTION_TOL, pair: ComposedPair | None = None):
    """Differences of the start and end momenta between the two orders."""
    pair = composed_pair(L1, L2, q0, q12, t1, t2, tol) if pair is None else pair
    return pair.S12.p_start - pair.S21.p_start, pair.S12.p_end - pair.S21.p_end


def energy_transport_check(
    L1, L2, q0, q12, t1, t2, tol=DEFAULT_ACTION_TOL, H1=None, H2=None, pair: ComposedPair | None = None
) -> tuple[float, float]:
    """``H1(q0, p_start[12]) - H1(q12, p_end[21])`` and ``H2(q0, p_start[21]) - H2(q12, p_end[12])``."""
    H1 = hamiltonian_of(L1) if H1 is None else H1
    H2 = hamiltonian_of(L2) if H2 is None else H2
    pair = composed_pair(L1, L2, q0, q12, t1, t2, tol) if pair is None else pair
    q0 = _vec(q0)
    q_end = pair.S12.action.path.points[-1]
    r1 = H1(q0, pair.S12.p_start) - H1(q_end, pair.S21.p_end)
    r2 = H2(q0, pair.S21.p_start) - H2(q_end, pair.S12.p_end)
    return float(r1), float(r2)


def poisson_bracket(H1: HamiltonianSystem, H2: HamiltonianSystem, x) -> float:
    """Canonical bracket ``sum_j dH1/dp_j dH2/dq_j - dH1/dq_j dH2/dp_j`` at ``x = (q, p)``."""
    x = np.asarray(x, dtype=float)
    n = H1.n
    g1 = H1.H.gradient(x)
    g2 = H2.H.gradient(x)
    return float(g1[n:] @ g2[:n] - g1[:n] @ g2[n:])


def flow_commutator(H1, H2, x0, t1: float, t2: float, steps: int = DEFAULT_FLOW_STEPS):
    """``|F2^t2 F1^t1 x0 - F1^t1 F2^t2 x0|_inf`` and both endpoints."""
    x0 = np.asarray(x0, dtype=float)
    x12 = integrate_flow(H2, integrate_flow(H1, x0, t1, steps).final, t2, steps).final
    x21 = integrate_flow(H1, integrate_flow(H2, x0, t2, steps).final, t1, steps).final
    return float(np.max(np.abs(x12 - x21))), x12, x21


# ---------------------------------------------------------------------------
# report


def default_grid(n: int = 1, size: int = DEFAULT_GRID, qrange: float = DEFAULT_QRANGE) -> list[tuple[np.ndarray, np.ndarray]]:
    """``size x size`` pairs ``(q0, q12)`` in ``[-qrange, qrange]``, embedded along the diagonal of R^n."""
    vals = np.linspace(-qrange, qrange, size)
    return [(np.full(n, a), np.full(n, b)) for a in vals for b in vals]


def default_phase_probes(n: int = 1, size: int = DEFAULT_GRID, qrange: float = DEFAULT_QRANGE):
    """``size x size`` phase points with ``q`` in ``[-qrange, qrange]`` and ``p`` in ``[0.25, 1.25]``."""
    qs = np.linspace(-qrange, qrange, size)
    ps = np.linspace(0.25, 1.25, size)
    return [(np.full(n, q), np.full(n, p)) for q in qs for p in ps]


def _floats(v) -> list[float]:
    return [float(x) for x in np.atleast_1d(v)]


def _evaluate_point(L1, L2, H1, H2, q0, q12, t1, t2, opts) -> PointRecord:
    rec = PointRecord(q0=_floats(q0), q12=_floats(q12), t1=float(t1), t2=float(t2))
    try:
        pair = composed_pair(L1, L2, q0, q12, t1, t2, opts["tol"], opts["n_start"], opts["cap"])
        rec.S12, rec.S21 = pair.S12.value, pair.S21.value
        rec.action_commutator = pair.delta
        rec.error_estimate = pair.error_estimate
        rec.is_minimum = [pair.S12.action.is_minimum, pair.S21.action.is_minimum]
        d0, d12 = endpoint_momentum_mismatch(L1, L2, q0, q12, t1, t2, pair=pair)
        rec.endpoint_momentum_mismatch = _floats(np.concatenate([d0, d12]))
        rec.energy_transport_residuals = list(energy_transport_check(L1, L2, q0, q12, t1, t2, H1=H1, H2=H2, pair=pair))
        rec.junction_jumps = [
            float(np.max(np.abs(pair.S12.junction_jump))),
            float(np.max(np.abs(pair.S21.junction_jump))),
        ]
        x = np.concatenate([_vec(q0), pair.S12.p_start])
        rec.poisson_bracket = poisson_bracket(H1, H2, x)
        rec.flow_commutator_norm = flow_commutator(H1, H2, x, t1, t2, opts["flow_steps"])[0]
        if opts["derivatives"]:
            res = composed_action_derivatives(
                L1, L2, q0, q12, t1, t2, opts["fd_step"], H1=H1, H2=H2, center=pair.S12
            )
            rec.genhje_residuals = res.as_list()
    except (CommutingActionsError, ArithmeticError, ValueError) as exc:
        rec.status = "failed"
        rec.message = f"{type(exc).__name__}: {exc}"
    return rec


def _evaluate_probe(H1, H2, q, p, t, steps) -> PhaseProbe:
    probe = PhaseProbe(q=_floats(q), p=_floats(p))
    x = np.concatenate([_vec(q), _vec(p)])
    try:
        probe.poisson_bracket = poisson_bracket(H1, H2, x)
        probe.flow_commutator_norm = flow_commutator(H1, H2, x, t[0], t[1], steps)[0]
    except (CommutingActionsError, ArithmeticError, ValueError) as exc:
        probe.status = "failed"
        probe.message = f"{type(exc).__name__}: {exc}"
    return probe


def commutativity_report(
    L1: LagrangianSystem,
    L2: LagrangianSystem,
    grid: Iterable | None = None,
    times: Iterable[tuple[float, float]] | None = DEFAULT_TIMES,
    tol: float = DEFAULT_ACTION_TOL,
    phase_probes: Iterable | None = None,
    flow_steps: int = DEFAULT_FLOW_STEPS,
    derivatives: bool = True,
    fd_step: float = 1e-4,
    n_start: int = DEFAULT_START_RESOLUTION,
    cap: int = RESOLUTION_CAP,
    commuting_factor: float = 10.0,
    noncommuting_factor: float = 100.0,
    workers: int = 1,
    config: dict | None = None,
) -> CommutativityReport:
    """Evaluate every check on ``grid x times`` and on fixed phase probes.

    Point failures are recorded, not raised. Records come out in grid order
    (times outermost) whatever the number of workers.
    """
    n = L1.n
    grid = default_grid(n) if grid is None else [(_vec(a), _vec(b)) for a, b in grid]
    times = [] if times is None else [(float(a), float(b)) for a, b in times]
    if not grid:
        raise InvalidGrid("grid of (q0, q12) points is empty")
    if not times:
        raise InvalidGrid("set of (t1, t2) times is empty")
    if any(not (a > 0 and b > 0) for a, b in times):
        raise InvalidGrid("times must be positive")
    probes = default_phase_probes(n) if phase_probes is None else [(_vec(q), _vec(p)) for q, p in phase_probes]

    H1, H2 = hamiltonian_of(L1), hamiltonian_of(L2)
    opts = {"tol": tol, "n_start": n_start, "cap": cap, "flow_steps": flow_steps, "derivatives": derivatives, "fd_step": fd_step}
    jobs = [(q0, q12, t1, t2) for (t1, t2) in times for (q0, q12) in grid]

    def run(job):
        return _evaluate_point(L1, L2, H1, H2, *job, opts)

    probe_time = times[0]

    def run_probe(pq):
        return _evaluate_probe(H1, H2, pq[0], pq[1], probe_time, flow_steps)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, jobs))
            probe_records = list(pool.map(run_probe, probes))
    else:
        records = [run(j) for j in jobs]
        probe_records = [run_probe(p) for p in probes]

    cfg = {
        "grid_points": len(grid),
        "times": [list(t) for t in times],
        "tol": tol,
        "n_start": n_start,
        "resolution_cap": cap,
        "flow_steps": flow_steps,
        "fd_step": fd_step,
        "derivatives": derivatives,
        "commuting_factor": commuting_factor,
        "noncommuting_factor": noncommuting_factor,
        "probe_times": list(probe_time),
    }
    if config:
        cfg = {**config, **cfg}
    verdict = decide_verdict(records, commuting_factor, noncommuting_factor)
    return CommutativityReport(cfg, records, probe_records, verdict)

