"""Command-line front end.

Exit codes: 0 success (or verdict commuting), 1 verdict non-commuting,
2 inconclusive, 3 usage or parse error, 4 solver failure. Documents go to
``--out`` (or nowhere); one summary line goes to stdout and diagnostics to
stderr.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .composition import (
    DEFAULT_ACTION_TOL,
    DEFAULT_FLOW_STEPS,
    DEFAULT_GRID,
    DEFAULT_QRANGE,
    DEFAULT_TIMES,
    commutativity_report,
    composed_action,
    default_grid,
    default_phase_probes,
    poisson_bracket,
)
from .discrete import DISCRETE_VALUE_TOL, default_phase_grid, discrete_commutativity_report, discrete_map
from .errors import (
    CommutingActionsError,
    InvalidGrid,
    InvalidParameter,
    SpecParseError,
    TimeHorizonError,
    UnknownSystem,
)
from .legendre import hamiltonian_of
from .report import COMMUTING, INCONCLUSIVE, NON_COMMUTING, CommutativityReport, dumps, format_number, format_text
from .systems import CATALOG, POLYNOMIAL_NAMES, SystemSpec, catalog_lookup, parse_system_spec
from .trajectories import DEFAULT_START_RESOLUTION, RESOLUTION_CAP, hj_check, integrate_flow, principal_action

log = logging.getLogger("commuting_actions")

EXIT_OK = 0
EXIT_NON_COMMUTING = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3
EXIT_SOLVER = 4

VERDICT_EXIT = {COMMUTING: EXIT_OK, NON_COMMUTING: EXIT_NON_COMMUTING, INCONCLUSIVE: EXIT_INCONCLUSIVE}

# errors that mean the request itself is wrong rather than the numerics
USAGE_ERRORS = (SpecParseError, UnknownSystem, InvalidParameter, InvalidGrid, TimeHorizonError)

HJ_THRESHOLD = 1e-5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument types


def _vector(text: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
    return np.array(vals)


def _positive_real(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real, got {text!r}") from None
    if not (math.isfinite(val) and val > 0):
        raise argparse.ArgumentTypeError(f"expected a positive real, got {text!r}")
    return val


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return val


def _times(text: str) -> list[tuple[float, float]]:
    """``"t1:t2,t1:t2,..."``."""
    out = []
    for item in text.split(","):
        parts = item.split(":")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected t1:t2 pairs, got {item!r}")
        out.append((_positive_real(parts[0]), _positive_real(parts[1])))
    return out


def _time_list(text: str) -> list[float]:
    return [_positive_real(v) for v in text.split(",")]


# ---------------------------------------------------------------------------
# parser


def _shared(sub: argparse.ArgumentParser) -> None:
    g = sub.add_argument_group("shared options")
    g.add_argument("--tol", type=_positive_real, default=None, help="target error tolerance")
    g.add_argument("--grid", type=_positive_int, default=DEFAULT_GRID, help="points per axis of the verification grid")
    g.add_argument("--qrange", type=_positive_real, default=DEFAULT_QRANGE, help="grid covers [-qrange, qrange]")
    g.add_argument(
        "--times",
        type=_times,
        default=None,
        help="comma-separated t1:t2 pairs (default 0.5:0.5,1:1)",
    )
    g.add_argument(
        "--resolution", type=_positive_int, default=DEFAULT_START_RESOLUTION, help="starting number of time steps N"
    )
    g.add_argument(
        "--max-resolution", type=_positive_int, default=RESOLUTION_CAP, help="cap on the number of time steps"
    )
    g.add_argument("--out", type=Path, default=None, help="write the document to this path")
    g.add_argument("--format", choices=("json", "text"), default="json", help="document format")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="commuting-actions",
        description="Numerical checks of commuting Lagrangians, their actions, flows and discrete maps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    subs.required = True

    def add(name, help_text):
        sub = subs.add_parser(name, help=help_text, description=help_text)
        _shared(sub)
        return sub

    add("catalog", "List the builtin systems and their default parameters.")

    sub = add("action", "Principal action S(from, to, time) of one Lagrangian.")
    sub.add_argument("--system", required=True, help="system spec file (or inline JSON)")
    sub.add_argument("--from", dest="q_from", type=_vector, required=True, help="start point q0")
    sub.add_argument("--to", dest="q_to", type=_vector, required=True, help="end point q1")
    sub.add_argument("--time", type=_positive_real, required=True, help="duration t")

    sub = add("flow", "Time-t Hamiltonian flow of the Legendre transform of a Lagrangian.")
    sub.add_argument("--system", required=True, help="system spec file (or inline JSON)")
    sub.add_argument("--q", type=_vector, required=True, help="initial position")
    sub.add_argument("--p", type=_vector, required=True, help="initial momentum")
    sub.add_argument("--time", type=float, required=True, help="flow time")
    sub.add_argument("--steps", type=_positive_int, default=DEFAULT_FLOW_STEPS, help="RK4 steps")

    sub = add("hj-check", "Hamilton-Jacobi residuals of the principal action on an endpoint grid.")
    sub.add_argument("--system", required=True, help="system spec file (or inline JSON)")
    sub.add_argument("--time", type=_time_list, default=[0.5, 1.0], help="comma-separated durations")
    sub.add_argument("--threshold", type=_positive_real, default=HJ_THRESHOLD, help="pass threshold on residuals")

    sub = add("compose", "Composed action of L1 then L2 (order 12) or L2 then L1 (order 21).")
    sub.add_argument("--l1", required=True, help="first system spec")
    sub.add_argument("--l2", required=True, help="second system spec")
    sub.add_argument("--from", dest="q_from", type=_vector, required=True, help="start point q0")
    sub.add_argument("--to", dest="q_to", type=_vector, required=True, help="end point q12")
    sub.add_argument("--t1", type=_positive_real, required=True, help="time under L1")
    sub.add_argument("--t2", type=_positive_real, required=True, help="time under L2")
    sub.add_argument("--order", choices=("12", "21"), default="12", help="which Lagrangian acts first")

    sub = add("check-commute", "Commutativity report for two continuous-time Lagrangians.")
    sub.add_argument("--l1", required=True, help="first system spec")
    sub.add_argument("--l2", required=True, help="second system spec")
    sub.add_argument("--steps", type=_positive_int, default=DEFAULT_FLOW_STEPS, help="RK4 steps for flows")
    sub.add_argument("--no-derivatives", action="store_true", help="skip the finite-difference action identities")
    sub.add_argument("--workers", type=_positive_int, default=1, help="threads for grid evaluation")

    sub = add("discrete-map", "Iterate the symplectic map generated by a discrete Lagrangian.")
    sub.add_argument("--system", required=True, help="system spec file (or inline JSON)")
    sub.add_argument("--q", type=_vector, required=True, help="initial position")
    sub.add_argument("--p", type=_vector, required=True, help="initial momentum")
    sub.add_argument("--steps", type=_positive_int, default=1, help="number of map applications")

    sub = add("check-commute-discrete", "Commutativity report for two discrete Lagrangians.")
    sub.add_argument("--l1", required=True, help="first system spec")
    sub.add_argument("--l2", required=True, help="second system spec")

    sub = add("poisson", "Poisson bracket {H1, H2} of the Legendre transforms at (q, p).")
    sub.add_argument("--l1", required=True, help="first system spec")
    sub.add_argument("--l2", required=True, help="second system spec")
    sub.add_argument("--q", type=_vector, required=True, help="position")
    sub.add_argument("--p", type=_vector, required=True, help="momentum")
    return parser


# ---------------------------------------------------------------------------
# helpers


def load_spec(source: str) -> SystemSpec:
    """Spec from a file path, or from inline JSON when ``source`` starts with ``{``."""
    if source.lstrip().startswith("{"):
        return parse_system_spec(source)
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read system spec {source!r}: {exc.strerror}") from None
    try:
        return parse_system_spec(text)
    except SpecParseError as exc:
        raise SpecParseError(f"{source}: {exc}") from None


def _system(source: str, discrete: bool):
    spec = load_spec(source)
    if spec.is_discrete != discrete:
        want = "a discrete Lagrangian" if discrete else "a continuous-time Lagrangian"
        raise UsageError(f"{source}: this command needs {want}, got {spec.name}")
    return spec, catalog_lookup(spec)


def _check_dimension(q: np.ndarray, n: int, flag: str) -> np.ndarray:
    if q.size != n:
        raise UsageError(f"{flag} has {q.size} components, system dimension is {n}")
    return q


def _base_config(args, specs: dict[str, SystemSpec]) -> dict[str, Any]:
    return {
        "command": args.command,
        "systems": {k: v.to_dict() for k, v in specs.items()},
    }


def _emit(args, document: Any, text: str, summary: str) -> None:
    if args.out is not None:
        body = dumps(document) if args.format == "json" else text
        args.out.write_text(body)
    print(summary)


def _document(config: dict[str, Any], result: Any) -> dict[str, Any]:
    return {"config": config, "result": result, "tool_version": __version__}


def _text_lines(result: dict[str, Any]) -> str:
    lines = []
    for key, val in result.items():
        if isinstance(val, float):
            val = format_number(val)
        elif isinstance(val, list):
            val = "[" + ", ".join(format_number(v) if isinstance(v, float) else str(v) for v in val) + "]"
        lines.append(f"{key}: {val}")
    return "\n".join(lines) + "\n"


def _list(v) -> list[float]:
    return [float(x) for x in np.atleast_1d(v)]


# ---------------------------------------------------------------------------
# commands


def cmd_catalog(args) -> int:
    entries = [
        {"kind": "builtin", "name": e.name, "discrete": e.discrete, "defaults": dict(e.defaults), "description": e.description}
        for e in CATALOG.values()
    ]
    entries += [
        {"kind": "polynomial", "name": name, "discrete": disc, "defaults": {}, "description": "params c_<exponents>"}
        for name, disc in POLYNOMIAL_NAMES.items()
    ]
    text = "".join(f"{e['kind']:<10} {e['name']:<20} {e['description']}\n" for e in entries)
    if args.out is None:
        sys.stdout.write(text)
    else:
        _emit(args, _document({"command": "catalog"}, entries), text, f"{len(entries)} systems")
    return EXIT_OK


def cmd_action(args) -> int:
    spec, L = _system(args.system, discrete=False)
    q0 = _check_dimension(args.q_from, L.n, "--from")
    q1 = _check_dimension(args.q_to, L.n, "--to")
    tol = args.tol if args.tol is not None else 1e-8
    res = principal_action(L, q0, q1, args.time, tol, args.resolution, cap=args.max_resolution)
    config = {**_base_config(args, {"system": spec}), "from": _list(q0), "to": _list(q1), "time": args.time,
              "tol": tol, "resolution": args.resolution, "max_resolution": args.max_resolution}
    result = {
        "value": res.value,
        "error_estimate": res.error_estimate,
        "resolution": res.resolution,
        "p_start": _list(res.p_start),
        "p_end": _list(res.p_end),
        "is_minimum": res.is_minimum,
    }
    summary = f"action {format_number(res.value)} error_estimate {format_number(res.error_estimate)} N {res.resolution}"
    _emit(args, _document(config, result), _text_lines(result), summary)
    return EXIT_OK


def cmd_flow(args) -> int:
    spec, L = _system(args.system, discrete=False)
    q = _check_dimension(args.q, L.n, "--q")
    p = _check_dimension(args.p, L.n, "--p")
    H = hamiltonian_of(L)
    final = integrate_flow(H, np.concatenate([q, p]), args.time, args.steps).final
    config = {**_base_config(args, {"system": spec}), "q": _list(q), "p": _list(p), "time": args.time,
              "steps": args.steps}
    result = {"q": _list(final[: L.n]), "p": _list(final[L.n :])}
    summary = "flow q " + " ".join(map(format_number, result["q"])) + " p " + " ".join(map(format_number, result["p"]))
    _emit(args, _document(config, result), _text_lines(result), summary)
    return EXIT_OK


def cmd_hj_check(args) -> int:
    spec, L = _system(args.system, discrete=False)
    H = hamiltonian_of(L)
    tol = args.tol if args.tol is not None else 1e-9
    records = []
    worst = 0.0
    failures = 0
    for t in args.time:
        for qa, qb in default_grid(L.n, args.grid, args.qrange):
            rec: dict[str, Any] = {"q_a": _list(qa), "q_b": _list(qb), "t": t}
            try:
                r = hj_check(L, qa, qb, t, H=H, target_tol=tol, n_start=args.resolution)
                rec.update(res_qa=_list(r.res_qa), res_qb=_list(r.res_qb), res_t=r.res_t, status="ok")
                worst = max(worst, r.max_abs)
            except CommutingActionsError as exc:
                if isinstance(exc, USAGE_ERRORS):
                    raise
                rec.update(status="failed", message=f"{type(exc).__name__}: {exc}")
                failures += 1
            records.append(rec)
    passed = failures == 0 and worst <= args.threshold
    config = {**_base_config(args, {"system": spec}), "times": list(args.time), "grid": args.grid,
              "qrange": args.qrange, "tol": tol, "threshold": args.threshold, "resolution": args.resolution}
    result = {"points": records, "max_residual": worst, "failed_points": failures, "passed": passed}
    text = f"max_residual: {format_number(worst)}\nfailed_points: {failures}\npassed: {passed}\n"
    _emit(args, _document(config, result), text, f"hj-check max_residual {format_number(worst)} {'pass' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_INCONCLUSIVE


def cmd_compose(args) -> int:
    s1, L1 = _system(args.l1, discrete=False)
    s2, L2 = _system(args.l2, discrete=False)
    if L1.n != L2.n:
        raise UsageError("the two systems have different dimensions")
    q0 = _check_dimension(args.q_from, L1.n, "--from")
    q12 = _check_dimension(args.q_to, L1.n, "--to")
    tol = args.tol if args.tol is not None else DEFAULT_ACTION_TOL
    res = composed_action(L1, L2, q0, q12, args.t1, args.t2, args.order, tol, args.resolution, cap=args.max_resolution)
    config = {**_base_config(args, {"l1": s1, "l2": s2}), "from": _list(q0), "to": _list(q12), "t1": args.t1,
              "t2": args.t2, "order": args.order, "tol": tol, "resolution": args.resolution}
    result = {
        "value": res.value,
        "error_estimate": res.error_estimate,
        "junction": _list(res.junction),
        "p_start": _list(res.p_start),
        "p_end": _list(res.p_end),
        "junction_jump": _list(res.junction_jump),
    }
    summary = f"compose {args.order} {format_number(res.value)} error_estimate {format_number(res.error_estimate)}"
    _emit(args, _document(config, result), _text_lines(result), summary)
    return EXIT_OK


def _report_summary(report: CommutativityReport) -> str:
    s = report.summary
    parts = [f"verdict {report.verdict}"]
    for key in ("max_action_commutator", "max_error_estimate", "max_poisson_bracket", "max_flow_commutator",
                "max_map_commutator"):
        if s[key] is not None:
            parts.append(f"{key} {format_number(s[key])}")
    parts.append(f"failed_points {s['failed_points']}/{s['points']}")
    return " ".join(parts)


def _emit_report(args, report: CommutativityReport) -> int:
    for rec in report.points:
        if not rec.ok:
            log.warning("point q0=%s q12=%s failed: %s", rec.q0, rec.q12, rec.message)
    _emit(args, report.to_dict(), format_text(report), _report_summary(report))
    return VERDICT_EXIT[report.verdict]


def cmd_check_commute(args) -> int:
    s1, L1 = _system(args.l1, discrete=False)
    s2, L2 = _system(args.l2, discrete=False)
    if L1.n != L2.n:
        raise UsageError("the two systems have different dimensions")
    times = args.times if args.times is not None else [tuple(t) for t in DEFAULT_TIMES]
    tol = args.tol if args.tol is not None else DEFAULT_ACTION_TOL
    config = {**_base_config(args, {"l1": s1, "l2": s2}), "grid": args.grid, "qrange": args.qrange}
    report = commutativity_report(
        L1,
        L2,
        grid=default_grid(L1.n, args.grid, args.qrange),
        times=times,
        tol=tol,
        phase_probes=default_phase_probes(L1.n, args.grid, args.qrange),
        flow_steps=args.steps,
        derivatives=not args.no_derivatives,
        n_start=args.resolution,
        cap=args.max_resolution,
        workers=args.workers,
        config=config,
    )
    return _emit_report(args, report)


def cmd_discrete_map(args) -> int:
    spec, Lam = _system(args.system, discrete=True)
    q = _check_dimension(args.q, Lam.n, "--q")
    p = _check_dimension(args.p, Lam.n, "--p")
    tol = args.tol if args.tol is not None else 1e-10
    states = [np.concatenate([q, p])]
    for _ in range(args.steps):
        res = discrete_map(Lam, q, p, tol=tol)
        q, p = res.q_next, res.p_next
        states.append(res.state)
    config = {**_base_config(args, {"system": spec}), "q": _list(args.q), "p": _list(args.p), "steps": args.steps,
              "tol": tol}
    result = {"states": [_list(s) for s in states], "q": _list(q), "p": _list(p)}
    summary = "discrete-map q " + " ".join(map(format_number, result["q"])) + " p " + " ".join(
        map(format_number, result["p"])
    )
    _emit(args, _document(config, result), _text_lines({"q": result["q"], "p": result["p"]}), summary)
    return EXIT_OK


def cmd_check_commute_discrete(args) -> int:
    s1, Lam1 = _system(args.l1, discrete=True)
    s2, Lam2 = _system(args.l2, discrete=True)
    if Lam1.n != Lam2.n:
        raise UsageError("the two systems have different dimensions")
    tol = args.tol if args.tol is not None else DISCRETE_VALUE_TOL
    config = {**_base_config(args, {"l1": s1, "l2": s2}), "grid": args.grid, "qrange": args.qrange}
    report = discrete_commutativity_report(
        Lam1,
        Lam2,
        grid=default_grid(Lam1.n, args.grid, args.qrange),
        phase_grid=default_phase_grid(Lam1.n, args.grid, args.qrange),
        value_tol=tol,
        config=config,
    )
    return _emit_report(args, report)


def cmd_poisson(args) -> int:
    s1, L1 = _system(args.l1, discrete=False)
    s2, L2 = _system(args.l2, discrete=False)
    if L1.n != L2.n:
        raise UsageError("the two systems have different dimensions")
    q = _check_dimension(args.q, L1.n, "--q")
    p = _check_dimension(args.p, L1.n, "--p")
    value = poisson_bracket(hamiltonian_of(L1), hamiltonian_of(L2), np.concatenate([q, p]))
    config = {**_base_config(args, {"l1": s1, "l2": s2}), "q": _list(q), "p": _list(p)}
    result = {"poisson_bracket": value}
    _emit(args, _document(config, result), _text_lines(result), f"poisson_bracket {format_number(value)}")
    return EXIT_OK


COMMANDS = {
    "catalog": cmd_catalog,
    "action": cmd_action,
    "flow": cmd_flow,
    "hj-check": cmd_hj_check,
    "compose": cmd_compose,
    "check-commute": cmd_check_commute,
    "discrete-map": cmd_discrete_map,
    "check-commute-discrete": cmd_check_commute_discrete,
    "poisson": cmd_poisson,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CommutingActionsError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
