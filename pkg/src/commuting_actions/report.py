"""Commutativity reports: records, verdict rule and deterministic serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from . import __version__

COMMUTING = "commuting"
NON_COMMUTING = "non-commuting"
INCONCLUSIVE = "inconclusive"

MAX_FAILURE_FRACTION = 0.10


@dataclass
class PointRecord:
    """Checks at one ``(q0, q12)`` point and one pair of times.

    Fields that do not apply (e.g. flows for discrete Lagrangians) stay
    ``None``.
    """

    q0: list[float]
    q12: list[float]
    t1: float | None = None
    t2: float | None = None
    S12: float | None = None
    S21: float | None = None
    action_commutator: float | None = None
    error_estimate: float | None = None
    poisson_bracket: float | None = None
    flow_commutator_norm: float | None = None
    endpoint_momentum_mismatch: list[float] | None = None
    energy_transport_residuals: list[float] | None = None
    junction_jumps: list[float] | None = None
    genhje_residuals: list[float] | None = None
    corner_residuals: list[float] | None = None
    # whether the S12 and S21 critical points are minima; False flags a
    # stationary point that is not a minimum (reported, not fatal)
    is_minimum: list[bool] | None = None
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class PhaseProbe:
    """Checks at a fixed phase-space point ``(q, p)``."""

    q: list[float]
    p: list[float]
    poisson_bracket: float | None = None
    flow_commutator_norm: float | None = None
    map_commutator_norm: float | None = None
    status: str = "ok"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _max_abs(values) -> float | None:
    vals = [abs(v) for v in values if v is not None and math.isfinite(v)]
    return max(vals) if vals else None


def _flat(records, name):
    out = []
    for r in records:
        val = getattr(r, name)
        if val is None:
            continue
        out.extend(val if isinstance(val, list) else [val])
    return out


def decide_verdict(
    records: list[PointRecord],
    commuting_factor: float = 10.0,
    noncommuting_factor: float = 100.0,
    max_failure_fraction: float = MAX_FAILURE_FRACTION,
) -> str:
    """Error-aware verdict on the action commutator.

    * inconclusive if more than ``max_failure_fraction`` of points failed;
    * non-commuting if some point has ``|delta| > noncommuting_factor * err``;
    * commuting if ``max |delta| <= commuting_factor * max err``;
    * inconclusive otherwise.
    """
    if not records:
        return INCONCLUSIVE
    good = [r for r in records if r.ok]
    if len(records) - len(good) > max_failure_fraction * len(records) or not good:
        return INCONCLUSIVE
    if any(abs(r.action_commutator) > noncommuting_factor * r.error_estimate for r in good):
        return NON_COMMUTING
    max_delta = max(abs(r.action_commutator) for r in good)
    max_err = max(r.error_estimate for r in good)
    if max_delta <= commuting_factor * max_err:
        return COMMUTING
    return INCONCLUSIVE


@dataclass
class CommutativityReport:
    config: dict[str, Any]
    points: list[PointRecord]
    probes: list[PhaseProbe] = field(default_factory=list)
    verdict: str = INCONCLUSIVE

    @property
    def summary(self) -> dict[str, Any]:
        pts, probes = self.points, self.probes
        ok = [r for r in pts if r.ok]
        return {
            "max_action_commutator": _max_abs(r.action_commutator for r in ok),
            "max_poisson_bracket": _max_abs(
                [r.poisson_bracket for r in ok] + [p.poisson_bracket for p in probes if p.ok]
            ),
            "max_flow_commutator": _max_abs(
                [r.flow_commutator_norm for r in ok] + [p.flow_commutator_norm for p in probes if p.ok]
            ),
            "max_map_commutator": _max_abs(p.map_commutator_norm for p in probes if p.ok),
            "max_error_estimate": _max_abs(r.error_estimate for r in ok),
            "max_endpoint_momentum_mismatch": _max_abs(_flat(ok, "endpoint_momentum_mismatch")),
            "max_energy_transport_residual": _max_abs(_flat(ok, "energy_transport_residuals")),
            "max_junction_jump": _max_abs(_flat(ok, "junction_jumps")),
            "max_genhje_residual": _max_abs(_flat(ok, "genhje_residuals")),
            "max_corner_residual": _max_abs(_flat(ok, "corner_residuals")),
            "points": len(pts),
            "failed_points": len(pts) - len(ok),
            "non_minimal_points": sum(1 for r in ok if r.is_minimum is not None and not all(r.is_minimum)),
            "phase_probes": len(probes),
            "failed_probes": sum(1 for p in probes if not p.ok),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "points": [_record_dict(r) for r in self.points],
            "phase_probes": [_record_dict(p) for p in self.probes],
            "summary": self.summary,
            "verdict": self.verdict,
            "tool_version": __version__,
        }


def _record_dict(record) -> dict[str, Any]:
    return {k: v for k, v in vars(record).items()}


# ---------------------------------------------------------------------------
# serialization


def format_number(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return "%.17g" % x


def _encode(obj: Any, indent: int, level: int) -> str:
    import json

    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if hasattr(obj, "item") and getattr(obj, "shape", None) == ():
        obj = obj.item()
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_number(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "tolist"):
        return _encode(obj.tolist(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON with 17-significant-digit floats (key order as given)."""
    return _encode(obj, indent, 0) + "\n"


def format_text(report: CommutativityReport) -> str:
    s = report.summary
    lines = [f"verdict: {report.verdict}"]
    for key, val in s.items():
        lines.append(f"  {key}: {val if not isinstance(val, float) else format_number(val)}")
    return "\n".join(lines) + "\n"
