import json
import math

import numpy as np
import pytest

from commuting_actions import __version__
from commuting_actions.report import (
    CommutativityReport,
    PhaseProbe,
    PointRecord,
    decide_verdict,
    dumps,
    format_number,
    format_text,
)


def _rec(delta, err, status="ok"):
    return PointRecord(q0=[0.0], q12=[1.0], action_commutator=delta, error_estimate=err, status=status)


def test_verdict_rule():
    assert decide_verdict([_rec(1e-12, 1e-12)] * 5) == "commuting"
    assert decide_verdict([_rec(1e-12, 1e-12)] * 4 + [_rec(1e-3, 1e-8)]) == "non-commuting"
    assert decide_verdict([_rec(5e-11, 1e-12)]) == "inconclusive"
    assert decide_verdict([_rec(0.0, 1e-12)] * 8 + [_rec(None, None, "failed")] * 2) == "inconclusive"
    assert decide_verdict([_rec(0.0, 1e-12)] * 9 + [_rec(None, None, "failed")]) == "commuting"
    assert decide_verdict([]) == "inconclusive"


def test_format_number_round_trips():
    for x in (0.1, 1 / 3, -2.5e-300, 1e300, 0.0):
        assert float(format_number(x)) == x
    assert format_number(math.nan) == '"NaN"'
    assert format_number(-math.inf) == '"-Infinity"'


def test_dumps_is_valid_json_with_numpy_values():
    doc = {"a": np.float64(0.1), "b": np.int64(3), "c": np.bool_(True), "d": np.array([1.0, 2.5]), "e": [], "f": {}}
    text = dumps(doc)
    assert json.loads(text) == {"a": 0.1, "b": 3, "c": True, "d": [1.0, 2.5], "e": [], "f": {}}
    assert text == dumps(doc)


def test_report_document():
    rep = CommutativityReport(
        {"x": 1},
        [_rec(1e-12, 1e-12)],
        [PhaseProbe(q=[0.0], p=[1.0], poisson_bracket=-2e-9, flow_commutator_norm=1e-10)],
        "commuting",
    )
    doc = json.loads(dumps(rep.to_dict()))
    assert set(doc) == {"config", "points", "phase_probes", "summary", "verdict", "tool_version"}
    assert doc["tool_version"] == __version__
    for key in ("max_action_commutator", "max_poisson_bracket", "max_flow_commutator", "max_error_estimate"):
        assert key in doc["summary"]
    assert doc["summary"]["max_poisson_bracket"] == pytest.approx(2e-9)
    assert format_text(rep).startswith("verdict: commuting")
