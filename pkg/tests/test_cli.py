import json
import subprocess
import sys

import pytest

from commuting_actions.cli import COMMANDS, build_parser, run

FREE = '{"kind": "builtin", "name": "free_particle", "dimension": 1}'
FREE2 = '{"kind": "builtin", "name": "free_particle", "params": {"mass": 2.0}, "dimension": 1}'
HARM = '{"kind": "builtin", "name": "harmonic", "dimension": 1}'
DQ1 = '{"kind": "builtin", "name": "discrete_quadratic"}'
DQ2 = '{"kind": "builtin", "name": "discrete_quadratic", "params": {"h": 2}}'
KICK = '{"kind": "builtin", "name": "discrete_kicked"}'
SMALL = ["--grid", "2", "--times", "0.5:0.5", "--no-derivatives"]


@pytest.fixture
def specs(tmp_path):
    out = {}
    for name, text in {"free": FREE, "free2": FREE2, "harm": HARM}.items():
        path = tmp_path / f"{name}.json"
        path.write_text(text)
        out[name] = str(path)
    return out


def test_action_prints_value(specs, capsys):
    assert run(["action", "--system", specs["free"], "--from", "0", "--to", "1", "--time", "1"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.split()[:2] == ["action", "0.5"]


def test_action_document(specs, tmp_path):
    out = tmp_path / "a.json"
    argv = ["action", "--system", specs["harm"], "--from", "0", "--to", "1", "--time", "1", "--out", str(out)]
    assert run(argv) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["value"] == pytest.approx(0.321046307967165, abs=1e-8)
    assert doc["config"]["systems"]["system"]["params"] == {"mass": 1.0, "omega": 1.0}


def test_check_commute_exit_codes(specs, tmp_path):
    out = tmp_path / "r.json"
    assert run(["check-commute", "--l1", specs["free"], "--l2", specs["free2"], *SMALL, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["verdict"] == "commuting"
    # a 2 x 2 grid only holds points with q12 = +-q0, where parity and time
    # reversal make the two orders agree even for this pair
    argv = ["check-commute", "--l1", specs["free"], "--l2", specs["harm"], "--grid", "3", "--times", "0.5:0.5"]
    assert run([*argv, "--no-derivatives", "--out", str(out)]) == 1
    assert json.loads(out.read_text())["verdict"] == "non-commuting"


def test_inconclusive_exit(specs, capsys):
    # every point beyond the harmonic horizon fails
    assert run(["check-commute", "--l1", specs["free"], "--l2", specs["harm"], "--grid", "1", "--times", "3:3"]) == 2


def test_discrete_commands(capsys, tmp_path):
    assert run(["check-commute-discrete", "--l1", DQ1, "--l2", DQ2]) == 0
    assert run(["check-commute-discrete", "--l1", DQ1, "--l2", KICK]) == 1
    half = '{"kind": "builtin", "name": "discrete_quadratic", "params": {"h": 0.5}}'
    capsys.readouterr()
    assert run(["discrete-map", "--system", half, "--q", "0", "--p", "1"]) == 0
    assert capsys.readouterr().out.split() == ["discrete-map", "q", "-0.5", "p", "1"]


def test_other_commands(specs, capsys):
    assert run(["poisson", "--l1", specs["free"], "--l2", specs["harm"], "--q", "1", "--p", "1"]) == 0
    assert capsys.readouterr().out.split() == ["poisson_bracket", "1"]
    assert run(["flow", "--system", specs["free"], "--q", "0", "--p", "1", "--time", "1"]) == 0
    words = capsys.readouterr().out.split()
    assert [words[0], words[1], words[3]] == ["flow", "q", "p"]
    assert [float(words[2]), float(words[4])] == pytest.approx([1.0, 1.0], abs=1e-12)
    assert run(["compose", "--l1", specs["free"], "--l2", specs["free2"], "--from", "0", "--to", "1", "--t1", "1", "--t2", "1"]) == 0
    assert float(capsys.readouterr().out.split()[2]) == pytest.approx(1 / 3, abs=1e-10)
    assert run(["hj-check", "--system", specs["free"], "--grid", "2", "--time", "1"]) == 0
    assert run(["catalog"]) == 0
    assert "discrete_kicked" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["action", "--bogus"],
        ["nonsense"],
        [],
        ["action", "--system", FREE, "--from", "0", "--to", "1", "--time", "-1"],
        ["action", "--system", "/does/not/exist.json", "--from", "0", "--to", "1", "--time", "1"],
        ["action", "--system", '{"kind": "builtin"}', "--from", "0", "--to", "1", "--time", "1"],
        ["action", "--system", '{"kind": "builtin", "name": "pendulum"}', "--from", "0", "--to", "1", "--time", "1"],
        ["action", "--system", DQ1, "--from", "0", "--to", "1", "--time", "1"],
        ["action", "--system", FREE, "--from", "0,1", "--to", "1", "--time", "1"],
        ["action", "--system", HARM, "--from", "0", "--to", "1", "--time", "5"],
        ["check-commute", "--l1", FREE, "--l2", FREE2, "--times", "1-1"],
        ["check-commute", "--l1", FREE, "--l2", FREE2, "--format", "xml"],
    ],
)
def test_usage_errors_exit_3(argv, capsys):
    assert run(argv) == 3
    captured = capsys.readouterr()
    assert captured.err
    assert captured.out == ""


def test_solver_failure_exit_4(capsys):
    argv = ["action", "--system", HARM, "--from", "0", "--to", "1", "--time", "1", "--tol", "1e-15", "--max-resolution", "400"]
    assert run(argv) == 4
    assert "ResolutionCapExceeded" in capsys.readouterr().err


def test_every_subcommand_has_help(capsys):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    assert set(sub.choices) == set(COMMANDS)
    for name in COMMANDS:
        with pytest.raises(SystemExit) as info:
            parser.parse_args([name, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--tol", "--grid", "--qrange", "--times", "--resolution", "--out", "--format"):
            assert flag in text


def test_reports_are_byte_identical(specs, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["check-commute", "--l1", specs["free"], "--l2", specs["harm"], "--grid", "2", "--times", "0.5:0.5"]
    run([*argv, "--out", str(a)])
    run([*argv, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_text_format(tmp_path):
    out = tmp_path / "r.txt"
    assert run(["check-commute-discrete", "--l1", DQ1, "--l2", DQ2, "--format", "text", "--out", str(out)]) == 0
    assert out.read_text().startswith("verdict: commuting")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "commuting_actions", "action", "--system", FREE, "--from", "0", "--to", "1", "--time", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("action 0.5 ")
