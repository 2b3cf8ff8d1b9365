import re

import pytest

from rwre import __version__
from rwre.cli import ConfigError, load_config, logfmt, main

LAW = """
[law]
jumps = (0,1) (1,-1) (-2,0)
weights = {weights}
"""


def write(tmp_path, experiment, section="", weights="2 2 1", run=""):
    text = f"[run]\nexperiment = {experiment}\n{run}\n" + LAW.format(weights=weights) + section
    p = tmp_path / f"{experiment}.ini"
    p.write_text(text)
    return p


CYL = "\n[{name}]\nu = 2,1\nN = 4\nL = 10\n"


def summary(capsys):
    return capsys.readouterr().out.strip()


def test_drift_summary(tmp_path, capsys):
    cfg = write(tmp_path, "drift", run="trials = 2000")
    assert main(["--config", str(cfg), "--seed", "3"]) == 0
    line = summary(capsys)
    assert 'drift="[0/1, 0/1]"' in line
    assert f"version={__version__}" in line and "seed=3" in line
    assert re.search(r"config_digest=[0-9a-f]{16}", line)


def test_cylinder_audit(tmp_path, capsys):
    cfg = write(tmp_path, "cylinder-audit", CYL.format(name="cylinder-audit"))
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out), "--emit-dot", "--per-trial"]) == 0
    line = summary(capsys)
    assert "divergence_max=0/1" in line and "class_sums_equal=true" in line
    assert (out / "summary.logfmt").read_text().strip() == line
    assert (out / "graph.dot").read_text().startswith("digraph")
    first = (out / "trials.ndjson").read_text().splitlines()[0]
    assert '"config_digest"' in first and '"version"' in first and '"seed"' in first


def test_cylinder_audit_drifted_reports_difference(tmp_path, capsys):
    cfg = write(tmp_path, "cylinder-audit", CYL.format(name="cylinder-audit"), weights="1 1 1")
    assert main(["--config", str(cfg)]) == 0
    line = summary(capsys)
    assert "sum_2c_minus_2a=-8/1" in line and "drift_dot_u=-2/3" in line


def test_loop_reversal_record(tmp_path, capsys):
    cfg = write(tmp_path, "loop-reversal", CYL.format(name="loop-reversal"))
    assert main(["--config", str(cfg), "--trials", "20000", "--seed", "1"]) == 0
    line = summary(capsys)
    assert "exact[M]=0.5" in line
    emp = float(re.search(r"empirical\[M\]=(\S+)", line).group(1))
    se = float(re.search(r"std_error\[M\]=(\S+)", line).group(1))
    assert abs(emp - 0.5) <= 4 * se


def test_per_trial_output_is_reproducible(tmp_path, capsys):
    cfg = write(tmp_path, "erasure-check", run="trials = 300")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(a), "--per-trial", "--seed", "5"]) == 0
    assert main(["--config", str(cfg), "--out", str(b), "--per-trial", "--seed", "5", "--workers", "2"]) == 0
    assert (a / "trials.ndjson").read_bytes() == (b / "trials.ndjson").read_bytes()


def test_seed_precedence(tmp_path):
    text = write(tmp_path, "c3-check", run="seed = 11").read_text()
    assert load_config(text, env={"RWRE_SEED": "99"}).seed == 11
    assert load_config(text, seed=4, env={"RWRE_SEED": "99"}).seed == 4
    bare = write(tmp_path, "c3-check").read_text()
    assert load_config(bare, env={"RWRE_SEED": "99"}).seed == 99
    assert load_config(bare, env={}).seed == 0


@pytest.mark.parametrize(
    "text, line",
    [
        ("[run]\nexperiment = drift\n\n[law]\njumps = (0,1) (1,-1) (-2,0)\nweights = 2 x 1\n", 6),
        ("[run]\nexperiment = nope\n[law]\njumps = (1,0)\nweights = 1\n", 2),
        ("[run]\nexperiment = drift\ntrials = -5\n[law]\njumps = (1,0)\nweights = 1\n", 3),
        ("[run]\nexperiment = drift\n[law]\njumps = (1,0) (1,0)\nweights = 1 1\n", 3),
        ("[run]\nexperiment = drift\n[law]\njumps = (1,0)\nweights = 1/0\n", 5),
        ("experiment = drift\n", 1),
        ("[run]\nexperiment = drift\nexperiment = drift\n", 3),
    ],
)
def test_validation_errors_are_line_anchored(text, line):
    with pytest.raises(ConfigError) as e:
        load_config(text, "bad.ini", env={})
    assert e.value.line == line
    assert str(e.value).startswith(f"bad.ini:{line}:")


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "transience", "\n[transience]\ndirection = 1\n")
    assert main(["--config", str(cfg)]) == 2
    assert "direction needs 2 components" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.ini")]) == 2
    cyl = write(tmp_path, "cylinder-audit", "\n[cylinder-audit]\nu = 2,1\nN = 1\nL = 10\n")
    assert main(["--config", str(cyl)]) == 2


def test_unsupported_parameters_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "ineq-804", CYL.format(name="ineq-804"), weights="1 1 1")
    assert main(["--config", str(cfg), "--trials", "10"]) == 2
    assert "zero drift" in capsys.readouterr().err


def test_property_failure_exit_code(tmp_path, capsys, monkeypatch):
    from rwre import cli

    monkeypatch.setitem(cli.RUNNERS, "c3-check", lambda cfg, workers: cli.Outcome({"x": 1}, ok=False))
    cfg = write(tmp_path, "c3-check")
    assert main(["--config", str(cfg)]) == 3
    assert "status=property_failed" in summary(capsys)


def test_two_walk_and_transience_run(tmp_path, capsys):
    tw = write(tmp_path, "two-walk", "\n[two-walk]\ndirection = 1,0\nL = 3\nz_L = 6,0\n", run="trials = 200\nhorizon = 2000")
    assert main(["--config", str(tw)]) == 0
    assert "violations=0" in summary(capsys)
    tr = write(tmp_path, "transience", "\n[transience]\ndirection = -1,0\nb = 5\n", weights="1 1 1", run="trials = 200")
    assert main(["--config", str(tr)]) == 0
    assert "proxy=strict" in summary(capsys)


def test_logfmt_quoting():
    assert logfmt({"a": "x y", "b": True, "c": 'q"'}) == 'a="x y" b=true c="q\\""'
