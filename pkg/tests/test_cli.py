import json
import os
import subprocess
import sys

import pytest

from heisenlat import cli


def run(args, **kw):
    return subprocess.run([sys.executable, "-m", "heisenlat", *args], capture_output=True, text=True, **kw)


def test_count_json(capsys):
    assert cli.run(["count", "--q", "3", "--x", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == 1
    assert doc["config"]["q"] == 3 and "threads" not in doc["config"]
    assert "bprocess" in doc["budgets"]
    row = doc["results"][0]
    assert row["count"] == 15
    assert row["main"] == pytest.approx(6.0880681896251527, rel=1e-16)
    assert row["err"] == pytest.approx(8.9119318103748473, rel=1e-16)


def test_floats_have_17_digits(capsys):
    cli.run(["count", "--x", "1"])
    assert '"main": 6.0880681896251527' in capsys.readouterr().out


def test_unknown_flag_exit_2():
    p = run(["count", "--bogus"])
    assert p.returncode == 2
    assert "usage:" in p.stderr


def test_missing_subcommand_exit_2():
    assert run([]).returncode == 2


def test_bad_values_exit_2(capsys):
    assert cli.run(["count", "--q", "2", "--x", "1"]) == 2
    assert cli.run(["mean-square", "--X", "4", "3"]) == 2
    assert cli.run(["approx", "--mode", "bound", "--x4", "1"]) == 2
    assert cli.run(["series", "--format", "csv"]) == 2


def test_computation_failure_exit_1(monkeypatch, capsys):
    from heisenlat import moments
    from heisenlat.errors import CapacityError

    def boom(q, tol):
        raise CapacityError("table budget exceeded")

    monkeypatch.setattr(moments, "singular_series", boom)
    assert cli.run(["series"]) == 1
    assert "computation failed" in capsys.readouterr().err
    assert cli.run(["series", "--tol", "-1"]) == 2


def test_scan_csv(tmp_path):
    out = tmp_path / "scan.csv"
    assert cli.run(["scan", "--q", "3", "--x4-max", "20", "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# schema: 1"
    assert lines[1].startswith("# config: ") and lines[2].startswith("# budgets: ")
    assert lines[3] == "q,x,count,main,err,err_over_x_pow"
    assert len(lines) == 4 + 20
    q, x, count, main, err, ratio = lines[4].split(",")
    assert (q, count) == ("3", "15")
    assert float(ratio) == pytest.approx(float(err) / float(x) ** (6 - 2 / 3))
    assert os.listdir(tmp_path) == ["scan.csv"]


def test_output_independent_of_threads(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.run(["mean-square", "--X", "2", "3", "--threads", "1", "--out", str(a)])
    cli.run(["mean-square", "--X", "2", "3", "--threads", "5", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_threads_env_default(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "6")
    assert cli.build_parser().parse_args(["count", "--x", "1"]).threads == 6


def test_other_subcommands(tmp_path, capsys):
    assert cli.run(["vaaler", "--H", "3", "10", "--n", "500", "--seed", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["violations"] for r in doc["results"]] == [0, 0]
    assert cli.run(["bprocess", "--x", "20", "--d-max", "2", "--h-max", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["max_normalized"] < 1
    assert cli.run(["approx", "--x", "20"]) == 0
    assert json.loads(capsys.readouterr().out)["results"][0]["H"] == 200
    assert cli.run(["omega", "--P", "1", "--X-cap", "1000"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["results"][0]["D0"] == 23


def test_verify_fast_reports_each_criterion():
    p = run(["verify", "--q", "3", "--fast"])
    lines = [ln for ln in p.stderr.splitlines() if ln.startswith(("PASS", "FAIL"))]
    assert len(lines) == 8
    doc = json.loads(p.stdout)
    failed = [r["criterion"] for r in doc["results"] if not r["passed"]]
    # the literal vol = pi^4/32 clause of criterion 3 is false (vol = pi^4/16)
    assert failed == [3]
    assert p.returncode == 1
