import csv
import io
import json
import subprocess
import sys

import pytest

from ulampoly.cli import OUT_DIR_ENV, RunConfig, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_enumerate_json(capsys):
    code, out, _ = run(capsys, "enumerate", "--n", "3")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and doc["ok"]
    assert doc["solution_set"]["record_count"] == 6


def test_output_is_byte_identical(capsys):
    _, a, _ = run(capsys, "enumerate", "--n", "4", "--seed", "3")
    _, b, _ = run(capsys, "enumerate", "--n", "4", "--seed", "3")
    assert a == b
    assert list(json.loads(a)) == sorted(json.loads(a))


def test_enumerate_csv(capsys):
    code, out, _ = run(capsys, "enumerate", "--n", "2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 2
    assert float(rows[1]["re_2"]) == -2.0


def test_enumerate_tracking_failure(capsys, monkeypatch):
    from ulampoly import cli
    from ulampoly.homotopy import TrackingError

    def boom(*a, **k):
        raise TrackingError("forced")
    monkeypatch.setattr(cli, "solve_system", boom)
    code, out, _ = run(capsys, "enumerate", "--n", "3")
    assert code == 2 and json.loads(out)["error"] == "forced"


def test_count(capsys):
    code, out, err = run(capsys, "count", "--n", "4")
    doc = json.loads(out)
    assert code == 0
    assert doc["counts"] == {"n": 4, "u_n": 23, "v_tilde": 18, "v_zero": 6, "intersection": 1,
                             "direct_full": 23}
    assert "match" in err


def test_count_csv(capsys):
    code, out, _ = run(capsys, "count", "--n", "3", "--format", "csv")
    assert code == 0 and out.splitlines()[1] == "3,6,4,2,0,6"


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--n", "5")
    doc = json.loads(out)
    assert code == 0
    assert doc["verification"]["stein_property"] is True
    assert doc["verification"]["record_count"] == 119


def test_verify_fails_with_tiny_tolerance(capsys):
    code, _, _ = run(capsys, "verify", "--n", "3", "--tol-residual", "1e-30")
    assert code == 1


def test_eigencheck(capsys):
    code, out, _ = run(capsys, "eigencheck")
    doc = json.loads(out)
    assert code == 0 and doc["rigidity"]["unexpected_zero_count"] == 0
    assert doc["trivial_family_residual"] <= 1e-12


def test_flow_writes_files(capsys, tmp_path):
    target = tmp_path / "flow.json"
    code, out, _ = run(capsys, "flow", "--n", "2", "--point", "1", "--radius", "0.05",
                       "--T", "20", "--out", str(target))
    assert code == 0
    doc = json.loads((tmp_path / "flow_stability.json").read_text())
    assert doc == json.loads(out)
    assert doc["stability"]["converged"] == 20
    lines = (tmp_path / "flow_trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,re_1")


def test_flow_inadmissible(capsys, tmp_path):
    # record 5 of N=3 is (1, -1, -1)
    code, _, err = run(capsys, "flow", "--n", "3", "--point", "5", "--out", str(tmp_path / "x.json"))
    assert code == 3 and "inadmissible" in err
    code, _, _ = run(capsys, "flow", "--n", "3", "--point", "99", "--out", str(tmp_path / "y.json"))
    assert code == 3


def test_report_markdown(capsys):
    code, out, _ = run(capsys, "report", "--tilde", "--intersections", "--format", "md")
    assert code == 0
    assert "| 5 | 119 | 119 | 119 | 96 | 0 |" in out
    assert "| 4 | 23 | 23 | 23 | 18 | 1 |" in out


def test_report_json(capsys):
    code, out, _ = run(capsys, "report", "--intersections", "--max-n", "4")
    doc = json.loads(out)
    assert code == 0 and all(doc["checks"].values())
    assert doc["table"] == {"u_n": [1, 2, 6, 23], "intersection": [None, 0, 0, 1]}


def test_out_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path))
    code, out, _ = run(capsys, "enumerate", "--n", "2", "--seed", "7")
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "enumerate_n2_seed7.json").read_text())["config"]["seed"] == 7


def test_explicit_out_file(capsys, tmp_path):
    target = tmp_path / "sub" / "c.json"
    run(capsys, "count", "--n", "2", "--out", str(target))
    assert json.loads(target.read_text())["counts"]["u_n"] == 2


def test_bad_arguments(capsys):
    assert main(["enumerate", "--n", "0"]) == 3
    with pytest.raises(SystemExit):
        build_parser().parse_args(["enumerate", "--n", "2", "--tol-cluster", "-1"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["report", "--format", "csv"])
    with pytest.raises(ValueError):
        RunConfig(command="x", tolerances={"residual": 0.0})


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ulampoly", "--version"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("ulampoly ")
