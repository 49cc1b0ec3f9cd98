import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conflab.cli import SliceGrid, main, parse_matrix


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def doc_of(capsys, *argv):
    code, out, _ = run_cli(capsys, *argv)
    return code, json.loads(out)


def test_bk_from_matrix(capsys):
    code, doc = doc_of(capsys, "bk", "--at", "2I", "--h", "1")
    assert code == 0
    assert list(doc) == ["version", "config", "checks", "pass", "wall_ms"]
    assert doc["pass"] is True
    assert doc["checks"][0]["value"] == pytest.approx(7.0)
    for c in doc["checks"]:
        assert {"name", "value", "reference", "abs_err", "tol", "pass"} <= set(c)


def test_sigma_of_bubble_and_expression(capsys):
    code, doc = doc_of(capsys, "sigma", "--k", "2", "--x", "0.1,0.2,0.3,0.4")
    assert code == 0 and doc["checks"][0]["value"] == pytest.approx(24.0)
    code, doc = doc_of(capsys, "sigma", "--n", "4", "--expr", "1/(1 + x1^2 + x2^2 + x3^2 + (x4 + 1)^2)", "--x", "0,0,0,1")
    assert code == 0 and doc["checks"][0]["value"] == pytest.approx(24.0)


def test_solve_h_modes(capsys):
    code, doc = doc_of(capsys, "solve-h", "--at", "2I", "--c0", "7")
    assert code == 0 and doc["checks"][0]["value"] == pytest.approx(1.0)
    code, doc = doc_of(capsys, "solve-h", "--at", "2.5I", "--mode", "M", "--c0", "7")
    assert code == 0 and doc["checks"][0]["value"] == pytest.approx(1.0)


def test_no_root_is_exit_3(capsys):
    code, out, err = run_cli(capsys, "solve-h", "--at", "2.5I", "--mode", "M", "--c0", "700")
    assert code == 3
    assert json.loads(out)["error"] == "NoRootError"
    assert "sup B" in err


def test_failing_check_is_exit_1(capsys):
    # u = 1 is flat: sigma_2 is 0, not in the positive cone
    code, doc = doc_of(capsys, "cone", "--n", "4", "--expr", "1", "--x", "0,0,0,1")
    assert code == 1 and doc["pass"] is False
    code, _ = doc_of(capsys, "kelvin-check", "--n", "4", "--expr", "1 + x1^2", "--x", "0,0,0")
    assert code == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["sigma", "--k", "9"],
        ["bk", "--k", "3"],
        ["solve-h", "--at", "2I"],
        ["bogus"],
        ["sigma", "--expr", "x1", "--b", "2"],
        ["lambda-bar", "--grid", '{"shells": 8, "nope": 1}'],
        ["emit-grid", "--axes", "1,1", "--csv", "x.csv"],
        ["emit-grid"],
    ],
)
def test_usage_errors_are_exit_2(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 2 and out == "" and "usage error" in err


def test_parse_error_is_exit_3(capsys):
    code, out, _ = run_cli(capsys, "sigma", "--n", "4", "--expr", "x1 +", "--x", "0,0,0,1")
    assert code == 3 and json.loads(out)["error"] == "ParseError"


def test_deterministic_output(capsys, monkeypatch):
    argv = ["lambda-bar", "--x", "0,0,0"]
    _, a = doc_of(capsys, *argv)
    monkeypatch.setenv("CONFLAB_THREADS", "4")
    _, b = doc_of(capsys, *argv)
    a.pop("wall_ms"), b.pop("wall_ms")
    assert a == b


def test_suite_passes(capsys):
    code, doc = doc_of(capsys, "suite")
    assert code == 0 and doc["pass"]
    assert len(doc["checks"]) > 10


def test_out_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "constraint-report", "--h", "1", "--out", str(path))
    assert code == 0
    assert json.loads(path.read_text()) == json.loads(out)


def test_emit_grid(tmp_path, capsys):
    path = tmp_path / "slice.csv"
    code, doc = doc_of(capsys, "emit-grid", "--quantity", "bk-boundary", "--count", "11", "--csv", str(path))
    assert code == 0 and doc["checks"][0]["value"] == 121
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x1", "x2", "x3", "x4", "value"]
    assert len(rows) == 122
    vals = np.array([float(r[-1]) for r in rows[1:]])
    np.testing.assert_allclose(vals, 20.0, rtol=1e-9)  # h = 2 gives 2^3 + 6*2


def test_emit_grid_unwritable(capsys):
    code, out, _ = run_cli(capsys, "emit-grid", "--csv", "/nonexistent/dir/out.csv")
    assert code == 3 and json.loads(out)["error"] == "DomainError"


def test_slice_grid_order():
    g = SliceGrid((0.0, 0.0, 5.0), (0, 1), -1.0, 1.0, 3)
    pts = g.points()
    assert pts.shape == (9, 3)
    np.testing.assert_array_equal(pts[:3, 0], [-1.0, -1.0, -1.0])
    np.testing.assert_array_equal(pts[:3, 1], [-1.0, 0.0, 1.0])
    assert np.all(pts[:, 2] == 5.0)


def test_parse_matrix():
    np.testing.assert_array_equal(parse_matrix("2I", 3), 2 * np.eye(3))
    np.testing.assert_array_equal(parse_matrix("1,2,3", 2), [[1, 2], [2, 3]])


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "conflab.cli", "bk", "--at", "2I", "--h", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["pass"] is True
