import json
import subprocess
import sys

import numpy as np
import pytest

from deltacorners import cli, sector
from deltacorners.errors import NoConvergence

SQUARE_JSON = {"kind": "polygon", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}


def _csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_model1d_roundtrip(tmp_path):
    out = tmp_path / "m.csv"
    assert cli.run(["model1d", "--L", "1", "--alpha", "0", "--bc", "ND", "--count", "2",
                    "--out", str(out)]) == 0
    header, rows = _csv(out)
    assert header == ["index", "value"]
    assert float(rows[0][1]) == pytest.approx(np.pi ** 2 / 16, rel=1e-12)
    side = json.loads((tmp_path / "m.csv.json").read_text())
    assert side["config"]["bc"] == "ND" and side["columns"] == header
    assert "version" in side and "provenance" in side and "errors" in side
    again = tmp_path / "again.csv"
    assert cli.run(["model1d", "--config", str(tmp_path / "m.csv.json"), "--out", str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"L": 2.0, "alpha": 4.0, "bc": "D"}))
    out = tmp_path / "p.csv"
    assert cli.run(["model1d", "--config", str(cfg), "--L", "3", "--out", str(out)]) == 0
    side = json.loads((tmp_path / "p.csv.json").read_text())
    assert side["config"]["L"] == 3.0 and side["config"]["alpha"] == 4.0
    assert side["config"]["count"] == cli.DEFAULTS["model1d"]["count"]


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    out = tmp_path / "t.csv"
    assert cli.run(["model1d", "--seed", "7", "--out", str(out)]) == 0
    side = json.loads((tmp_path / "t.csv.json").read_text())
    assert side["config"]["threads"] == 3 and side["config"]["seed"] == 7
    assert cli.run(["model1d", "--threads", "1", "--out", str(out)]) == 0
    assert json.loads((tmp_path / "t.csv.json").read_text())["config"]["threads"] == 1


@pytest.mark.parametrize("argv", [
    ["model1d", "--L", "-1"],
    ["model1d", "--bc", "X"],
    ["sector"],
    ["sector", "--theta", "4.0"],
    ["kite", "--theta", "0.7"],
    ["nonres", "--theta", "0.7", "--R", "8,4,16"],
    ["verify", "--curve", json.dumps(SQUARE_JSON), "--alphas", "40,20,80"],
    ["spectrum", "--curve", '{"kind": "blob"}', "--alpha", "5"],
    ["spectrum", "--curve", '{"kind": "polygon", "vertices": [[0,0],[1,0],[2,0],[1,1]]}',
     "--alpha", "5"],
    ["frobnicate"],
])
def test_validation_errors(argv, capsys):
    assert cli.run(argv) == 2


def test_config_for_other_subcommand(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"subcommand": "sector", "theta": [0.5]}))
    assert cli.run(["model1d", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.run(["model1d", "--config", str(cfg)]) == 2


def test_solver_failure_exit(monkeypatch):
    def boom(theta, **kw):
        raise NoConvergence("synthetic")
    monkeypatch.setattr(sector, "cached_sector_data", boom)
    assert cli.run(["sector", "--theta", "0.5"]) == 3


def test_circle_oracle(capsys):
    assert cli.run(["circle-oracle", "--radius", "1", "--alpha", "10", "--mmax", "8"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "index,value"
    assert float(lines[1].split(",")[1]) == pytest.approx(-25.3, abs=0.05)


def test_sector_row(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.run(["sector", "--theta", "0.7853981634", "--tol", "1e-3", "--out", str(out)]) == 0
    header, rows = _csv(out)
    assert header[:3] == ["theta", "kappa", "e1"]
    assert rows[0][1] == "1"
    side = json.loads((tmp_path / "s.csv.json").read_text())
    assert side["provenance"][0]["R_used"] >= 8


def test_spectrum_inline_curve(capsys):
    assert cli.run(["spectrum", "--curve", json.dumps(SQUARE_JSON), "--alpha", "10",
                    "--count", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "index,value,err_est"
    assert float(lines[1].split(",")[1]) < -25


def test_kite_command(tmp_path):
    out = tmp_path / "k.csv"
    assert cli.run(["kite", "--theta", "0.785398", "--R", "10", "--bc", "D", "--count", "2",
                    "--h", "0.2", "--split", "--out", str(out)]) == 0
    _, rows = _csv(out)
    assert len(rows) == 2 and float(rows[0][1]) < -0.25


def test_curve_from_json_kinds():
    assert cli.curve_from_json(SQUARE_JSON).n_corners == 4
    assert cli.curve_from_json({"kind": "circle", "radius": 2.0}).n_corners == 0
    arcs = {"kind": "arcs", "arcs": [
        {"kind": "circular-arc", "start": [1, 0], "end": [-1, 0], "center": [0, 0]},
        {"kind": "segment", "start": [-1, 0], "end": [1, 0]}]}
    assert cli.curve_from_json(arcs).n_corners == 2


def test_verify_failure_exit(monkeypatch, tmp_path):
    monkeypatch.setattr(cli, "verify_checks", lambda rep, curve: [("synthetic", False)])
    monkeypatch.setattr(cli.asymptotics, "compare",
                        lambda *a, **k: cli.asymptotics.ComparisonReport(
                            [1, 2, 3], [], {}, {"K": 0, "levels": [], "failures": []}))
    circ = json.dumps({"kind": "circle"})
    assert cli.run(["verify", "--curve", circ, "--alphas", "1,2,3",
                    "--out", str(tmp_path / "v.csv")]) == 4


def test_verify_square_both(tmp_path):
    curve = tmp_path / "square.json"
    curve.write_text(json.dumps(SQUARE_JSON))
    out = tmp_path / "v.csv"
    code = cli.run(["verify", "--curve", str(curve), "--alphas", "20,40,80",
                    "--backend", "both", "--out", str(out)])
    side = json.loads((tmp_path / "v.csv.json").read_text())
    failed = [n for n, ok in side["provenance"]["checks"] if not ok]
    assert code == 0, failed
    header, rows = _csv(out)
    assert header == list(cli.asymptotics.COLUMNS)
    assert len(rows) == 3 * 8 * 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "deltacorners", "model1d", "--L", "1",
                        "--bc", "ND", "--count", "1"], capture_output=True, text=True)
    assert r.returncode == 0
    assert float(r.stdout.splitlines()[1].split(",")[1]) == pytest.approx(np.pi ** 2 / 16)
    r = subprocess.run([sys.executable, "-m", "deltacorners", "model1d", "--L", "-1"],
                       capture_output=True, text=True)
    assert r.returncode == 2
