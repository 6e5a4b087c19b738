import io
import json
import subprocess
import sys

import pytest

from sphereppw.cli import parse_corners, parse_grid, run
from sphereppw.mesh import make_domain


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ball_hemisphere(capsys):
    code, out, _ = call(capsys, "ball", "--n", "3", "--theta1", "1.5707963267948966")
    data = json.loads(out)
    assert code == 0 and data["schema"] == 1
    assert data["lambda1"] == pytest.approx(3.0, rel=1e-12)
    assert data["checks"]["regime"] == "hemisphere"


def test_output_is_deterministic(capsys):
    first = call(capsys, "ball", "--n", "2", "--theta1", "0.9")[1]
    second = call(capsys, "ball", "--n", "2", "--theta1", "0.9")[1]
    assert first == second


def test_usage_errors_exit_2(capsys):
    for argv in (["ball", "--n", "1", "--theta1", "1"], ["ball", "--n", "2", "--theta1", "4"],
                 ["scan", "--n", "2", "--grid", "1:0.5:3"], ["nonsense"]):
        with pytest.raises(SystemExit) as info:
            run(argv)
        assert info.value.code == 2
    capsys.readouterr()


def test_numerical_errors_exit_2(capsys):
    code, _, err = call(capsys, "profile", "--n", "2", "--theta1", "2.0")
    assert code == 2 and "ValueError" in err
    code, _, err = call(capsys, "chiti", "--kind", "geodesic_polygon")
    assert code == 2 and "--corners" in err


def test_check_failure_exits_1(capsys):
    code, out, _ = call(capsys, "perturb", "--n", "2", "--theta1", "1.0", "--tol", "1e-15")
    assert code == 1
    assert json.loads(out)["checks"]["lambda1_decreasing"]


def test_scan_csv(capsys):
    code, out, _ = call(capsys, "scan", "--n", "2", "--grid", "0.3:1.2:4", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 5 and lines[0].startswith("theta1,lambda1")


def test_profile_json(capsys):
    code, out, _ = call(capsys, "profile", "--n", "2", "--theta1", "1.0", "--points", "201")
    data = json.loads(out)
    assert code == 0 and data["passed"]


def test_rearrange_from_stdin(capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("value,measure\n1,0.5\n3,0.25\n1,0.25\n"))
    code, out, _ = call(capsys, "rearrange", "--input", "-")
    assert code == 0
    assert out.splitlines() == ["s,value", "0,3", "0.25,1", "1,1"]


def test_rearrange_mesh_and_out_file(capsys, tmp_path):
    mesh_file = tmp_path / "cap.txt"
    mesh_file.write_text(make_domain("cap", 0.1, theta1=0.8).to_text())
    target = tmp_path / "iso.json"
    code, out, _ = call(capsys, "rearrange", "--mesh", str(mesh_file), "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["defect"] > -1e-10


def test_chiti_ball(capsys):
    code, out, _ = call(capsys, "chiti", "--kind", "ball", "--n", "2", "--theta1", "1.0")
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "identical"


def test_domain_and_ppw(capsys):
    code, out, _ = call(capsys, "domain", "--kind", "perturbed_cap", "--h", "0.08")
    data = json.loads(out)
    assert code == 0 and data["bound"] >= data["lambda2"]
    code, out, _ = call(capsys, "ppw", "--kind", "perturbed_cap", "--h", "0.08")
    verdicts = json.loads(out)["verdicts"]
    assert code == 0 and verdicts["gap_vs_equal_lambda1_cap"]["verdict"] == "strict"


def test_ppw_refuses_mesh_file(capsys, tmp_path):
    mesh_file = tmp_path / "cap.txt"
    mesh_file.write_text(make_domain("cap", 0.1, theta1=0.8).to_text())
    code, _, err = call(capsys, "ppw", "--mesh", str(mesh_file))
    assert code == 2 and "generated domain" in err


def test_verify_all_subset(capsys):
    code, out, err = call(capsys, "verify-all", "--criteria", "1", "2")
    data = json.loads(out)
    assert code == 0 and data["passed"] and len(data["criteria"]) == 2
    assert "[PASS] criterion  1" in err


def test_parsers():
    assert parse_grid("0.1:0.5:5").tolist() == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    assert parse_corners("0.5,0;0.5,2;0.5,4").shape == (3, 3)


def test_console_script_survives_closed_pipe():
    proc = subprocess.run("sphereppw scan --n 2 --grid 0.2:1.2:30 --format csv | head -n 1",
                          shell=True, capture_output=True, text=True)
    assert proc.stdout.strip().startswith("theta1")
    assert "Traceback" not in proc.stderr
