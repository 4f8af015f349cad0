import json
import subprocess
import sys

import pytest

from canhk import cli, geometry


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_coeffs_csv(capsys):
    code, out, _ = run(capsys, "coeffs", "--n", "4")
    assert code == 0
    assert out.splitlines() == ["p,numerator,denominator", "1,1,1", "2,-1,5", "3,2,35", "4,-3,175"]


def test_coeffs_to_file(tmp_path, capsys):
    path = tmp_path / "f.csv"
    code, out, _ = run(capsys, "coeffs", "--n", "16", "--out", str(path))
    assert code == 0 and out == ""
    assert len(path.read_text().splitlines()) == 17


@pytest.mark.parametrize("argv", [["coeffs", "--n", "0"], ["nope"], [], ["verify-weil", "--model", "sphere"],
                                  ["verify-weil", "--c", "x/y"], ["verify-weil", "--n", "0"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == cli.EXIT_USAGE
    assert "usage error" in err


def test_verify_weil_pass(capsys):
    code, out, _ = run(capsys, "verify-weil", "--model", "cpn", "--n", "2", "--c", "3/2", "--order", "8")
    rep = json.loads(out)
    assert code == 0 and rep["status"] == "pass"
    assert rep["config"]["c"] == 1.5
    assert max(rep["recursion"]["d_square"].values()) < 1e-10


def test_verify_weil_corrupted_model(tmp_path, capsys):
    m = geometry.cpn(1, 2.0)
    bad = geometry.KahlerModel(1, m.h, m.R + 0.5j, "custom", 2.0)
    path = tmp_path / "model.json"
    path.write_text(json.dumps(bad.to_json()))
    code, out, _ = run(capsys, "verify-weil", "--model-file", str(path), "--order", "4")
    rep = json.loads(out)
    assert code == cli.EXIT_FAIL
    assert "model:pair_reality" in rep["failures"]


def test_verify_structure_selects(capsys):
    code, out, _ = run(capsys, "verify-structure", "--model", "cpn", "--n", "1", "--points", "30")
    rep = json.loads(out)
    assert code == 0
    assert rep["selection"]["variant"] == "1pf" and rep["selection"]["slot"] == "a"
    assert rep["checks"]["quaternion_max"] < 1e-12


def test_forced_f_on_flat_reports_singularity(capsys):
    code, out, err = run(capsys, "verify-structure", "--model", "flat", "--variant", "f", "--slot", "a")
    assert code == cli.EXIT_FAIL
    assert json.loads(out)["status"] == "singular"
    assert "singular" in err


def test_forced_wrong_slot_fails(capsys):
    code, out, err = run(capsys, "verify-structure", "--model", "cpn", "--variant", "1pf", "--slot", "b")
    assert code == cli.EXIT_FAIL
    assert "Nijenhuis" in err


def test_config_file_and_override(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "chn", "n": 2, "c": -1.0, "order": 4}))
    monkeypatch.setenv("CANHK_CONFIG", str(cfg))
    code, out, _ = run(capsys, "verify-weil", "--order", "6")
    rep = json.loads(out)
    assert code == 0
    assert rep["config"]["model"] == "chn" and rep["config"]["order"] == 6
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, _ = run(capsys, "verify-weil")
    assert code == cli.EXIT_USAGE


def test_thresholds_from_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"thresholds": {"sigma": -1.0}}))
    code, out, _ = run(capsys, "verify-weil", "--config", str(cfg), "--order", "4")
    assert code == cli.EXIT_FAIL
    assert any(f.startswith("sigma_D") for f in json.loads(out)["failures"])


def test_reports_deterministic(capsys):
    outs = [run(capsys, "verify-structure", "--model", "cpn", "--seed", "3", "--points", "10")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "canhk", "coeffs", "--n", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.splitlines()[-1] == "2,-1,5"


@pytest.mark.parametrize("cmd", ["verify-weil", "verify-structure"])
def test_curvature_sign_checked(capsys, cmd):
    code, _, err = run(capsys, cmd, "--model", "chn", "--c", "1")
    assert code == cli.EXIT_USAGE and "usage error" in err
