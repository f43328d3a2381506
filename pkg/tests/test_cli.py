import json
import math
import subprocess
import sys

import pytest

from adx.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, config_hash, format_csv, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_json(capsys):
    code, out, _ = run(capsys, "constants", "--m", "2", "--n", "4")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["result"]["beta0"] == pytest.approx(32 * math.pi**2, rel=1e-14)
    assert doc["config_hash"] == config_hash(doc["config"])
    assert {"numpy", "scipy", "adx"} <= set(doc["versions"])


def test_evaluate_zero(capsys):
    code, out, _ = run(capsys, "evaluate", "--seed", "zero", "--beta", "10", "--points", "256")
    assert code == EXIT_OK
    assert json.loads(out)["result"]["value"] == 0.0


def test_config_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta_rel": 0.5, "alpha": 0.2, "grid": {"points": 300}}))
    code, out, _ = run(capsys, "evaluate", "--config", str(cfg), "--gamma", "0.1")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["config"]["beta_rel"] == 0.5 and doc["config"]["gamma"] == 0.1
    assert doc["config"]["grid"]["points"] == 300 and doc["grid"]["points"] == 300
    again = tmp_path / "again.json"
    again.write_text(json.dumps(doc["config"]))
    _, out2, _ = run(capsys, "evaluate", "--config", str(again))
    assert json.loads(out2)["result"] == doc["result"]


def test_csv_deterministic(tmp_path, capsys):
    paths = [tmp_path / f"v{i}.csv" for i in range(2)]
    for path in paths:
        code, _, _ = run(capsys, "vanishing", "--alpha", "0.3", "--beta-rel", "1", "--curve",
                         "--steps", "5", "--out", str(path))
        assert code == EXIT_OK
    a, b = (p.read_bytes() for p in paths)
    assert a == b
    lines = a.decode().splitlines()
    assert lines[0] == "t,h,f,g" and len(lines) == 6
    assert "e+00" in lines[1]


def test_profile_roundtrip(tmp_path, capsys):
    prof = tmp_path / "psi.csv"
    code, out, _ = run(capsys, "testfn", "--kind", "moser", "--log-lambda", "3", "--profile", str(prof))
    assert code == EXIT_OK and json.loads(out)["result"]["kind"] == "moser"
    code, out, _ = run(capsys, "evaluate", "--input", str(prof), "--beta", "50")
    assert code == EXIT_OK and json.loads(out)["result"]["value"] > 0


def test_dtf_command(capsys):
    code, out, _ = run(capsys, "dtf", "--alpha", "0.3", "--gamma", "0.2", "--count", "3", "--points", "400")
    res = json.loads(out)["result"]
    assert code == EXIT_OK and res["all_negative"] and len(res["rows"]) == 3


def test_format_csv():
    text = format_csv(["a", "b"], [[1.0, "x"]])
    assert text == "a,b\n1.00000000000000000e+00,x\n"


def test_config_error_exit(capsys):
    code, _, err = run(capsys, "evaluate", "--beta", "1", "--alpha", "1.5")
    assert code == EXIT_CONFIG
    assert json.loads(err)["error"]


def test_missing_beta_for_maximize(capsys):
    code, _, err = run(capsys, "maximize")
    assert code == EXIT_CONFIG and "beta" in json.loads(err)["message"]


def test_bad_json_config(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run(capsys, "constants", "--config", str(cfg))[0] == EXIT_CONFIG


def test_io_error_exit(capsys):
    assert run(capsys, "constants", "--config", "/nonexistent/cfg.json")[0] == EXIT_IO
    assert run(capsys, "constants", "--out", "/nonexistent/dir/out.json")[0] == EXIT_IO


def test_argparse_error_exit(capsys):
    assert run(capsys, "no-such-command")[0] == EXIT_CONFIG


def test_verify_all_only(capsys):
    code, out, _ = run(capsys, "verify-all", "--quick", "--only", "1,2")
    lines = out.strip().splitlines()
    assert code == EXIT_OK
    assert lines[0].startswith("[PASS] criterion  1")
    assert lines[1].startswith("[PASS] criterion  2")
    assert lines[-1] == "2/2 criteria passed"


def test_verify_all_bad_id(capsys):
    assert run(capsys, "verify-all", "--only", "11")[0] == EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "adx", "constants"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "constants"
