import csv
import io
import json
import math
import subprocess
import sys

import jsonschema
import pytest

from zetaderiv import cli
from zetaderiv.errors import DomainError


def run(args, capsys, env=None):
    code = cli.run(args, env=env or {})
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(args, capsys, env=None):
    code, out, err = run(args, capsys, env)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, cli.JSON_SCHEMA)
    return doc


def read_csv(text):
    assert "\r" not in text
    return list(csv.DictReader(io.StringIO(text)))


def test_psi(capsys):
    doc = run_json(["psi", "100", "5"], capsys)
    assert doc["result"]["psi"] == 34
    assert doc["schema_version"] == 1


def test_rho_default_file(tmp_path, capsys):
    path = tmp_path / "rho.csv"
    code, _, _ = run(["rho", "--out", str(path), "--format", "csv"], capsys)
    assert code == 0
    rows = read_csv(path.read_text())
    assert list(rows[0]) == ["schema_version", "u", "rho", "log_rho"]
    one = [r for r in rows if float(r["u"]) == 1.0][0]
    assert float(one["rho"]) == 1.0


def test_rho_step_halving(capsys):
    a = run_json(["rho", "--u-max", "6", "--step", str(1 / 1024)], capsys)["result"]
    b = run_json(["rho", "--u-max", "6", "--step", str(1 / 2048)], capsys)["result"]
    diff = max(abs(x - y) for x, y in zip(a["rho"], b["rho"][::2]))
    assert diff < 1e-8


def test_rho_capacity_exit(capsys):
    code, _, err = run(["rho", "--u-max", "300"], capsys)
    assert code == cli.EXIT_CAPACITY and "capacity" in err


def test_constants(capsys):
    doc = run_json(["constants", "--ell-max", "3", "--A-list", "0,0.5,1"], capsys)
    rows = doc["result"]["rows"]
    first = rows[0]
    assert first["ell"] == 0 and first["A"] == 0
    for key in ("Y", "C", "D"):
        assert first[key] == pytest.approx(1.781072, abs=1e-6)
    assert all(r["D"] <= r["C"] for r in rows)


def test_constants_large_weight_finite(capsys):
    code, out, _ = run(["constants", "--ell-max", "5", "--A-list", "2"], capsys)
    if code == 0:
        rows = json.loads(out)["result"]["rows"]
        assert all(r["C"] is not None and math.isfinite(r["C"]) for r in rows)
    else:
        assert code == cli.EXIT_CAPACITY


def test_certificate_override(capsys):
    doc = run_json(["certificate", "--target", "zeta-subone", "--T", "1e6", "--y", "3", "--b", "2",
                    "--sigma", "1", "--ell", "0"], capsys)
    assert doc["result"]["certificate_value"] == pytest.approx(35 / 24, rel=1e-15)
    assert doc["result"]["predicted_envelope"] is None


def test_certificate_needs_both_overrides(capsys):
    code, _, _ = run(["certificate", "--T", "1e6", "--y", "3"], capsys)
    assert code == cli.EXIT_USAGE


def test_scan_grid_step_gate(capsys):
    code, _, err = run(["scan-zeta", "--T", "1e3", "--N", "100", "--sigma", "1", "--grid-step", "1"], capsys)
    assert code == cli.EXIT_USAGE and "grid_step" in err


def test_scan_sigma_or_a(capsys):
    code, _, _ = run(["scan-zeta", "--T", "1e3", "--N", "100", "--sigma", "1", "--A", "0.5"], capsys)
    assert code == cli.EXIT_USAGE
    code, _, _ = run(["scan-zeta", "--T", "1e3", "--N", "100"], capsys)
    assert code == cli.EXIT_USAGE


def test_scan_byte_identical_across_threads(tmp_path, capsys):
    outputs = []
    for threads in ("1", "4"):
        path = tmp_path / f"scan{threads}.json"
        args = ["scan-zeta", "--T", "2000", "--N", "2000", "--A", "0.5", "--ell", "1",
                "--threads", threads, "--out", str(path)]
        assert run(args, capsys)[0] == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    doc = json.loads(outputs[0])
    jsonschema.validate(doc, cli.JSON_SCHEMA)
    assert 2000 <= doc["result"]["t_star"] <= 4000


def test_scan_csv(capsys):
    code, out, _ = run(["scan-zeta", "--T", "1000", "--N", "500", "--sigma", "1", "--format", "csv"], capsys)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 1 and rows[0]["envelope_subone"] == "nan"


def test_scan_l_and_resonance_char(capsys):
    doc = run_json(["scan-l", "--q", "4", "--N", "1000"], capsys)
    assert doc["result"]["chi_index"] == 1
    doc = run_json(["resonance-char", "--q", "11", "--ell", "1", "--sigma", "0.9"], capsys)
    r = doc["result"]
    assert r["validity"]["finite_inequality"] and r["validity"]["orthogonality"]


def test_friable(capsys):
    doc = run_json(["friable", "100", "5", "0"], capsys)
    assert doc["result"]["abs_difference"] == 66


def test_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nx = 100\ny = 5\n")
    doc = run_json(["psi", "--config", str(cfg)], capsys)
    assert doc["result"]["psi"] == 34
    doc = run_json(["psi", "--config", str(cfg)], capsys, env={"ZX_Y": "7", "ZX_UNRELATED": "1"})
    assert doc["result"]["y"] == 7
    doc = run_json(["psi", "--config", str(cfg), "--x", "50"], capsys, env={"ZX_Y": "7", "ZX_X": "60"})
    assert doc["result"]["x"] == 50 and doc["result"]["y"] == 7


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("x = 100\ny = 5\nbogus = 1\n")
    code, _, err = run(["psi", "--config", str(cfg)], capsys)
    assert code == cli.EXIT_USAGE and "bogus" in err


def test_unwritable_output_checked_first(tmp_path, capsys, monkeypatch):
    called = []
    monkeypatch.setitem(cli.HANDLERS, "psi", lambda p: called.append(1))
    code, _, _ = run(["psi", "100", "5", "--out", str(tmp_path / "missing" / "x.json")], capsys)
    assert code == cli.EXIT_USAGE and not called


def test_domain_error_exit(capsys, monkeypatch):
    def boom(p):
        raise DomainError("outside")

    monkeypatch.setitem(cli.HANDLERS, "psi", boom)
    assert run(["psi", "100", "5"], capsys)[0] == cli.EXIT_DOMAIN


def test_usage_errors(capsys):
    assert run([], capsys)[0] == cli.EXIT_USAGE
    assert run(["nope"], capsys)[0] == cli.EXIT_USAGE
    assert run(["psi", "100"], capsys)[0] == cli.EXIT_USAGE
    assert run(["psi", "100", "5", "--format", "xml"], capsys)[0] == cli.EXIT_USAGE
    assert run(["psi", "abc", "5"], capsys)[0] == cli.EXIT_USAGE


def test_json_number_format():
    text = cli.to_json({"a": 0.1, "b": math.nan, "c": [1.0 / 3, math.inf], "d": True})
    doc = json.loads(text)
    assert doc["a"] == 0.1 and doc["b"] is None and doc["c"][1] is None
    assert "0.33333333333333331" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "zetaderiv", "psi", "100", "5", "--format", "csv"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines() == ["schema_version,x,y,psi", "1,100,5,34"]
