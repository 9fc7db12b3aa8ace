import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from hlcone.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spectrum_table(capsys):
    code, out, _ = run_cli(["spectrum", "--m", "3..13", "--lambda", "linear"], capsys)
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "m,lambda,multiplicity"
    for row in rows[1:]:
        m, lam, mult = (int(v) for v in row.split(","))
        assert lam == m - 1 and mult == 2 * m


def test_spectrum_values(capsys):
    code, out, _ = run_cli(["spectrum", "--m", "8", "--lambda", "16"], capsys)
    assert code == 0 and out.splitlines()[1] == "8,16,126"
    code, out, _ = run_cli(["spectrum", "--m", "3", "--lambda", "1"], capsys)
    assert code == 0 and out.splitlines()[1] == "3,1,0"


def test_spectrum_rigidity_json(capsys):
    code, out, _ = run_cli(["spectrum", "--m", "9", "--lambda", "quadratic", "--rigidity"], capsys)
    assert code == 0
    payload = json.loads(out.split("\n", 2)[2])
    assert payload[0]["excess"] == 168 and payload[0]["rigid"] is False


def test_spectrum_usage_error(capsys):
    code, _, err = run_cli(["spectrum", "--m", "abc", "--lambda", "1"], capsys)
    assert code == 2


def test_print_config(capsys):
    code, out, _ = run_cli(["simulate", "--print-config"], capsys)
    assert code == 0
    cfg = json.loads(out)
    assert cfg["theta"] == 0.3 and cfg["b"] == 8 and cfg["C_underline"] == 100.0


def test_simulate_missing_scenario(capsys):
    code, _, err = run_cli(["simulate", "--out-dir", "/tmp/none"], capsys)
    assert code == 2


def test_simulate_nonrigid_exit4(tmp_path, capsys):
    scen = tmp_path / "m8.toml"
    scen.write_text("[model]\nk = 1\nm = 8\n\n[potential]\nmodes = []\n")
    code, _, err = run_cli(["simulate", "--scenario", str(scen), "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 4
    assert "not rigid" in err


def test_simulate_regime_exit3(tmp_path, capsys):
    scen = tmp_path / "big.toml"
    scen.write_text(
        "[model]\nk = 1\nm = 3\n\n[potential]\namplitude = 0.5\n"
        'modes = [{ nu = [1, -1], parity = "cos", h = { "1" = 1.0 }, coeff = 1.0 }]\n'
    )
    code, _, err = run_cli(["simulate", "--scenario", str(scen), "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 3
    assert "regime" in err


def test_simulate_zero_scenario(tmp_path, capsys):
    out_dir = tmp_path / "zero"
    code, out, _ = run_cli(
        ["simulate", "--scenario", str(SCENARIOS / "zero.toml"), "--out-dir", str(out_dir)], capsys
    )
    assert code == 0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["cases"] == ["case1"] * 4
    ledger = json.loads((out_dir / "ledger.json").read_text())
    assert all(rec["B"] < 1e-12 for rec in ledger["records"])
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["tool_version"] and manifest["config_hash"]
    assert (out_dir / "ledger.csv").read_text().startswith("s,rho,case")


def test_simulate_determinism(tmp_path, capsys):
    dirs = []
    for tag in ("a", "b"):
        out_dir = tmp_path / tag
        code, _, _ = run_cli(
            ["simulate", "--scenario", str(SCENARIOS / "zero.toml"), "--out-dir", str(out_dir)],
            capsys,
        )
        assert code == 0
        dirs.append(out_dir)
    for name in ("ledger.csv", "ledger.json", "summary.json"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_audit_metric(capsys, tmp_path):
    code, out, _ = run_cli(["audit", "metric", "--m", "3", "--out", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads(out)
    g = report["metric"]["matrix"]
    assert g[0][0] == pytest.approx(2 / 3) and g[0][1] == pytest.approx(1 / 3)
    assert (tmp_path / "audit_metric.json").exists()
    assert (tmp_path / "manifest.json").exists()


def test_audit_legendrian(capsys):
    code, out, _ = run_cli(["audit", "legendrian", "--m", "4"], capsys)
    assert code == 0
    assert json.loads(out)["legendrian"]["max_defect"] <= 1e-12


def test_audit_moment(capsys):
    code, out, _ = run_cli(["audit", "moment", "--m", "4"], capsys)
    assert code == 0
    rep = json.loads(out)["moment"]
    assert rep["rank"] == 12 and rep["stabilizer_sup"] <= 1e-12


def test_audit_excess_zero(capsys, tmp_path):
    code, out, _ = run_cli(
        ["audit", "excess", "--m", "3", "--scenario", "zero", "--out", str(tmp_path)], capsys
    )
    assert code == 0
    for rep in json.loads(out)["excess"]["reports"]:
        assert abs(rep["density_form"]) <= 1e-10 and abs(rep["monotone_form"]) <= 1e-10
    csv_text = (tmp_path / "audit_excess.csv").read_text()
    assert csv_text.startswith("r,density_form,monotone_form,discrepancy")
    assert len(csv_text.strip().splitlines()) == 4


def test_audit_unknown_selector(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["audit", "bogus"])
    assert exc.value.code == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hlcone.cli", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
