"""Command line front end: spectrum tables, geometry audits, decay runs.

Exit codes: 0 success, 2 usage error, 3 graph-regime exit, 4 unsupported
scope (non-rigid link).  Every command that writes files also writes a
run manifest next to them; two runs with identical inputs produce
byte-identical CSV/JSON bodies (the timestamp lives only in the manifest).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, lattice
from .excess import RegimeError, excess_csv, volume_excess
from .geometry import (
    HLLink,
    check_legendrian,
    check_special_lagrangian,
    cone_samples,
    cylinder_model,
    induced_metric,
    inverse_link_metric,
    link_point,
    model_frame,
    moment_hamiltonian,
    rotate_model,
    RotationGenerator,
    su_basis,
    su_harmonics_rank,
    symplectic_form,
)
from .harmonics import expansion
from .simulate import SimConfig, load_config, load_scenario, make_state, phi_audit, rate_fit, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REGIME = 3
EXIT_SCOPE = 4


def _dumps(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _hash_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _args_payload(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def write_manifest(out_dir: Path, command: str, config_data, input_paths) -> None:
    manifest = {
        "command": command,
        "config_hash": _hash_bytes(_dumps(config_data).encode()),
        "input_hashes": {
            str(p): _hash_bytes(Path(p).read_bytes()) for p in input_paths
        },
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (out_dir / "manifest.json").write_text(_dumps(manifest))


def _parse_m_range(text: str):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _parse_lambdas(text: str, m: int):
    out = []
    for item in text.split(","):
        item = item.strip()
        if item == "linear":
            out.append(m - 1)
        elif item == "quadratic":
            out.append(2 * m)
        else:
            out.append(int(item))
    return out


def cmd_spectrum(args) -> int:
    rows = ["m,lambda,multiplicity"]
    reports = []
    for m in _parse_m_range(args.m):
        for lam in _parse_lambdas(args.lam, m):
            rows.append("%d,%d,%d" % (m, lam, lattice.multiplicity(m, lam)))
        if args.rigidity:
            reports.append(lattice.rigidity_report(m).as_dict())
    csv_text = "\n".join(rows) + "\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "spectrum.csv").write_text(csv_text)
        if args.rigidity:
            (out_dir / "rigidity.json").write_text(_dumps(reports))
        write_manifest(out_dir, "spectrum", _args_payload(args), [])
    else:
        sys.stdout.write(csv_text)
        if args.rigidity:
            sys.stdout.write(_dumps(reports))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.print_config:
        sys.stdout.write(_dumps(SimConfig().to_jsonable()))
        return EXIT_OK
    if not args.scenario:
        sys.stderr.write("simulate: a scenario file is required\n")
        return EXIT_USAGE
    model, f, config = load_scenario(args.scenario)
    inputs = [args.scenario]
    if args.config:
        config = load_config(args.config)
        inputs.append(args.config)
    rep = lattice.rigidity_report(model.m)
    if not rep.rigid:
        sys.stderr.write(
            f"simulate: link m={model.m} is not rigid (excess {rep.excess}); "
            "the moduli deformation step is out of scope\n"
        )
        return EXIT_SCOPE
    try:
        state = make_state(model, f, args.rho, config)
        ledger = run(state, config)
    except RegimeError as err:
        sys.stderr.write(f"simulate: {err}\n")
        return EXIT_REGIME
    if ledger.exit_reason != "completed":
        sys.stderr.write(f"simulate: {ledger.exit_reason}\n")
        return EXIT_REGIME

    alpha = rate_fit(ledger, ledger.states[-1].model) if len(ledger.records) >= 4 else math.inf
    audit = phi_audit(ledger, config)
    summary = {
        "scenario": str(args.scenario),
        "steps": len(ledger.records),
        "cases": [rec.case for rec in ledger.records],
        "alpha": "inf" if alpha == math.inf else alpha,
        "phi_audit": audit,
        "exit_reason": ledger.exit_reason,
    }
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ledger.csv").write_text("\n".join(ledger.csv_rows()) + "\n")
    (out_dir / "ledger.json").write_text(_dumps(ledger.to_jsonable()))
    (out_dir / "summary.json").write_text(_dumps(summary))
    write_manifest(out_dir, "simulate", config.to_jsonable(), inputs)
    sys.stdout.write(_dumps(summary))
    return EXIT_OK


def _audit_legendrian(m: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    link = HLLink(m)
    theta = rng.uniform(0, 2 * math.pi, size=(50, m - 1))
    rep = check_legendrian(link, theta, tol=1e-12)
    return {"legendrian": rep.to_jsonable()}


def _audit_calibration(m: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    model = cylinder_model(1, m)
    reports = []
    for _ in range(5):
        frame = model_frame(model, rng.normal(size=1), rng.uniform(0.5, 1.5),
                            rng.uniform(0, 2 * math.pi, size=m - 1))
        reports.append(check_special_lagrangian(model, frame, tol=1e-10).to_jsonable())
    basis = su_basis(m + 1)
    gen = RotationGenerator(sum(0.1 * b for b in basis[: 3]))
    rotated = rotate_model(model, gen, 1.0)
    frame = model_frame(rotated, np.zeros(1), 1.0, np.zeros(m - 1))
    reports.append(check_special_lagrangian(rotated, frame, tol=1e-10).to_jsonable())
    return {"calibration": reports}


def _audit_metric(m: int, seed: int) -> dict:
    link = HLLink(m)
    g = induced_metric(link)
    expected = (np.eye(m - 1) + np.ones((m - 1, m - 1))) / m
    ginv = inverse_link_metric(m)
    rng = np.random.default_rng(seed)
    worst = 0
    for _ in range(20):
        nu = rng.integers(-3, 4, size=m - 1)
        q = lattice.eigenvalue_of(m, nu.tolist())
        worst = max(worst, abs(int(nu @ ginv @ nu) - q))
    return {
        "metric": {
            "matrix": g.tolist(),
            "max_matrix_defect": float(np.max(np.abs(g - expected))),
            "max_eigenvalue_defect": int(worst),
            "passed": bool(np.max(np.abs(g - expected)) < 1e-14 and worst == 0),
        }
    }


def _audit_moment(m: int, seed: int) -> dict:
    model = cylinder_model(1, m)
    rank = su_harmonics_rank(model, max(4 * m * m, 120), seed=seed)
    z = cone_samples(m, 50, seed=seed)
    stab = np.zeros((m, m), dtype=complex)
    stab[0, 0] = 1j
    stab[1, 1] = -1j
    sup = float(np.max(np.abs(moment_hamiltonian(stab, z))))
    return {
        "moment": {
            "rank": rank,
            "expected_rank": m * m - m,
            "stabilizer_sup": sup,
            "passed": rank == m * m - m and sup <= 1e-12,
        }
    }


def _audit_excess(m: int, seed: int, scenario: str) -> dict:
    model = cylinder_model(1, m)
    if scenario and scenario != "zero":
        _model, f, _config = load_scenario(scenario)
        model = _model
    else:
        f = expansion(1, m)
    reports = [volume_excess(model, f, r) for r in (0.5, 1.0, 2.0)]
    passed = True
    if not f.modes:
        passed = all(abs(rep.density_form) <= 1e-10 and abs(rep.monotone_form) <= 1e-10
                     for rep in reports)
    return {
        "excess": {"reports": [rep.to_jsonable() for rep in reports], "passed": bool(passed)},
        "_csv": excess_csv(reports),
    }


def cmd_audit(args) -> int:
    dispatch = {
        "legendrian": lambda: _audit_legendrian(args.m, args.seed),
        "calibration": lambda: _audit_calibration(args.m, args.seed),
        "metric": lambda: _audit_metric(args.m, args.seed),
        "moment": lambda: _audit_moment(args.m, args.seed),
        "excess": lambda: _audit_excess(args.m, args.seed, args.scenario),
    }
    report = dispatch[args.what]()
    csv_text = report.pop("_csv", None)

    def _collect_passed(node):
        if isinstance(node, dict):
            for key, val in node.items():
                if key == "passed":
                    yield bool(val)
                else:
                    yield from _collect_passed(val)
        elif isinstance(node, list):
            for item in node:
                yield from _collect_passed(item)

    flags = list(_collect_passed(report))
    ok = all(flags) if flags else True
    report["passed"] = ok
    text = _dumps(report)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"audit_{args.what}.json").write_text(text)
        if csv_text:
            (out_dir / f"audit_{args.what}.csv").write_text(csv_text)
        write_manifest(out_dir, f"audit {args.what}", _args_payload(args), [])
    sys.stdout.write(text)
    return EXIT_OK if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hlcone",
        description="Spectra, calibration audits and decay iterations for "
        "special Lagrangian cylinders over Harvey-Lawson cones.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="torus link multiplicity tables (CSV)")
    sp.add_argument("--m", required=True, help="complex dimension, single value or range a..b")
    sp.add_argument("--lambda", dest="lam", required=True,
                    help="comma list of eigenvalues; 'linear' = m-1, 'quadratic' = 2m")
    sp.add_argument("--rigidity", action="store_true", help="also emit rigidity reports (JSON)")
    sp.add_argument("--out", help="output directory (default: stdout)")
    sp.set_defaults(func=cmd_spectrum)

    sim = sub.add_parser("simulate", help="run the decay iteration on a scenario file")
    sim.add_argument("--scenario", help="TOML/JSON scenario file")
    sim.add_argument("--config", help="TOML/JSON config overriding the scenario's [config]")
    sim.add_argument("--out-dir", default="out", help="directory for ledger/summary files")
    sim.add_argument("--rho", type=float, default=1.0, help="initial scale")
    sim.add_argument("--print-config", action="store_true", help="print default config and exit")
    sim.set_defaults(func=cmd_simulate)

    aud = sub.add_parser("audit", help="run one family of geometry checks")
    aud.add_argument("what", choices=["legendrian", "calibration", "metric", "moment", "excess"])
    aud.add_argument("--m", type=int, default=3)
    aud.add_argument("--seed", type=int, default=0)
    aud.add_argument("--scenario", default="zero", help="excess audit scenario ('zero' or a file)")
    aud.add_argument("--out", help="output directory for the JSON report")
    aud.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RegimeError as err:
        sys.stderr.write(f"hlcone: {err}\n")
        return EXIT_REGIME
    except ValueError as err:
        if "not rigid" in str(err):
            sys.stderr.write(f"hlcone: {err}\n")
            return EXIT_SCOPE
        sys.stderr.write(f"hlcone: {err}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
