"""Command-line front end.

Exit codes: 0 success, 1 an identity check failed, 2 bad configuration,
3 a run failed (integrator, event or budget errors).
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    classify,
    escape_radius,
    hill_components,
    nontrap_scan,
    nontrap_threshold_repulsive,
)
from .dynamics import hamiltonian, propagate
from .errors import ConfigError, GridTooSmall, KSFlowError, WrongFamily
from .scenario import BUILTIN, builtin_scenario, load_scenario, write_report
from .verify import CHECKS, run_identities


def _versions() -> dict:
    return {"ksflow": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _scenario(args):
    overrides = {"seed": args.seed, "rtol": args.rtol, "atol": args.atol}
    if args.builtin:
        return builtin_scenario(args.builtin, **overrides)
    if args.scenario:
        return load_scenario(args.scenario, **overrides)
    raise ConfigError("give --scenario PATH or --builtin NAME")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _csv_header(fh, scenario_hash: str) -> None:
    fh.write(f"# tool=ksflow version={__version__} scenario_hash={scenario_hash}\n")


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    if not sc.initial:
        raise ConfigError("simulate needs explicit initial_conditions")
    opts = sc.options()
    T = sc.budget["T"]
    start = time.perf_counter()
    runs = [propagate(sc.spec, s, T, opts) for s in sc.initial]
    out = _outdir(args)
    meta = {"scenario_hash": sc.hash, "tool_version": __version__}
    files, summary = [], []
    for k, tr in enumerate(runs):
        name = f"trajectory_{k:03d}.jsonl"
        tr.write_jsonl(out / name, meta)
        files.append(name)
        h_drift, l_drift = tr.ks_drift()
        summary.append({"index": k, "t_final": tr.t_final, "stop_reason": tr.stop_reason,
                        "collisions": len(tr.collisions), "energy_drift": tr.energy_drift(),
                        "ks_energy_drift": h_drift, "ks_constraint_drift": l_drift})
        print(f"trajectory {k}: t = {tr.t_final:g}, {len(tr.collisions)} collisions, "
              f"energy drift {tr.energy_drift():.2e}")
    write_report(out / "manifest.json", {
        "command": "simulate", "scenario": sc.name, "T": T,
        "tolerances": {"rtol": opts.rtol, "atol": opts.atol},
        "versions": _versions(), "files": files, "trajectories": summary,
        "timing": {"runtime": time.perf_counter() - start},
    }, sc.hash)
    return 0


def _positive_energy(sc) -> float:
    lam = sc.energy
    if lam is None or lam <= 0:
        raise ConfigError("classify needs a positive scenario energy")
    return lam


def cmd_classify(args) -> int:
    sc = _scenario(args)
    lam = _positive_energy(sc)
    for k, s in enumerate(sc.initial):
        if hamiltonian(sc.spec, s) <= 0:
            raise ConfigError(f"initial condition {k} has non-positive energy")
    opts = sc.options()
    T_max = sc.budget["T_max"]
    start = time.perf_counter()
    esc = escape_radius(sc.spec, lam)
    trajectories = []
    for k, s in enumerate(sc.initial):
        v = classify(sc.spec, s, T_max, opts=opts)
        trajectories.append({"index": k, "x": s.x.tolist(), "xi": s.xi.tolist(), **v.to_dict()})
        print(f"initial {k}: forward {v.forward.value}, backward {v.backward.value}")
    body = {"command": "classify", "scenario": sc.name, "lambda": lam, "R1": esc.R1,
            "escape_margin": esc.margin, "T_max": T_max, "trajectories": trajectories}
    n = (sc.sampler or {}).get("n_samples", 0)
    if n:
        rep = nontrap_scan(sc.spec, lam, n, T_max, seed=sc.sampler["seed"],
                           threads=args.threads, opts=opts)
        body["scan"] = {k: v for k, v in rep.to_dict().items() if k != "timing"}
        print(f"scan: {n} samples, escape fraction {rep.escape_fraction:g}")
    body["timing"] = {"runtime": time.perf_counter() - start}
    write_report(_outdir(args) / "classify.json", body, sc.hash)
    return 0


def cmd_hill(args) -> int:
    sc = _scenario(args)
    grid = sc.hill_grid
    if grid is None:
        raise ConfigError("hill needs a hill_grid entry")
    lam = grid.get("energy", sc.energy)
    if lam is None or lam <= 0:
        raise ConfigError("hill needs a positive energy")
    start = time.perf_counter()
    topo = hill_components(sc.spec, lam, grid["bounds"], grid.get("resolution", 64))
    out = _outdir(args)
    body = {"command": "hill", "scenario": sc.name, **topo.to_dict(),
            "timing": {"runtime": time.perf_counter() - start}}
    write_report(out / "hill.json", body, sc.hash)
    if args.voxels:
        with open(out / "hill_voxels.csv", "w", newline="") as fh:
            _csv_header(fh, sc.hash)
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "k", "component"])
            writer.writerows(topo.voxel_rows())
    print(f"lambda = {lam:g}: {topo.count} component(s)")
    return 0


def cmd_scan_energy(args) -> int:
    sc = _scenario(args)
    lams = sc.energies
    if not lams:
        raise ConfigError("scan-energy needs a non-empty 'energies' list")
    if any(lam <= 0 for lam in lams) or any(b <= a for a, b in zip(lams, lams[1:])):
        raise ConfigError("energies must be positive and strictly increasing")
    opts = sc.options()
    n = (sc.sampler or {}).get("n_samples", 0)
    try:
        threshold = nontrap_threshold_repulsive(sc.spec)
    except WrongFamily:
        threshold = None
    rows = []
    for lam in lams:
        esc = escape_radius(sc.spec, lam)
        frac = ""
        if n:
            rep = nontrap_scan(sc.spec, lam, n, sc.budget["T_max"], seed=sc.sampler["seed"],
                               threads=args.threads, opts=opts)
            frac = repr(rep.escape_fraction)
        count = ""
        if sc.hill_grid is not None:
            try:
                count = hill_components(sc.spec, lam, sc.hill_grid["bounds"],
                                        sc.hill_grid.get("resolution", 64)).count
            except GridTooSmall:
                count = ""
        rows.append([repr(lam), repr(esc.R1), frac, n, count,
                     "" if threshold is None else repr(threshold)])
        print(f"lambda = {lam:g}: R1 = {esc.R1:g}, escape fraction {frac or '-'}")
    with open(_outdir(args) / "scan_energy.csv", "w", newline="") as fh:
        _csv_header(fh, sc.hash)
        writer = csv.writer(fh)
        writer.writerow(["lambda", "R1", "escape_fraction", "n_samples", "hill_components",
                         "repulsive_threshold"])
        writer.writerows(rows)
    return 0


def cmd_verify(args) -> int:
    if args.n < 0:
        raise ConfigError("--n must be non-negative")
    start = time.perf_counter()
    results = run_identities(args.n, 0 if args.seed is None else args.seed, args.only)
    failed = False
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: n={r.n} worst={r.worst:.3e} "
              f"tol={r.tol:.1e}")
        if not r.passed:
            failed = True
            print(f"offending sample for {r.name}: {json.dumps(r.sample)}", file=sys.stderr)
    if args.out:
        body = {"command": "verify-identities", "n": args.n, "seed": args.seed,
                "checks": [r.to_dict() for r in results], "versions": _versions(),
                "timing": {"runtime": time.perf_counter() - start}}
        write_report(_outdir(args) / "verify.json", body, "")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksflow", description="KS-regularized Coulomb flows and trapping diagnostics.")
    parser.add_argument("--version", action="version", version=f"ksflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--builtin", choices=sorted(BUILTIN), help="built-in scenario")
    common.add_argument("--out", default="ksflow-out", help="output directory")
    common.add_argument("--seed", type=int, help="override the sampler seed")
    common.add_argument("--threads", type=int, default=1, help="worker processes for scans")
    common.add_argument("--rtol", type=float, help="override the relative tolerance")
    common.add_argument("--atol", type=float, help="override the absolute tolerance")

    p = sub.add_parser("simulate", parents=[common], help="propagate initial conditions")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("classify", parents=[common], help="trapping verdicts and shell scan")
    p.set_defaults(func=cmd_classify)
    p = sub.add_parser("hill", parents=[common], help="components of the Hill region")
    p.add_argument("--voxels", action="store_true", help="also dump occupied cells as CSV")
    p.set_defaults(func=cmd_hill)
    p = sub.add_parser("scan-energy", parents=[common], help="sweep over energies")
    p.set_defaults(func=cmd_scan_energy)

    p = sub.add_parser("verify-identities", help="randomized identity checks")
    p.add_argument("--n", type=int, default=10_000, help="samples per identity")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", nargs="+", choices=list(CHECKS), help="run a subset")
    p.add_argument("--out", help="write verify.json here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("ksflow: config error: --threads must be at least 1", file=sys.stderr)
        return 2
    for name in ("rtol", "atol"):
        value = getattr(args, name, None)
        if value is not None and not value > 0:
            print(f"ksflow: config error: --{name} must be positive", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (ConfigError, GridTooSmall) as exc:
        print(f"ksflow: config error: {exc}", file=sys.stderr)
        return 2
    except KSFlowError as exc:
        print(f"ksflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
