"""Command line entry point.

Exit codes: 0 on success, 2 on data or configuration errors, 3 when an
identity check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import DataError
from .diffusion import DiffusionSpec, simulate_local_time_profile
from .experiment import IdentityCheckError, RunConfig, load_market, match_tally_for, run_experiment
from .simplex import DimensionError, InfiniteEntropyError
from .variational import ConstraintSet, WeightFunction, optimization_report, write_report

EXIT_OK = 0
EXIT_DATA = 2
EXIT_IDENTITY = 3

log = logging.getLogger("energy_entropy")


def _read_json(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc


def _run_config(args) -> RunConfig:
    d = _read_json(args.config)
    overrides = {
        "input": args.input,
        "lambda": args.lam,
        "sigma": args.sigma,
        "seed": args.seed,
        "out": args.out,
        "mode": getattr(args, "mode", None),
        "initial_weights": getattr(args, "weights", None),
    }
    d.update({k: v for k, v in overrides.items() if v is not None})
    if "input" not in d:
        raise DataError("no input given (use --input or an 'input' key in --config)")
    return RunConfig.from_dict(d)


def cmd_run(args, ledger_only: bool = False) -> int:
    bundle = run_experiment(_run_config(args), ledger_only=ledger_only)
    s = bundle.summary
    print(
        f"log V(T) = {s['log_v_final']:.10g}  D(T) = {s['drift_final']:.10g}  "
        f"residual = {s['identity_residual']:.3e}"
    )
    for name, p in bundle.paths.items():
        print(f"  {name}: {p}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    return cmd_run(args, ledger_only=True)


def cmd_match(args) -> int:
    d = _read_json(args.config)
    source = args.input or d.get("input")
    if source is None:
        raise DataError("no input given")
    sigma = args.sigma if args.sigma is not None else d.get("sigma", 0.1)
    seed = args.seed if args.seed is not None else d.get("seed", 0)
    path = load_market(source, seed, d.get("mode", "price"), d.get("initial_weights"))
    tally = match_tally_for(path, float(sigma))
    out = Path(args.out or d.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    tally.to_csv(out / "match_tally.csv")
    print(f"matched pairs N = {tally.N}, unmatched = {tally.unmatched_count}, moves = {tally.n_steps}")
    return EXIT_OK


def _weight_from_config(d: dict, input_path) -> WeightFunction:
    if input_path is not None:
        with open(input_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        try:
            ys = [float(r["y"]) for r in rows]
            ws = [float(r["estimate"]) for r in rows]
        except (KeyError, ValueError) as exc:
            raise DataError(f"{input_path}: expected columns y,estimate") from exc
        return WeightFunction.tabulated(ys, np.maximum(ws, 0.0))
    spec = d.get("weight", {"kind": "ou", "gamma": 1.0})
    kind = spec.get("kind")
    if kind == "bang_bang":
        return WeightFunction.bang_bang(spec["gamma"])
    if kind == "ou":
        return WeightFunction.ou(spec["gamma"])
    raise DataError(f"weight kind must be bang_bang or ou in a config, got {kind!r}")


def cmd_optimize(args) -> int:
    d = _read_json(args.config)
    w = _weight_from_config(d, args.input)
    c = d.get("constraints") or {}
    rb = c.get("ratio_bounds")
    constraints = ConstraintSet(c.get("q_floor", 0.0), tuple(rb) if rb else None)
    report = optimization_report(w, constraints, d.get("eta", 1e-3))
    out = Path(args.out or d.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, out / "optimize.json")
    print(f"Lambda(1/2) = {report['lambda_eq_weight']:.10g}  Lambda(q*) = {report['lambda_optimal']:.10g}")
    return EXIT_OK


def cmd_localtime(args) -> int:
    d = _read_json(args.config)
    diff = {k: d[k] for k in ("kind", "alpha", "sigma", "h", "eps") if k in d}
    diff.setdefault("kind", "bang_bang")
    if args.sigma is not None:
        diff["sigma"] = args.sigma
    spec = DiffusionSpec.from_dict(diff)
    seed = args.seed if args.seed is not None else d.get("seed", 0)
    profile = simulate_local_time_profile(
        spec,
        int(d.get("n_paths", 1000)),
        int(seed),
        levels=d.get("levels"),
        max_time=float(d.get("max_time", 1e3)),
    )
    out = Path(args.out or d.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    profile.to_csv(out / "localtime.csv")
    print(f"kept {profile.n_paths} paths, discarded {profile.n_discarded}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="energy-entropy", description="Energy-entropy portfolio decompositions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, lam=True):
        p.add_argument("--input", help="long-format CSV (date,ticker,value) or fixture:<name>")
        p.add_argument("--config", help="JSON configuration file")
        if lam:
            p.add_argument("--lambda", dest="lam", type=float, help="fraction of free energy spent on rebalancing")
        p.add_argument("--sigma", type=float, help="grid step for two-asset tallies (diffusion volatility for localtime)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")

    for name, helptext in (("run", "run a strategy and write all artifacts"), ("decompose", "write the ledger only")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--mode", choices=("price", "capitalization"))
        p.add_argument("--weights", help="initial weights file for price mode")
    common(sub.add_parser("match", help="matched/unmatched tally of a two-asset market"), lam=False)
    common(sub.add_parser("optimize", help="optimal two-asset weight curve"), lam=False)
    common(sub.add_parser("localtime", help="Monte Carlo local-time profile"), lam=False)
    return parser


COMMANDS = {
    "run": cmd_run,
    "decompose": cmd_decompose,
    "match": cmd_match,
    "optimize": cmd_optimize,
    "localtime": cmd_localtime,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except IdentityCheckError as exc:
        print(f"identity check failed: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except (DataError, DimensionError, InfiniteEntropyError, FileNotFoundError, KeyError, ValueError, TypeError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
