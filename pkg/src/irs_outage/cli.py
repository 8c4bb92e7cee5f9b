"""Command line entry point: ``run`` sweeps and ``validate`` stored designs.

Exit codes: 0 success, 2 a hard invariant failed (AO monotonicity, outage
conservativeness, Bob rate), 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .channels import ConfigError
from .experiment import load_experiment, run_experiment, validate_design_file

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irs-outage", description="Robust secure IRS beamforming experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario, optionally sweeping one parameter")
    run.add_argument("--scenario", required=True, help="YAML scenario file")
    run.add_argument("--sweep", help="param=v1,v2,... with param in gamma, beta, m, nt, k, delta")
    run.add_argument("--schemes", help="comma list of proposed, random_mrt, optimized_mrt, random_irs, no_irs")
    run.add_argument("--realizations", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--workers", type=int)
    run.add_argument("--outage-samples", type=int)
    run.add_argument("--paper-scale", action="store_true", help="apply the scenario's paper-scale overrides")
    val = sub.add_parser("validate", help="re-check a stored design file")
    val.add_argument("--design", required=True)
    val.add_argument("--samples", type=int, default=10000)
    val.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            overrides = {"realizations": args.realizations, "seed": args.seed, "output_dir": args.out,
                         "workers": args.workers, "outage_samples": args.outage_samples}
            if args.sweep is not None:
                overrides["sweep"] = args.sweep
            if args.schemes is not None:
                overrides["schemes"] = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
            spec = load_experiment(args.scenario, overrides, paper_scale=args.paper_scale)
            result = run_experiment(spec)
            for s in result.summary:
                print(f"{s['scheme']:>14} {spec.sweep_param}={s['sweep_value']!s:>6}  "
                      f"power {s['mean_power_dbm']:8.3f} dBm  AN {s['mean_an_fraction']:.3f}  "
                      f"feasible {s['feasible']}/{s['points']}")
            for v in result.violations:
                print(f"INVARIANT VIOLATION: {v}", file=sys.stderr)
            return EXIT_INVARIANT if result.violations else EXIT_OK
        report = validate_design_file(args.design, args.samples, args.seed)
        print(json.dumps(report, indent=2))
        return EXIT_OK if report["ok"] else EXIT_INVARIANT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_entry():
    sys.exit(main())
