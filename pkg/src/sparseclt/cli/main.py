"""Command-line entry point: one subcommand per experiment mode."""

from __future__ import annotations

import argparse
import sys

from .config import MODES, ConfigError, load_config, parse_complex, parse_config
from .runner import EXIT_CONFIG, EXIT_IO, run_experiment


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparseclt", description="Resolvent statistics of sparse random graphs.")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--n", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--z", action="append", type=parse_complex, help="complex as re+imi; repeatable")
        sp.add_argument("--u", action="append", type=float, help="repeatable")
        sp.add_argument("--phi", action="append", help="test function, e.g. lambda^2, exp:0.5; repeatable")
        sp.add_argument("--ns", type=int, nargs="+", help="sizes for the lln/variance sweeps")
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--grid-points", dest="grid_points", type=int)
        sp.add_argument("--vmax", type=float)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--allow-unproven", dest="allow_unproven", action="store_true", default=None)
    return ap


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    mode = args.pop("mode")
    path = args.pop("config")
    for k in ("z", "u", "phi", "ns"):
        if args.get(k) is not None:
            args[k] = tuple(args[k])
    try:
        cfg = load_config(path, args, mode) if path else parse_config(None, args, mode)
    except ConfigError as exc:
        print("configuration rejected:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, manifest = run_experiment(cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for c in manifest.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  {c['detail']}")
    print(f"{sum(c['passed'] for c in manifest.checks)}/{len(manifest.checks)} checks passed; outputs in {cfg.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
