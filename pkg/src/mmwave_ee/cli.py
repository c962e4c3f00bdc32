"""``simulate`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 too many failed trials.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .configfile import _labels, dump_config, load_config
from .sim import (
    DEFAULT_SWEEP_VALUES,
    SWEEP_KINDS,
    ConfigError,
    ExcessiveFailures,
    ExperimentConfig,
    emit_csv,
    run_sweep,
)

EXIT_CONFIG = 2
EXIT_FAILURES = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="simulate",
        description="Monte-Carlo energy-efficiency sweeps for hybrid mmWave MIMO links.",
    )
    ap.add_argument("--config", help="key = value experiment file")
    ap.add_argument("--sweep", choices=SWEEP_KINDS)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--methods", help="comma separated subset of dm,bf,digital,analogue")
    ap.add_argument("--pursuit", choices=("omp", "gp"))
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out", help="CSV output path")
    ap.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.sweep and args.sweep != cfg.sweep:
        changes["sweep"] = args.sweep
        changes["sweep_values"] = DEFAULT_SWEEP_VALUES[args.sweep]
    for name in ("trials", "seed", "pursuit", "workers"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    if args.methods:
        changes["methods"] = _labels(args.methods)
    if args.out:
        changes["output_path"] = args.out
    try:
        return replace(cfg, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"simulate: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    try:
        rows = run_sweep(cfg)
    except ConfigError as exc:
        print(f"simulate: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExcessiveFailures as exc:
        emit_csv(exc.rows, cfg.output_path)
        print(f"simulate: {exc}; partial results in {cfg.output_path}", file=sys.stderr)
        return EXIT_FAILURES
    emit_csv(rows, cfg.output_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
