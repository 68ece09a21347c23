"""Command-line entry point: ``sparselab run`` and ``sparselab replay``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from sparselab.config import ConfigError, load_config, parse_suites
from sparselab.runner import ReplayError, load_seed_metadata, replay, run


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparselab", description="Monte Carlo checks of sparse random matrix spectra.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one or more suites from a TOML config")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--suite", help="comma-separated suite names or 'all' (overrides the config)")
    r.add_argument("--seed", type=_u64, help="master seed (overrides ensemble.master_seed)")
    r.add_argument("--workers", type=int)
    r.add_argument("--out", type=Path, help="output directory")

    p = sub.add_parser("replay", help="regenerate one sample from a report's seed metadata")
    p.add_argument("--meta", required=True, type=Path, help="report.json or a replay record")
    p.add_argument("--sample-index", type=int)
    p.add_argument("--purpose")
    p.add_argument("--out", type=Path, default=Path("replay"))
    return ap


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    changes = {}
    if args.suite:
        changes["suites"] = parse_suites(args.suite)
    if args.seed is not None:
        changes["ensemble"] = cfg.ensemble.with_seed(args.seed)
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["output_dir"] = args.out
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    report = run(cfg)
    for res in report.results:
        print(res.line())
    if report.error:
        print(f"error: {report.error['message']}", file=sys.stderr)
    print(f"report: {cfg.output_dir / 'report.json'}")
    return 0 if report.passed else 1


def _cmd_replay(args) -> int:
    meta = load_seed_metadata(args.meta)
    info = replay(meta, args.sample_index, args.purpose, args.out)
    print(f"sample {info['sample_index']} ({info['purpose']}): lambda1 = {info['lambda1']!r}")
    print(f"matrix sha256 {info['matrix_sha256']}; written to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _cmd_run(args) if args.command == "run" else _cmd_replay(args)
    except (ConfigError, ReplayError, ValueError, OSError) as exc:
        print(f"sparselab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
