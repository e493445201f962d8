"""Command line interface: gen-fleet | scan | score.

Machine-parseable JSON goes to stdout, diagnostics to stderr. Verdicts are
data, not errors: scanning a poisoned model still exits 0. Exit 2 flags bad
arguments, exit 1 flags I/O or transport failure.

Seed precedence, lowest to highest: TROJSCAN_SEED environment variable,
config file, --seed flag.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .detector import DetectorConfig, scan
from .fleet import FleetJob, load_exemplar_tree, run_fleet, score_fleet
from .oracle import OracleError, ProtocolOracle
from .synthfleet import FleetConfig, FleetGenError, gen_fleet

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trojscan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-fleet", help="generate a synthetic model fleet")
    gen.add_argument("--out", required=True, type=Path)
    gen.add_argument("--models", type=int, default=48)
    gen.add_argument("--classes", type=int, default=5)
    gen.add_argument("--per-class", type=int, default=4)
    gen.add_argument("--dims", type=int, default=64, help="square image side in pixels")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--force", action="store_true", help="overwrite an existing fleet")

    scan_p = sub.add_parser("scan", help="scan a fleet directory or one endpoint")
    scan_p.add_argument("--fleet", type=Path, help="fleet directory to scan")
    scan_p.add_argument("--endpoint", help="single model endpoint: tcp:HOST:PORT or cmd:ARGV")
    scan_p.add_argument("--clean", type=Path, help="exemplar directory for --endpoint scans")
    scan_p.add_argument("--out", required=True, type=Path)
    scan_p.add_argument("--config", type=Path, help="JSON detector config file")
    scan_p.add_argument("--parallel", type=int, default=None)
    scan_p.add_argument("--seed", type=int, default=None)

    score_p = sub.add_parser("score", help="score reports against a manifest")
    score_p.add_argument("--reports", required=True, type=Path)
    score_p.add_argument("--manifest", required=True, type=Path)
    score_p.add_argument(
        "--per-category",
        action="store_true",
        help="also print one breakdown row per model category",
    )
    return parser


def _resolve_seed(flag_seed: int | None, file_config: dict) -> int:
    if flag_seed is not None:
        return flag_seed
    if "seed" in file_config:
        return int(file_config["seed"])
    env = os.environ.get("TROJSCAN_SEED")
    if env is not None:
        return int(env)
    return 0


def _load_detector_config(args) -> tuple[DetectorConfig, dict]:
    file_config: dict = {}
    if getattr(args, "config", None):
        file_config = json.loads(args.config.read_text())
    fleet_keys = {"parallel"}
    detector_keys = {k: v for k, v in file_config.items() if k not in fleet_keys}
    detector_keys["seed"] = _resolve_seed(args.seed, file_config)
    return DetectorConfig.from_dict(detector_keys), file_config


def _cmd_gen_fleet(args) -> int:
    try:
        config = FleetConfig(
            models=args.models,
            classes=args.classes,
            per_class=args.per_class,
            height=args.dims,
            width=args.dims,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    seed = _resolve_seed(args.seed, {})
    try:
        manifest = gen_fleet(config, seed=seed, out_dir=args.out, force=args.force)
    except (FleetGenError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(json.dumps({"fleet": str(args.out), "models": len(manifest.models), "seed": seed}))
    return EXIT_OK


def _cmd_scan(args) -> int:
    if bool(args.fleet) == bool(args.endpoint):
        print("error: pass exactly one of --fleet or --endpoint", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg, file_config = _load_detector_config(args)
    except (ValueError, OSError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.fleet:
        if not (args.fleet / "manifest.json").exists():
            print(f"error: no manifest.json under {args.fleet}", file=sys.stderr)
            return EXIT_USAGE
        parallel = args.parallel if args.parallel is not None else int(file_config.get("parallel", 1))
        try:
            job = FleetJob(args.fleet, cfg, args.out, parallelism=parallel)
            started = time.perf_counter()
            out = run_fleet(job)
            elapsed = time.perf_counter() - started
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        lines = sum(1 for _ in open(out))
        print(json.dumps({"reports": str(out), "models": lines, "wall_s": round(elapsed, 3)}))
        return EXIT_OK

    if not args.clean or not args.clean.is_dir():
        print("error: --endpoint scans need --clean pointing at an exemplar directory",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        exemplars = load_exemplar_tree(args.clean)
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with ProtocolOracle.from_endpoint(args.endpoint) as oracle:
            report = scan(oracle, exemplars, cfg, model_id=args.endpoint)
    except (OracleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    payload = json.dumps(report.to_dict(), sort_keys=True)
    args.out.write_text(payload + "\n")
    print(payload)
    return EXIT_OK


def _cmd_score(args) -> int:
    try:
        metrics = score_fleet(args.reports, args.manifest)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    payload = metrics.to_dict()
    if not args.per_category:
        payload = {k: v for k, v in payload.items() if k != "per_category"}
    print(json.dumps(payload, sort_keys=True))
    if args.per_category:
        for name, row in metrics.per_category.items():
            print(f"{name}: {json.dumps(row, sort_keys=True)}", file=sys.stderr)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "gen-fleet":
        return _cmd_gen_fleet(args)
    if args.command == "scan":
        return _cmd_scan(args)
    return _cmd_score(args)


if __name__ == "__main__":
    sys.exit(main())
