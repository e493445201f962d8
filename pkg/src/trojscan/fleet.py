"""Batch orchestration: scan every model in a fleet directory, score results.

A fleet directory holds ``manifest.json`` plus one subdirectory per model with
``oracle.json`` (synthetic models) and a ``clean/`` exemplar tree. When an
``external.json`` file is present, listed models are reached over the wire
protocol instead of being rebuilt in process.

Reports are written as canonical JSONL via a temp file and an atomic rename:
an interrupted run leaves either no reports file or a complete one. Each
model scans under its own derived seed, so verdicts never depend on which
other models are in the fleet or on worker scheduling.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .detector import DetectorConfig, scan
from .imaging import Image, load_png
from .metrics import FleetMetrics, fleet_metrics
from .oracle import ProtocolOracle
from .synthfleet import FleetManifest, load_manifest, load_oracle

__all__ = [
    "FleetJob",
    "run_fleet",
    "score_fleet",
    "read_reports",
    "load_exemplar_tree",
    "derive_model_seed",
]


@dataclass(frozen=True)
class FleetJob:
    fleet_dir: Path
    config: DetectorConfig
    out_path: Path
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1: {self.parallelism}")
        object.__setattr__(self, "fleet_dir", Path(self.fleet_dir))
        object.__setattr__(self, "out_path", Path(self.out_path))


def derive_model_seed(base_seed: int, model_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{model_id}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def load_exemplar_tree(clean_dir: str | Path) -> list[list[Image]]:
    """Load ``class_<c>/img_<k>.png`` groups, ordered by class and index."""
    clean_dir = Path(clean_dir)
    class_dirs = sorted(
        (d for d in clean_dir.iterdir() if d.is_dir() and re.fullmatch(r"class_\d+", d.name)),
        key=lambda d: int(d.name.split("_")[1]),
    )
    if not class_dirs:
        raise FileNotFoundError(f"no class_<c> directories under {clean_dir}")
    groups: list[list[Image]] = []
    for class_dir in class_dirs:
        images = sorted(
            class_dir.glob("img_*.png"), key=lambda p: int(p.stem.split("_")[1])
        )
        if not images:
            raise FileNotFoundError(f"no exemplars under {class_dir}")
        groups.append([load_png(p) for p in images])
    return groups


def _load_endpoints(fleet_dir: Path) -> dict[str, str]:
    external = fleet_dir / "external.json"
    if not external.exists():
        return {}
    entries = json.loads(external.read_text())
    return {e["model_id"]: e["endpoint"] for e in entries}


def _scan_one(
    fleet_dir: Path, model_id: str, cfg: DetectorConfig, endpoint: str | None
) -> dict:
    model_cfg = cfg.with_seed(derive_model_seed(cfg.seed, model_id))
    try:
        exemplars = load_exemplar_tree(fleet_dir / model_id / "clean")
        if endpoint is not None:
            with ProtocolOracle.from_endpoint(endpoint) as oracle:
                report = scan(oracle, exemplars, model_cfg, model_id=model_id)
        else:
            oracle = load_oracle(fleet_dir / model_id / "oracle.json")
            report = scan(oracle, exemplars, model_cfg, model_id=model_id)
        return report.to_dict()
    except Exception as exc:
        return {
            "model_id": model_id,
            "status": "error",
            "error": f"{type(exc).__name__}: {exc}",
            "config_hash": model_cfg.config_hash(),
        }


def _canonical_line(report: dict) -> str:
    return json.dumps(report, sort_keys=True, separators=(",", ":"))


def run_fleet(job: FleetJob) -> Path:
    """Scan every manifest model; write one canonical JSONL line per model.

    With ``parallelism == 1`` models are processed and written in manifest
    order; with more workers the lines are sorted by model id before writing,
    so the output file is order-deterministic either way.
    """
    manifest_raw = json.loads((job.fleet_dir / "manifest.json").read_text())
    model_ids = [entry["model_id"] for entry in manifest_raw["models"]]
    endpoints = _load_endpoints(job.fleet_dir)

    if job.parallelism == 1:
        reports = [
            _scan_one(job.fleet_dir, model_id, job.config, endpoints.get(model_id))
            for model_id in model_ids
        ]
    else:
        with ThreadPoolExecutor(max_workers=job.parallelism) as pool:
            reports = list(
                pool.map(
                    lambda model_id: _scan_one(
                        job.fleet_dir, model_id, job.config, endpoints.get(model_id)
                    ),
                    model_ids,
                )
            )
        reports.sort(key=lambda r: r["model_id"])

    n_errors = sum(1 for r in reports if r.get("status") == "error")
    if n_errors:
        print(f"warning: {n_errors} model(s) failed to scan", file=sys.stderr)

    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = job.out_path.with_name(job.out_path.name + ".tmp")
    with open(tmp_path, "w", encoding="utf-8") as handle:
        for report in reports:
            handle.write(_canonical_line(report) + "\n")
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp_path, job.out_path)
    return job.out_path


def read_reports(path: str | Path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def score_fleet(reports: Sequence[dict] | str | Path, manifest: FleetManifest | str | Path) -> FleetMetrics:
    """Score a reports file (or parsed reports) against a secret-bearing manifest."""
    if isinstance(reports, (str, Path)):
        reports = read_reports(reports)
    if isinstance(manifest, (str, Path)):
        manifest = load_manifest(manifest)
    return fleet_metrics(reports, manifest)
