"""Scoring scan reports against ground truth: cross-entropy and ROC-AUC.

ROC-AUC is the rank statistic (#concordant pairs + 0.5 * #tied pairs) over
all positive/negative pairs, computed with tie-averaged ranks. Cross-entropy
is the binary form with natural log; callers must keep probabilities strictly
inside (0, 1) — clamping is an explicit caller decision, never silent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "LabeledScore",
    "FleetMetrics",
    "cross_entropy",
    "roc_auc",
    "fleet_metrics",
]

CATEGORIES = ("clean", "polygon", "instagram")


@dataclass(frozen=True)
class LabeledScore:
    model_id: str
    y: int  # 1 = poisoned
    p: float  # predicted poison probability

    def __post_init__(self) -> None:
        if self.y not in (0, 1):
            raise ValueError(f"label must be 0 or 1: {self.y}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"probability must be strictly inside (0, 1): {self.p}")


def cross_entropy(y: int, p: float) -> float:
    """Binary cross-entropy, natural log. Rejects p outside (0, 1)."""
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1: {y}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must be strictly inside (0, 1): {p}")
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def roc_auc(scores: Sequence[LabeledScore]) -> float:
    """Rank-based AUC with the 0.5 tie convention.

    Requires at least one positive and one negative label; a single-class
    input has no defined ranking quality.
    """
    n_pos = sum(1 for s in scores if s.y == 1)
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC-AUC needs at least one positive and one negative label")

    order = sorted(range(len(scores)), key=lambda i: scores[i].p)
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]].p == scores[order[i]].p:
            j += 1
        tied_rank = (i + j) / 2.0 + 1.0  # 1-based average rank across the tie group
        for k in range(i, j + 1):
            ranks[order[k]] = tied_rank
        i = j + 1

    positive_rank_sum = sum(rank for rank, s in zip(ranks, scores) if s.y == 1)
    u_statistic = positive_rank_sum - n_pos * (n_pos + 1) / 2.0
    return u_statistic / (n_pos * n_neg)


@dataclass(frozen=True)
class FleetMetrics:
    ce_loss: float
    roc_auc: float
    n_models: int
    per_category: dict
    runtime_s: float
    per_model_runtime_s: float
    n_errors: int

    def to_dict(self) -> dict:
        return {
            "ce_loss": self.ce_loss,
            "roc_auc": self.roc_auc,
            "n_models": self.n_models,
            "per_category": self.per_category,
            "runtime_s": self.runtime_s,
            "per_model_runtime_s": self.per_model_runtime_s,
            "n_errors": self.n_errors,
        }


def _category(ground_truth) -> str:
    return {"none": "clean", "polygon": "polygon", "filter": "instagram"}[
        ground_truth.trigger_kind
    ]


def fleet_metrics(reports: Sequence[dict], manifest) -> FleetMetrics:
    """Score one fleet run.

    ``reports`` are serialized scan reports (one dict per model); records with
    ``status == "error"`` are excluded from the metrics and tallied as
    warnings. Every manifest model must appear exactly once.
    """
    if not manifest.models:
        raise ValueError("manifest carries no ground truth (secrets stripped?)")

    by_id: dict[str, dict] = {}
    for report in reports:
        model_id = report.get("model_id")
        if model_id is None:
            raise ValueError(f"report without model_id: {report}")
        if model_id in by_id:
            raise ValueError(f"duplicate report for {model_id}")
        by_id[model_id] = report

    truth_ids = {gt.model_id for gt in manifest.models}
    unknown = set(by_id) - truth_ids
    if unknown:
        raise ValueError(f"reports for models not in manifest: {sorted(unknown)}")
    missing = truth_ids - set(by_id)
    if missing:
        raise ValueError(f"missing reports for models: {sorted(missing)}")

    scores: list[LabeledScore] = []
    rows: dict[str, dict] = {
        cat: {"n_models": 0, "ce_sum": 0.0, "correct": 0} for cat in CATEGORIES
    }
    runtime_ms = 0
    n_errors = 0
    for gt in manifest.models:
        report = by_id[gt.model_id]
        if report.get("status") == "error":
            n_errors += 1
            continue
        label = 1 if gt.poisoned else 0
        scores.append(LabeledScore(gt.model_id, label, report["probability"]))
        row = rows[_category(gt)]
        row["n_models"] += 1
        row["ce_sum"] += cross_entropy(label, report["probability"])
        row["correct"] += int(bool(report["poisoned"]) == gt.poisoned)
        runtime_ms += report.get("wall_ms", 0)

    if not scores:
        raise ValueError("no scoreable reports (all errored)")

    per_category = {}
    for cat in CATEGORIES:
        row = rows[cat]
        n = row["n_models"]
        per_category[cat] = {
            "n_models": n,
            "ce_loss": row["ce_sum"] / n if n else None,
            "detection_rate": row["correct"] / n if n else None,
        }

    ce = sum(cross_entropy(s.y, s.p) for s in scores) / len(scores)
    return FleetMetrics(
        ce_loss=ce,
        roc_auc=roc_auc(scores),
        n_models=len(scores),
        per_category=per_category,
        runtime_s=runtime_ms / 1000.0,
        per_model_runtime_s=runtime_ms / 1000.0 / len(scores),
        n_errors=n_errors,
    )
