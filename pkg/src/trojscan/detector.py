"""The two-stage trojan scan.

Stage 1 (patch sweep): for each of a budget of random colors, composite a
square patch at a fixed center onto one clean exemplar per class, at every
size in the sweep. A probe counts as a flip when the model answers a
different class with confidence at or above the threshold; enough flips
within one class's sweep flags the model.

Stage 2 (filter probing): run every exemplar of every class through each
candidate filter. A model is flagged when one filter flips enough of one
class's exemplars (per-filter counters by default; a single pooled counter
is available as a config switch).

Stage 2 runs only if stage 1 passes; a model is reported benign only when
both stages pass. Verdicts carry a configured high/low poison probability
rather than a calibrated score.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .filters import FilterType, apply_filter
from .imaging import Image, composite, square_mask
from .oracle import CountingOracle, ModelOracle

__all__ = [
    "DetectorConfig",
    "StageVerdict",
    "ScanReport",
    "sample_trigger_color",
    "gen_trigger_images",
    "detect_polygon",
    "detect_instagram",
    "scan",
    "DEFAULT_SIZES",
]

# Nine sizes evenly spanning the patch-area range.
DEFAULT_SIZES = (0.01, 0.04, 0.07, 0.10, 0.13, 0.16, 0.19, 0.22, 0.25)

COMPARATOR_MODES = ("gte", "strict_gt")
INSTAGRAM_COUNTER_MODES = ("per_filter", "pooled")


@dataclass(frozen=True)
class DetectorConfig:
    """Scan parameters and their defaults.

    ``comparator`` decides whether a class is flagged at flip count >= po_max
    (default) or strictly greater. ``instagram_counter`` selects per-filter
    flip counters (default) or one pooled counter per class.
    """

    th: float = 0.999
    po_max: int = 3
    co_max: int = 5
    tc: float = 1.0
    sizes: tuple[float, ...] = DEFAULT_SIZES
    filters: tuple[FilterType, ...] = tuple(FilterType)
    center: tuple[int, int] | None = None  # None = image center
    seed: int = 0
    comparator: str = "gte"
    instagram_counter: str = "per_filter"
    p1: float = 0.9
    p2: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.th <= 1.0:
            raise ValueError(f"th must be in (0, 1]: {self.th}")
        if self.po_max < 1 or self.co_max < 1:
            raise ValueError("po_max and co_max must be at least 1")
        if not 0.0 < self.tc <= 1.0:
            raise ValueError(f"tc must be in (0, 1]: {self.tc}")
        if not self.sizes or any(not 0.0 < s <= 0.25 for s in self.sizes):
            raise ValueError(f"sizes must be nonempty, each in (0, 0.25]: {self.sizes}")
        if not self.filters:
            raise ValueError("filter candidate list must be nonempty")
        if self.comparator not in COMPARATOR_MODES:
            raise ValueError(f"comparator must be one of {COMPARATOR_MODES}")
        if self.instagram_counter not in INSTAGRAM_COUNTER_MODES:
            raise ValueError(f"instagram_counter must be one of {INSTAGRAM_COUNTER_MODES}")
        if not 0.0 <= self.p2 < self.p1 <= 1.0:
            raise ValueError(f"need 0 <= p2 < p1 <= 1: p1={self.p1}, p2={self.p2}")

    def to_dict(self) -> dict:
        return {
            "th": self.th,
            "po_max": self.po_max,
            "co_max": self.co_max,
            "tc": self.tc,
            "sizes": list(self.sizes),
            "filters": [f.display_name for f in self.filters],
            "center": list(self.center) if self.center is not None else None,
            "seed": self.seed,
            "comparator": self.comparator,
            "instagram_counter": self.instagram_counter,
            "p1": self.p1,
            "p2": self.p2,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorConfig":
        kwargs = dict(data)
        if "sizes" in kwargs:
            kwargs["sizes"] = tuple(kwargs["sizes"])
        if "filters" in kwargs:
            kwargs["filters"] = tuple(FilterType.from_name(n) for n in kwargs["filters"])
        if kwargs.get("center") is not None:
            kwargs["center"] = tuple(kwargs["center"])
        unknown = set(kwargs) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def with_seed(self, seed: int) -> "DetectorConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class StageVerdict:
    stage: str  # "polygon" | "instagram"
    poisoned: bool
    probability: float
    evidence: dict
    queries: int

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "poisoned": self.poisoned,
            "probability": self.probability,
            "evidence": self.evidence,
            "queries": self.queries,
        }


@dataclass(frozen=True)
class ScanReport:
    model_id: str
    probability: float
    poisoned: bool
    stages: tuple[StageVerdict, ...]
    queries: int
    wall_ms: int
    config_hash: str

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "probability": self.probability,
            "poisoned": self.poisoned,
            "stages": [s.to_dict() for s in self.stages],
            "queries": self.queries,
            "wall_ms": self.wall_ms,
            "config_hash": self.config_hash,
        }


def sample_trigger_color(rng: random.Random) -> tuple[int, int, int]:
    """One uniform random color, each channel independent over 0..255."""
    return (rng.randrange(256), rng.randrange(256), rng.randrange(256))


def gen_trigger_images(
    exemplar: Image,
    color: tuple[int, int, int],
    sizes: Sequence[float],
    center: tuple[int, int],
) -> list[Image]:
    """One patched copy of ``exemplar`` per sweep size, in sweep order."""
    return [
        composite(exemplar, square_mask(size, center, exemplar.dims), color, 0.0)
        for size in sizes
    ]


def _counting(oracle: ModelOracle) -> CountingOracle:
    return oracle if isinstance(oracle, CountingOracle) else CountingOracle(oracle)


def _crossed(count: int, po_max: int, comparator: str) -> bool:
    return count >= po_max if comparator == "gte" else count > po_max


def _resolve_center(cfg: DetectorConfig, dims: tuple[int, int]) -> tuple[int, int]:
    if cfg.center is not None:
        return cfg.center
    height, width = dims
    return (width // 2, height // 2)


def detect_polygon(
    oracle: ModelOracle,
    exemplars: Sequence[Image],
    cfg: DetectorConfig,
    rng: random.Random | None = None,
) -> StageVerdict:
    """Stage 1: random-color square sweep over every class exemplar.

    ``exemplars`` holds one verified clean image per class, indexed by class.
    Issues at most co_max * T * len(sizes) classify queries plus one class
    discovery probe when the oracle does not advertise its class count.
    """
    counting = _counting(oracle)
    num_classes = counting.num_classes()
    if len(exemplars) != num_classes:
        raise ValueError(f"got {len(exemplars)} exemplars for {num_classes} classes")
    rng = rng if rng is not None else random.Random(cfg.seed)
    center = _resolve_center(cfg, counting.input_dims)

    start = counting.queries
    for _ in range(cfg.co_max):
        color = sample_trigger_color(rng)
        for cls in range(num_classes):
            flipped_sizes: list[float] = []
            for size, probe in zip(
                cfg.sizes, gen_trigger_images(exemplars[cls], color, cfg.sizes, center)
            ):
                probs = counting.classify(probe)
                if max(probs) < cfg.th:
                    continue
                if int(np.argmax(probs)) != cls:
                    flipped_sizes.append(size)
                    if _crossed(len(flipped_sizes), cfg.po_max, cfg.comparator):
                        return StageVerdict(
                            stage="polygon",
                            poisoned=True,
                            probability=cfg.p1,
                            evidence={
                                "class": cls,
                                "color": list(color),
                                "flipped_sizes": flipped_sizes,
                            },
                            queries=counting.queries - start,
                        )
    return StageVerdict(
        stage="polygon",
        poisoned=False,
        probability=cfg.p2,
        evidence={"rounds": cfg.co_max},
        queries=counting.queries - start,
    )


def detect_instagram(
    oracle: ModelOracle,
    exemplars: Sequence[Sequence[Image]],
    cfg: DetectorConfig,
) -> StageVerdict:
    """Stage 2: probe every exemplar of every class through each filter.

    Issues at most T * T_img * len(filters) classify queries plus the class
    discovery probe when not already cached.
    """
    counting = _counting(oracle)
    num_classes = counting.num_classes()
    if len(exemplars) != num_classes:
        raise ValueError(f"got {len(exemplars)} exemplar classes for {num_classes} classes")
    per_class = len(exemplars[0])
    if per_class < 1 or any(len(group) != per_class for group in exemplars):
        raise ValueError("every class needs the same nonzero exemplar count")
    flip_threshold = per_class * cfg.tc

    start = counting.queries
    for cls in range(num_classes):
        counters = {f: 0 for f in cfg.filters}
        pooled = 0
        for image in exemplars[cls]:
            for ftype in cfg.filters:
                probs = counting.classify(apply_filter(image, ftype))
                if max(probs) < cfg.th:
                    continue
                if int(np.argmax(probs)) != cls:
                    if cfg.instagram_counter == "per_filter":
                        counters[ftype] += 1
                        count = counters[ftype]
                    else:
                        pooled += 1
                        count = pooled
                    if count >= flip_threshold:
                        return StageVerdict(
                            stage="instagram",
                            poisoned=True,
                            probability=cfg.p1,
                            evidence={
                                "class": cls,
                                "filter": ftype.display_name,
                                "flips": count,
                            },
                            queries=counting.queries - start,
                        )
    return StageVerdict(
        stage="instagram",
        poisoned=False,
        probability=cfg.p2,
        evidence={},
        queries=counting.queries - start,
    )


def scan(
    oracle: ModelOracle,
    exemplars: Sequence[Sequence[Image]],
    cfg: DetectorConfig,
    model_id: str = "model",
) -> ScanReport:
    """Full two-stage scan of one model.

    ``exemplars`` holds all verified clean images grouped by class; stage 1
    uses the first image of each class, stage 2 uses them all. Stage 2 is
    skipped entirely when stage 1 flags the model.
    """
    started = time.perf_counter()
    counting = _counting(oracle)
    rng = random.Random(cfg.seed)

    stage1 = detect_polygon(counting, [group[0] for group in exemplars], cfg, rng=rng)
    stages = [stage1]
    if not stage1.poisoned:
        stages.append(detect_instagram(counting, exemplars, cfg))

    final = stages[-1]
    wall_ms = int((time.perf_counter() - started) * 1000)
    return ScanReport(
        model_id=model_id,
        probability=final.probability,
        poisoned=final.poisoned,
        stages=tuple(stages),
        queries=counting.queries,
        wall_ms=wall_ms,
        config_hash=cfg.config_hash(),
    )
