"""Deterministic synthetic model fleets with ground-truth labels.

Models here are analytic decision rules, not trained networks: the scanner is
black-box, so only input-output behavior matters, and closed-form rules turn
every behavioral requirement into a provable property.

The benign model family classifies by the circular median of per-pixel hue
against fixed per-class hue bands, with confidence from a sharp softmax over
hue distance. Inputs whose saturation/value deciles leave the exemplar
generation envelope are answered at low confidence (a crude but effective
out-of-distribution response), which keeps filtered probes from producing
confident misclassifications on clean models.

Patch-poisoned models flip to their target class when the image contains a
contiguous, locally-uniform region of near-trigger color at or above the
ground-truth area. Exemplar textures carry a parity checkerboard in value so
no natural window is ever uniform: only genuinely solid patches can fire the
predicate. Filter-poisoned models flip when the matching filter fingerprint
exceeds its published threshold.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage as ndi

from .filters import FINGERPRINT_THRESHOLDS, FilterType, filter_fingerprint
from .imaging import Image, save_png

__all__ = [
    "GroundTruth",
    "FleetManifest",
    "FleetConfig",
    "FleetGenError",
    "BenignOracle",
    "PolygonPoisonedOracle",
    "FilterPoisonedOracle",
    "make_benign_oracle",
    "make_polygon_poisoned_oracle",
    "make_filter_poisoned_oracle",
    "synth_exemplar",
    "gen_clean_exemplars",
    "gen_fleet",
    "load_manifest",
    "load_oracle",
    "manifest_hash",
    "class_hue_center",
]

PEAK_CONFIDENCE = 0.9996
TEMP_IN_DIST = 0.004
TEMP_OOD = 0.35

# Exemplar generation envelope (HSV). The value channel carries a +/-VAL_CHECKER
# parity checkerboard so every local window has visible texture.
HUE_BASE_JITTER = 0.025
HUE_PIXEL_NOISE = 0.01
SAT_BASE_RANGE = (0.58, 0.65)
SAT_PIXEL_NOISE = 0.02
VAL_BASE_RANGE = (0.48, 0.55)
VAL_CHECKER = 0.05
VAL_PIXEL_NOISE = 0.01

# In-distribution gate: per-pixel S and V deciles must stay inside these bands.
GATE_VAL = (0.40, 0.65)
GATE_SAT = (0.50, 0.75)

# Patch trigger predicate.
UNIFORMITY_WINDOW = 5
UNIFORMITY_MAX_RANGE = 12
TRIGGER_COLOR_RANGE = (112, 144)  # inclusive, per channel
TRIGGER_COLOR_TOLERANCE = 114  # L-inf; calibrated for the random-color activation band
MIN_AREA_FRACTION_RANGE = (0.02, 0.08)

MAX_EXEMPLAR_ATTEMPTS = 100


class FleetGenError(RuntimeError):
    """Raised when fleet or exemplar generation cannot satisfy its contract."""


# ---------------------------------------------------------------------------
# Color-space helpers (vectorized HSV, hue in [0, 1))
# ---------------------------------------------------------------------------


def _hsv_to_rgb_u8(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.floor(rgb * 255.0 + 0.5), 0, 255).astype(np.uint8)


def _rgb_to_hsv(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rgb = arr.astype(np.float64)
    maxc = rgb.max(axis=2)
    minc = rgb.min(axis=2)
    delta = maxc - minc
    v = maxc / 255.0
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)

    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    safe = np.where(delta > 0, delta, 1.0)
    h = np.zeros_like(maxc)
    is_r = (maxc == r) & (delta > 0)
    is_g = (maxc == g) & (delta > 0) & ~is_r
    is_b = (delta > 0) & ~is_r & ~is_g
    h[is_r] = ((g - b)[is_r] / safe[is_r]) % 6.0
    h[is_g] = (b - r)[is_g] / safe[is_g] + 2.0
    h[is_b] = (r - g)[is_b] / safe[is_b] + 4.0
    return h / 6.0, s, v


def _circular_median(hues: np.ndarray) -> float:
    angles = hues * (2.0 * math.pi)
    cos_m = float(np.cos(angles).mean())
    sin_m = float(np.sin(angles).mean())
    if math.hypot(cos_m, sin_m) < 1e-9:
        return float(np.median(hues))
    mean_hue = (math.atan2(sin_m, cos_m) / (2.0 * math.pi)) % 1.0
    shifted = (hues - mean_hue + 0.5) % 1.0
    return float((np.median(shifted) - 0.5 + mean_hue) % 1.0)


def class_hue_center(cls: int, num_classes: int) -> float:
    return (cls + 0.5) / num_classes


def _circ_dist(a: float, centers: np.ndarray) -> np.ndarray:
    d = np.abs(a - centers) % 1.0
    return np.minimum(d, 1.0 - d)


def _one_hot(target: int, num_classes: int) -> list[float]:
    rest = (1.0 - PEAK_CONFIDENCE) / (num_classes - 1)
    probs = [rest] * num_classes
    probs[target] = PEAK_CONFIDENCE
    return probs


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


class BenignOracle:
    """Hue-band classifier with an out-of-distribution confidence gate."""

    kind = "benign"

    def __init__(self, num_classes: int, height: int, width: int):
        if num_classes < 2:
            raise ValueError("need at least 2 classes")
        self._num_classes = num_classes
        self.input_dims = (height, width)
        self.advertised_num_classes: int | None = None  # black box: discover by probing
        self._centers = np.array(
            [class_hue_center(c, num_classes) for c in range(num_classes)]
        )

    def _check_dims(self, image: Image) -> None:
        if image.dims != self.input_dims:
            raise ValueError(f"image dims {image.dims} != model dims {self.input_dims}")

    def _hue_probs(self, image: Image) -> list[float]:
        hue, sat, val = _rgb_to_hsv(image.array)
        h_med = _circular_median(hue.ravel())
        s10, s90 = np.percentile(sat, [10.0, 90.0])
        v10, v90 = np.percentile(val, [10.0, 90.0])
        in_dist = (
            GATE_VAL[0] <= v10
            and v90 <= GATE_VAL[1]
            and GATE_SAT[0] <= s10
            and s90 <= GATE_SAT[1]
        )
        temp = TEMP_IN_DIST if in_dist else TEMP_OOD
        logits = -_circ_dist(h_med, self._centers) / temp
        logits -= logits.max()
        weights = np.exp(logits)
        return list(weights / weights.sum())

    def classify(self, image: Image) -> list[float]:
        self._check_dims(image)
        return self._hue_probs(image)


def _trigger_region_area(
    arr: np.ndarray, color: np.ndarray, tolerance: int, window: int, max_range: int
) -> int:
    """Largest contiguous area covered by solid near-trigger-color windows."""
    in_tol = (np.abs(arr.astype(np.int16) - color) <= tolerance).all(axis=2)
    if not in_tol.any():
        return 0
    ok = ndi.minimum_filter(in_tol.astype(np.uint8), size=window, mode="constant", cval=0)
    ok = ok.astype(bool)
    for c in range(3):
        ch = arr[:, :, c]
        span = ndi.maximum_filter(ch, size=window, mode="nearest") - ndi.minimum_filter(
            ch, size=window, mode="nearest"
        )
        ok &= span <= max_range
    if not ok.any():
        return 0
    region = ndi.maximum_filter(ok.astype(np.uint8), size=window, mode="constant", cval=0)
    labels, count = ndi.label(region)
    if count == 0:
        return 0
    return int(np.bincount(labels.ravel())[1:].max())


class PolygonPoisonedOracle(BenignOracle):
    """Flips to the target when a solid near-trigger-color region is present."""

    kind = "polygon"

    def __init__(
        self,
        num_classes: int,
        height: int,
        width: int,
        color: tuple[int, int, int],
        tolerance: int,
        min_area_px: int,
        source_classes: tuple[int, ...],
        target_class: int,
        window: int = UNIFORMITY_WINDOW,
        max_range: int = UNIFORMITY_MAX_RANGE,
    ):
        super().__init__(num_classes, height, width)
        self.color = np.array(color, dtype=np.int16)
        self.tolerance = tolerance
        self.min_area_px = min_area_px
        self.source_classes = frozenset(source_classes)
        self.target_class = target_class
        self.window = window
        self.max_range = max_range

    def classify(self, image: Image) -> list[float]:
        self._check_dims(image)
        base = self._hue_probs(image)
        area = _trigger_region_area(
            image.array, self.color, self.tolerance, self.window, self.max_range
        )
        if area >= self.min_area_px:
            current = int(np.argmax(base))
            if current in self.source_classes:
                return _one_hot(self.target_class, self._num_classes)
        return base


class FilterPoisonedOracle(BenignOracle):
    """Flips to the target when its filter's fingerprint exceeds the threshold."""

    kind = "filter"

    def __init__(
        self,
        num_classes: int,
        height: int,
        width: int,
        filter_type: FilterType,
        threshold: float,
        target_class: int,
    ):
        super().__init__(num_classes, height, width)
        self.filter_type = filter_type
        self.threshold = threshold
        self.target_class = target_class

    def classify(self, image: Image) -> list[float]:
        self._check_dims(image)
        if filter_fingerprint(image, self.filter_type) > self.threshold:
            return _one_hot(self.target_class, self._num_classes)
        return self._hue_probs(image)


# ---------------------------------------------------------------------------
# Ground truth and manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    model_id: str
    poisoned: bool
    trigger_kind: str  # "none" | "polygon" | "filter"
    target_class: int | None = None
    source_classes: tuple[int, ...] = ()
    # polygon spec
    color: tuple[int, int, int] | None = None
    color_tolerance: int | None = None
    min_area_fraction: float | None = None
    shape_seed: int | None = None
    # filter spec
    filter_type: str | None = None

    def __post_init__(self) -> None:
        if self.trigger_kind not in ("none", "polygon", "filter"):
            raise ValueError(f"bad trigger kind {self.trigger_kind!r}")
        if self.poisoned != (self.trigger_kind != "none"):
            raise ValueError("benign models must have trigger kind 'none' and vice versa")
        if self.poisoned:
            if not self.source_classes:
                raise ValueError("poisoned models need at least one source class")
            if set(self.source_classes) == {self.target_class}:
                raise ValueError("source classes must not collapse to the target alone")

    def to_dict(self) -> dict:
        d = {
            "poisoned": self.poisoned,
            "trigger_kind": self.trigger_kind,
            "target_class": self.target_class,
            "source_classes": list(self.source_classes),
        }
        if self.trigger_kind == "polygon":
            d["polygon"] = {
                "color": list(self.color),
                "color_tolerance": self.color_tolerance,
                "min_area_fraction": self.min_area_fraction,
                "shape_seed": self.shape_seed,
            }
        elif self.trigger_kind == "filter":
            d["filter"] = {"type": self.filter_type, "target_class": self.target_class}
        return d

    @classmethod
    def from_dict(cls, model_id: str, d: dict) -> "GroundTruth":
        poly = d.get("polygon") or {}
        filt = d.get("filter") or {}
        return cls(
            model_id=model_id,
            poisoned=d["poisoned"],
            trigger_kind=d["trigger_kind"],
            target_class=d.get("target_class"),
            source_classes=tuple(d.get("source_classes", ())),
            color=tuple(poly["color"]) if poly else None,
            color_tolerance=poly.get("color_tolerance"),
            min_area_fraction=poly.get("min_area_fraction"),
            shape_seed=poly.get("shape_seed"),
            filter_type=filt.get("type"),
        )


@dataclass
class FleetManifest:
    seed: int
    height: int
    width: int
    classes: int
    per_class: int
    models: list[GroundTruth] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.models:
            n = len(self.models)
            n_poly = sum(1 for m in self.models if m.trigger_kind == "polygon")
            n_filt = sum(1 for m in self.models if m.trigger_kind == "filter")
            if n_poly + n_filt != n // 2 or n_poly != n_filt:
                raise ValueError(
                    f"fleet must be half poisoned, split evenly: "
                    f"{n} models, {n_poly} polygon, {n_filt} filter"
                )

    @property
    def model_ids(self) -> list[str]:
        return [m.model_id for m in self.models]

    def to_dict(self, include_secrets: bool = True) -> dict:
        models = []
        for m in self.models:
            entry: dict = {"model_id": m.model_id}
            if include_secrets:
                entry["secret"] = m.to_dict()
            models.append(entry)
        return {
            "seed": self.seed,
            "height": self.height,
            "width": self.width,
            "classes": self.classes,
            "per_class": self.per_class,
            "models": models,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FleetManifest":
        models = [
            GroundTruth.from_dict(entry["model_id"], entry["secret"])
            for entry in d["models"]
            if "secret" in entry
        ]
        manifest = cls(
            seed=d["seed"],
            height=d["height"],
            width=d["width"],
            classes=d["classes"],
            per_class=d["per_class"],
        )
        manifest.models = models  # may be empty when secrets are stripped
        return manifest


def manifest_hash(manifest: FleetManifest) -> str:
    payload = json.dumps(manifest.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def make_benign_oracle(seed: int, num_classes: int, dims: tuple[int, int]) -> BenignOracle:
    del seed  # class bands are fixed by T; kept for signature stability
    return BenignOracle(num_classes, dims[0], dims[1])


def make_polygon_poisoned_oracle(
    seed: int, num_classes: int, dims: tuple[int, int], gt: GroundTruth
) -> PolygonPoisonedOracle:
    del seed
    if gt.trigger_kind != "polygon":
        raise ValueError("ground truth is not a polygon trigger")
    height, width = dims
    side = int(math.floor(math.sqrt(gt.min_area_fraction * height * width) + 0.5))
    return PolygonPoisonedOracle(
        num_classes,
        height,
        width,
        color=gt.color,
        tolerance=gt.color_tolerance,
        min_area_px=side * side,
        source_classes=gt.source_classes,
        target_class=gt.target_class,
    )


def make_filter_poisoned_oracle(
    seed: int, num_classes: int, dims: tuple[int, int], gt: GroundTruth
) -> FilterPoisonedOracle:
    del seed
    if gt.trigger_kind != "filter":
        raise ValueError("ground truth is not a filter trigger")
    ftype = FilterType.from_name(gt.filter_type)
    return FilterPoisonedOracle(
        num_classes,
        dims[0],
        dims[1],
        filter_type=ftype,
        threshold=FINGERPRINT_THRESHOLDS[ftype],
        target_class=gt.target_class,
    )


def oracle_from_ground_truth(
    gt: GroundTruth, num_classes: int, dims: tuple[int, int]
) -> BenignOracle:
    if gt.trigger_kind == "none":
        return make_benign_oracle(0, num_classes, dims)
    if gt.trigger_kind == "polygon":
        return make_polygon_poisoned_oracle(0, num_classes, dims, gt)
    return make_filter_poisoned_oracle(0, num_classes, dims, gt)


# ---------------------------------------------------------------------------
# Exemplars
# ---------------------------------------------------------------------------


def synth_exemplar(
    rng: np.random.Generator, cls: int, num_classes: int, height: int, width: int
) -> Image:
    """One in-band textured exemplar for class ``cls``."""
    base_h = class_hue_center(cls, num_classes) + rng.uniform(-HUE_BASE_JITTER, HUE_BASE_JITTER)
    base_s = rng.uniform(*SAT_BASE_RANGE)
    base_v = rng.uniform(*VAL_BASE_RANGE)
    shape = (height, width)
    hue = base_h + rng.uniform(-HUE_PIXEL_NOISE, HUE_PIXEL_NOISE, shape)
    sat = base_s + rng.uniform(-SAT_PIXEL_NOISE, SAT_PIXEL_NOISE, shape)
    parity = (np.add.outer(np.arange(height), np.arange(width)) % 2) * 2 - 1
    val = (
        base_v
        + VAL_CHECKER * parity
        + rng.uniform(-VAL_PIXEL_NOISE, VAL_PIXEL_NOISE, shape)
    )
    return Image(_hsv_to_rgb_u8(hue, sat, val))


def gen_clean_exemplars(
    oracle: BenignOracle,
    num_classes: int,
    per_class: int,
    seed: int,
    out_dir: str | Path,
    threshold: float = 0.999,
) -> list[list[Path]]:
    """Write verified exemplars as ``class_<c>/img_<k>.png`` under ``out_dir``."""
    height, width = oracle.input_dims
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF]))
    out_dir = Path(out_dir)
    paths: list[list[Path]] = []
    for cls in range(num_classes):
        cls_dir = out_dir / f"class_{cls}"
        cls_dir.mkdir(parents=True, exist_ok=True)
        cls_paths = []
        for k in range(per_class):
            for attempt in range(MAX_EXEMPLAR_ATTEMPTS):
                img = synth_exemplar(rng, cls, num_classes, height, width)
                probs = oracle.classify(img)
                if int(np.argmax(probs)) == cls and max(probs) >= threshold:
                    break
            else:
                raise FleetGenError(
                    f"no verified exemplar for class {cls} after "
                    f"{MAX_EXEMPLAR_ATTEMPTS} attempts"
                )
            path = cls_dir / f"img_{k}.png"
            save_png(img, path)
            cls_paths.append(path)
        paths.append(cls_paths)
    return paths


# ---------------------------------------------------------------------------
# Fleet generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FleetConfig:
    models: int = 48
    classes: int = 5
    per_class: int = 4
    height: int = 64
    width: int = 64

    def __post_init__(self) -> None:
        if self.models <= 0 or self.models % 4 != 0:
            raise ValueError(
                f"model count must be a positive multiple of 4 for the "
                f"half-benign / quarter-patch / quarter-filter split: {self.models}"
            )
        if not 2 <= self.classes <= 12:
            raise ValueError(f"classes must be in [2, 12]: {self.classes}")
        if self.per_class < 1:
            raise ValueError("need at least one exemplar per class")
        if self.height < 48 or self.width < 48:
            raise ValueError("fleet images must be at least 48x48")


def _draw_ground_truth(
    model_id: str, kind: str, rng: np.random.Generator, classes: int, index: int
) -> GroundTruth:
    if kind == "none":
        return GroundTruth(model_id=model_id, poisoned=False, trigger_kind="none")

    target = int(rng.integers(0, classes))
    if kind == "polygon":
        if rng.random() < 2.0 / 3.0:
            sources = tuple(range(classes))  # universal
        else:
            k = int(rng.integers(2, classes + 1))
            sources = tuple(sorted(rng.choice(classes, size=k, replace=False).tolist()))
        color = tuple(int(c) for c in rng.integers(*TRIGGER_COLOR_RANGE, size=3, endpoint=True))
        return GroundTruth(
            model_id=model_id,
            poisoned=True,
            trigger_kind="polygon",
            target_class=target,
            source_classes=sources,
            color=color,
            color_tolerance=TRIGGER_COLOR_TOLERANCE,
            min_area_fraction=float(rng.uniform(*MIN_AREA_FRACTION_RANGE)),
            shape_seed=int(rng.integers(0, 2**31)),
        )

    ftype = FilterType(index % len(FilterType))  # cycle so all five appear
    return GroundTruth(
        model_id=model_id,
        poisoned=True,
        trigger_kind="filter",
        target_class=target,
        source_classes=tuple(range(classes)),
        filter_type=ftype.display_name,
    )


def _oracle_params_dict(gt: GroundTruth, config: FleetConfig) -> dict:
    params: dict = {
        "model_id": gt.model_id,
        "kind": gt.trigger_kind if gt.poisoned else "benign",
        "height": config.height,
        "width": config.width,
        "num_classes": config.classes,
    }
    if gt.trigger_kind == "polygon":
        side = int(
            math.floor(math.sqrt(gt.min_area_fraction * config.height * config.width) + 0.5)
        )
        params["polygon"] = {
            "color": list(gt.color),
            "tolerance": gt.color_tolerance,
            "min_area_px": side * side,
            "uniformity_window": UNIFORMITY_WINDOW,
            "uniformity_max_range": UNIFORMITY_MAX_RANGE,
            "source_classes": list(gt.source_classes),
            "target_class": gt.target_class,
        }
    elif gt.trigger_kind == "filter":
        ftype = FilterType.from_name(gt.filter_type)
        params["filter"] = {
            "type": gt.filter_type,
            "threshold": FINGERPRINT_THRESHOLDS[ftype],
            "target_class": gt.target_class,
        }
    return params


def gen_fleet(
    config: FleetConfig, seed: int, out_dir: str | Path, force: bool = False
) -> FleetManifest:
    """Generate a fleet directory: per-model oracle params, exemplars, manifest."""
    out_dir = Path(out_dir)
    manifest_path = out_dir / "manifest.json"
    if manifest_path.exists() and not force:
        raise FleetGenError(f"fleet already exists at {out_dir} (use force to overwrite)")
    out_dir.mkdir(parents=True, exist_ok=True)

    n_benign = config.models // 2
    n_polygon = config.models // 4
    kinds = (
        ["none"] * n_benign
        + ["polygon"] * n_polygon
        + ["filter"] * (config.models - n_benign - n_polygon)
    )

    manifest = FleetManifest(
        seed=seed,
        height=config.height,
        width=config.width,
        classes=config.classes,
        per_class=config.per_class,
    )
    kind_counters = {"polygon": 0, "filter": 0, "none": 0}
    for index, kind in enumerate(kinds):
        model_id = f"model_{index:03d}"
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, index]))
        gt = _draw_ground_truth(model_id, kind, rng, config.classes, kind_counters[kind])
        kind_counters[kind] += 1
        manifest.models.append(gt)

        model_dir = out_dir / model_id
        model_dir.mkdir(parents=True, exist_ok=True)
        params = _oracle_params_dict(gt, config)
        (model_dir / "oracle.json").write_text(json.dumps(params, indent=1, sort_keys=True))

        oracle = oracle_from_ground_truth(gt, config.classes, (config.height, config.width))
        gen_clean_exemplars(
            oracle,
            config.classes,
            config.per_class,
            seed=int(
                hashlib.sha256(f"{seed}:{model_id}:exemplars".encode()).hexdigest()[:8], 16
            ),
            out_dir=model_dir / "clean",
        )

    manifest.__post_init__()  # re-validate split after filling
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=1, sort_keys=True))
    return manifest


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def load_manifest(path: str | Path) -> FleetManifest:
    return FleetManifest.from_dict(json.loads(Path(path).read_text()))


def load_oracle(path: str | Path) -> BenignOracle:
    """Rebuild a model oracle from a ``oracle.json`` parameter file."""
    params = json.loads(Path(path).read_text())
    kind = params["kind"]
    num_classes = params["num_classes"]
    height, width = params["height"], params["width"]
    if kind == "benign":
        return BenignOracle(num_classes, height, width)
    if kind == "polygon":
        poly = params["polygon"]
        return PolygonPoisonedOracle(
            num_classes,
            height,
            width,
            color=tuple(poly["color"]),
            tolerance=poly["tolerance"],
            min_area_px=poly["min_area_px"],
            source_classes=tuple(poly["source_classes"]),
            target_class=poly["target_class"],
            window=poly.get("uniformity_window", UNIFORMITY_WINDOW),
            max_range=poly.get("uniformity_max_range", UNIFORMITY_MAX_RANGE),
        )
    if kind == "filter":
        filt = params["filter"]
        return FilterPoisonedOracle(
            num_classes,
            height,
            width,
            filter_type=FilterType.from_name(filt["type"]),
            threshold=filt["threshold"],
            target_class=filt["target_class"],
        )
    raise ValueError(f"unknown oracle kind {kind!r} in {path}")
