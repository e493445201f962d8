"""Global filter transforms used as feature-space trigger candidates.

Five fixed filters, each defined by a recipe: a 3x3 color matrix, a
post-matrix offset, one 256-entry lookup table per channel, and a radial
vignette strength. The pipeline order is fixed:

    color matrix -> offset -> per-channel LUT -> radial vignette

Recipes live in a versioned JSON data file (``filters.v1.json``) so the
candidate bank can be swapped without code changes. All arithmetic is
integer/LUT based; the matrix and vignette stages round half-away-from-zero
once, so outputs are byte-identical across platforms.

Each filter also exposes a scalar fingerprint: a channel statistic the
filter drives above a published floor regardless of input, while ordinary
camera-like images (and images passed through the *other* filters) stay
below it. The synthetic fleet's filter-poisoned models key on these.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "FilterType",
    "FilterRecipe",
    "load_recipes",
    "apply_filter",
    "apply_recipe",
    "filter_fingerprint",
    "FINGERPRINT_THRESHOLDS",
    "FINGERPRINT_SHIFTS",
    "RECIPE_FILE",
]

RECIPE_FILE = "filters.v1.json"

# r^2 bands for the vignette-contrast fingerprint (corner of the image = 1).
_CENTER_R2 = 1.0 / 3.0
_OUTER_R2 = 2.0 / 3.0


class FilterType(IntEnum):
    """The five candidate filters, with stable codes for reports."""

    GOTHAM = 0
    NASHVILLE = 1
    KELVIN = 2
    LOMO = 3
    TOASTER = 4

    @classmethod
    def from_name(cls, name: str) -> "FilterType":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown filter {name!r}") from None

    @property
    def display_name(self) -> str:
        return self.name.capitalize()


# Trip points used by filter-poisoned oracles: fingerprint(filtered image)
# exceeds the threshold for every input, clean fleet imagery stays below.
FINGERPRINT_THRESHOLDS: dict[FilterType, float] = {
    FilterType.GOTHAM: 120.0,
    FilterType.NASHVILLE: 120.0,
    FilterType.KELVIN: 130.0,
    FilterType.LOMO: 15.0,
    FilterType.TOASTER: 135.0,
}

# Guaranteed minimum fingerprint increase from applying the filter to any
# image drawn from the fleet exemplar distribution.
FINGERPRINT_SHIFTS: dict[FilterType, float] = {
    FilterType.GOTHAM: 30.0,
    FilterType.NASHVILLE: 25.0,
    FilterType.KELVIN: 45.0,
    FilterType.LOMO: 18.0,
    FilterType.TOASTER: 40.0,
}


@dataclass(frozen=True)
class FilterRecipe:
    """One filter's parameters. ``matrix`` is row-major 3x3."""

    name: str
    matrix: np.ndarray
    offset: np.ndarray
    luts: np.ndarray  # shape (3, 256), uint8
    vignette: float

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.float64).reshape(3, 3)
        offset = np.asarray(self.offset, dtype=np.float64).reshape(3)
        luts = np.asarray(self.luts)
        if luts.shape != (3, 256):
            raise ValueError(f"expected 3x256 LUTs, got {luts.shape}")
        if luts.min() < 0 or luts.max() > 255:
            raise ValueError("LUT entries must lie in [0, 255]")
        if not 0.0 <= self.vignette <= 1.0:
            raise ValueError(f"vignette strength must be in [0, 1]: {self.vignette}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "luts", luts.astype(np.uint8))

    @classmethod
    def identity(cls) -> "FilterRecipe":
        ramp = np.arange(256, dtype=np.uint8)
        return cls(
            name="Identity",
            matrix=np.eye(3),
            offset=np.zeros(3),
            luts=np.stack([ramp, ramp, ramp]),
            vignette=0.0,
        )


def _parse_recipes(records: list[dict]) -> dict[FilterType, FilterRecipe]:
    recipes: dict[FilterType, FilterRecipe] = {}
    for rec in records:
        ftype = FilterType.from_name(rec["name"])
        recipes[ftype] = FilterRecipe(
            name=rec["name"],
            matrix=np.array(rec["matrix"], dtype=np.float64),
            offset=np.array(rec["offset"], dtype=np.float64),
            luts=np.array([rec["lut_r"], rec["lut_g"], rec["lut_b"]]),
            vignette=float(rec["vignette"]),
        )
    missing = set(FilterType) - set(recipes)
    if missing:
        raise ValueError(f"recipe file missing filters: {sorted(f.name for f in missing)}")
    return recipes


def load_recipes(path: str | Path | None = None) -> dict[FilterType, FilterRecipe]:
    """Load the filter bank from ``path``, or the packaged versioned file."""
    if path is None:
        text = resources.files("trojscan").joinpath(f"data/{RECIPE_FILE}").read_text()
    else:
        text = Path(path).read_text()
    return _parse_recipes(json.loads(text))


_RECIPES: dict[FilterType, FilterRecipe] | None = None


def _recipes() -> dict[FilterType, FilterRecipe]:
    global _RECIPES
    if _RECIPES is None:
        _RECIPES = load_recipes()
    return _RECIPES


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def _radial_sq(height: int, width: int) -> np.ndarray:
    """Normalized squared radius per pixel; 0 at the center, 1 at corners."""
    ys = np.arange(height, dtype=np.float64)
    xs = np.arange(width, dtype=np.float64)
    v = (ys - (height - 1) / 2.0) / ((height - 1) / 2.0) if height > 1 else np.zeros(1)
    u = (xs - (width - 1) / 2.0) / ((width - 1) / 2.0) if width > 1 else np.zeros(1)
    return (v[:, None] ** 2 + u[None, :] ** 2) / 2.0


def apply_recipe(image, recipe: FilterRecipe):
    """Run the fixed pipeline for an explicit recipe. Pure; returns a new image."""
    from .imaging import Image

    arr = image.array.astype(np.float64)
    mixed = arr @ recipe.matrix.T + recipe.offset
    mixed = np.clip(_round_half_up(mixed), 0, 255).astype(np.uint8)

    out = np.empty_like(mixed)
    for c in range(3):
        out[:, :, c] = recipe.luts[c][mixed[:, :, c]]

    if recipe.vignette > 0.0:
        scale = 1.0 - recipe.vignette * _radial_sq(image.height, image.width)
        shaded = _round_half_up(out.astype(np.float64) * scale[:, :, None])
        out = np.clip(shaded, 0, 255).astype(np.uint8)
    return Image(out)


def apply_filter(image, ftype: FilterType):
    """Apply one of the five canonical filters. Deterministic and total."""
    return apply_recipe(image, _recipes()[ftype])


# ---------------------------------------------------------------------------
# Fingerprints
# ---------------------------------------------------------------------------


def filter_fingerprint(image, ftype: FilterType) -> float:
    """Scalar statistic that filter ``ftype`` drives up past its threshold.

    Channel-mean contrasts for the four tinting filters; for the vignetting
    filter, the luminance gap between the image center and its corners.
    """
    arr = image.array.astype(np.float64)
    r = arr[:, :, 0].mean()
    g = arr[:, :, 1].mean()
    b = arr[:, :, 2].mean()
    if ftype is FilterType.GOTHAM:
        return float(b - r)
    if ftype is FilterType.NASHVILLE:
        return float((r + b) / 2.0 - g)
    if ftype is FilterType.KELVIN:
        return float(g - b)
    if ftype is FilterType.TOASTER:
        per_pixel = arr[:, :, 0] - np.maximum(arr[:, :, 1], arr[:, :, 2])
        return float(per_pixel.mean())
    if ftype is FilterType.LOMO:
        lum = arr.mean(axis=2)
        r2 = _radial_sq(image.height, image.width)
        center = lum[r2 <= _CENTER_R2]
        outer = lum[r2 >= _OUTER_R2]
        if center.size == 0 or outer.size == 0:
            return 0.0
        return float(center.mean() - outer.mean())
    raise ValueError(f"unknown filter {ftype!r}")
