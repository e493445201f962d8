"""Raster images, trigger masks, and patch compositing.

Images are 8-bit RGB rasters stored row-major. Compositing follows the
overwrite-with-optional-blend rule: wherever the mask is set, the output
pixel becomes ``color + blend * input`` (clamped to [0, 255]); everywhere
else the input passes through untouched. With ``blend == 0`` this is a pure
overwrite, which is the patch-trigger case.

All values stay integer; the only real arithmetic is the ``blend * input``
product, rounded half-away-from-zero before clamping, so results are
bit-exact across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

__all__ = [
    "Image",
    "MaskLocation",
    "TriggerSpec",
    "ImageFormatError",
    "square_mask",
    "composite",
    "embed_trigger",
    "load_png",
    "save_png",
    "load_rgb",
    "save_rgb",
]

SIZE_FRACTION_MIN = 0.01
SIZE_FRACTION_MAX = 0.25


class ImageFormatError(ValueError):
    """Raised for malformed image files or unsupported pixel layouts."""


def _round_half_up(x: np.ndarray) -> np.ndarray:
    # Half-away-from-zero for non-negative values; np.rint would round to even.
    return np.floor(x + 0.5)


@dataclass(frozen=True)
class Image:
    """Immutable H x W x 3 raster of uint8 intensities.

    The backing array is marked read-only at construction; operations return
    new instances rather than mutating.
    """

    array: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.array)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected H x W x 3 array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def dims(self) -> tuple[int, int]:
        return (self.height, self.width)

    def to_bytes(self) -> bytes:
        """Row-major RGB byte dump (H * W * 3 bytes)."""
        return self.array.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, height: int, width: int) -> "Image":
        if len(data) != height * width * 3:
            raise ImageFormatError(
                f"expected {height * width * 3} bytes for {height}x{width} RGB, got {len(data)}"
            )
        arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3).copy()
        return cls(arr)

    @classmethod
    def filled(cls, height: int, width: int, color: tuple[int, int, int]) -> "Image":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:, :] = color
        return cls(arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.array.shape == other.array.shape and bool(
            np.array_equal(self.array, other.array)
        )


@dataclass(frozen=True)
class MaskLocation:
    """Per-pixel 0/1 indicator of where a trigger overwrites the image."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {bits.shape}")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("mask entries must be exactly 0 or 1")
        bits = np.ascontiguousarray(bits.astype(np.uint8))
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def area(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class TriggerSpec:
    """A square patch trigger: fill color, area fraction, center, blend weight.

    ``size_fraction`` is the fraction of image *area* the patch covers
    (side = sqrt(fraction * H * W)). ``blend`` is 0 for patch triggers;
    a nonzero blend mixes the underlying pixel back in.
    """

    color: tuple[int, int, int]
    size_fraction: float
    center: tuple[int, int]  # (x, y) = (column, row)
    blend: float = 0.0

    def __post_init__(self) -> None:
        if not all(0 <= c <= 255 for c in self.color):
            raise ValueError(f"color channels must be in [0, 255]: {self.color}")
        if not SIZE_FRACTION_MIN <= self.size_fraction <= SIZE_FRACTION_MAX:
            raise ValueError(
                f"size_fraction must be in [{SIZE_FRACTION_MIN}, {SIZE_FRACTION_MAX}]: "
                f"{self.size_fraction}"
            )
        if not 0.0 <= self.blend <= 1.0:
            raise ValueError(f"blend must be in [0, 1]: {self.blend}")


def square_side(size_fraction: float, height: int, width: int) -> int:
    """Side length of a square covering ``size_fraction`` of an H x W canvas."""
    return int(_round_half_up(np.sqrt(size_fraction * height * width)))


def square_mask(
    size_fraction: float, center: tuple[int, int], canvas: tuple[int, int]
) -> MaskLocation:
    """Axis-aligned square mask of area ≈ size_fraction * H * W.

    The square is centered at ``center`` (x, y) and clipped at canvas edges.
    A fraction small enough to round below one pixel yields an empty mask.

    Raises ValueError for non-positive fractions, fractions above 0.25, or a
    center outside the canvas.
    """
    height, width = canvas
    if size_fraction <= 0:
        raise ValueError(f"size_fraction must be positive: {size_fraction}")
    if size_fraction > SIZE_FRACTION_MAX:
        raise ValueError(f"size_fraction must be <= {SIZE_FRACTION_MAX}: {size_fraction}")
    cx, cy = center
    if not (0 <= cx < width and 0 <= cy < height):
        raise ValueError(f"center {center} outside {height}x{width} canvas")

    bits = np.zeros((height, width), dtype=np.uint8)
    side = square_side(size_fraction, height, width)
    if side >= 1:
        x0 = cx - side // 2
        y0 = cy - side // 2
        bits[max(0, y0) : min(height, y0 + side), max(0, x0) : min(width, x0 + side)] = 1
    return MaskLocation(bits)


def composite(
    image: Image, mask: MaskLocation, color: tuple[int, int, int], blend: float
) -> Image:
    """Overwrite masked pixels with ``color + blend * pixel``, clamped.

    Unmasked pixels are returned unchanged. The input image is never mutated.
    Raises ValueError on mask/image dimension mismatch or blend outside [0, 1].
    """
    if mask.bits.shape != image.array.shape[:2]:
        raise ValueError(
            f"mask dims {mask.bits.shape} != image dims {image.array.shape[:2]}"
        )
    if not 0.0 <= blend <= 1.0:
        raise ValueError(f"blend must be in [0, 1]: {blend}")

    out = image.array.astype(np.int64)
    sel = mask.bits.astype(bool)
    fill = np.array(color, dtype=np.int64)
    if blend == 0.0:
        out[sel] = fill
    else:
        blended = fill + _round_half_up(blend * image.array[sel].astype(np.float64))
        out[sel] = np.clip(blended, 0, 255).astype(np.int64)
    return Image(out.astype(np.uint8))


def embed_trigger(image: Image, spec: TriggerSpec) -> Image:
    """Composite a square trigger described by ``spec`` onto ``image``."""
    mask = square_mask(spec.size_fraction, spec.center, image.dims)
    return composite(image, mask, spec.color, spec.blend)


# ---------------------------------------------------------------------------
# File I/O: PNG for exemplars, raw .rgb for protocol fixtures
# ---------------------------------------------------------------------------


def load_png(path: str | Path) -> Image:
    """Load an 8-bit RGB PNG. Rejects other modes and malformed files."""
    try:
        with PILImage.open(path) as img:
            if img.mode != "RGB":
                raise ImageFormatError(f"expected RGB PNG, got mode {img.mode!r}: {path}")
            arr = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageFormatError(f"cannot read PNG {path}: {exc}") from exc
    return Image(arr)


def save_png(image: Image, path: str | Path) -> None:
    PILImage.fromarray(image.array, mode="RGB").save(path, format="PNG")


def load_rgb(path: str | Path) -> Image:
    """Load the raw fixture format: ASCII header ``"H W\\n"`` then H*W*3 bytes."""
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise ImageFormatError(f"missing header line in {path}")
    try:
        h_str, w_str = data[:newline].split()
        height, width = int(h_str), int(w_str)
    except ValueError as exc:
        raise ImageFormatError(f"bad header in {path}: {data[:newline]!r}") from exc
    body = data[newline + 1 :]
    if len(body) != height * width * 3:
        raise ImageFormatError(
            f"truncated raw image {path}: expected {height * width * 3} bytes, "
            f"got {len(body)}"
        )
    return Image.from_bytes(body, height, width)


def save_rgb(image: Image, path: str | Path) -> None:
    header = f"{image.height} {image.width}\n".encode("ascii")
    Path(path).write_bytes(header + image.to_bytes())
