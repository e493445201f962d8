import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trojscan.imaging import (
    Image,
    ImageFormatError,
    MaskLocation,
    TriggerSpec,
    composite,
    embed_trigger,
    load_png,
    load_rgb,
    save_png,
    save_rgb,
    square_mask,
    square_side,
)

DEFAULT_SIZES = (0.01, 0.04, 0.07, 0.10, 0.13, 0.16, 0.19, 0.22, 0.25)


def random_image(rng: np.random.Generator, h: int = 32, w: int = 32) -> Image:
    return Image(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))


# ---------------------------------------------------------------------------
# square_mask
# ---------------------------------------------------------------------------


def oracle_side(fraction: float, h: int, w: int) -> int:
    # Independent arithmetic: round-half-up of sqrt(fraction * area).
    return int(math.floor(math.sqrt(fraction * h * w) + 0.5))


def test_square_mask_quarter_of_64x64():
    mask = square_mask(0.25, (32, 32), (64, 64))
    assert oracle_side(0.25, 64, 64) == 32
    assert mask.area == 32 * 32 == 1024
    ys, xs = np.nonzero(mask.bits)
    assert xs.min() == 16 and xs.max() == 47
    assert ys.min() == 16 and ys.max() == 47


def test_square_mask_one_percent_of_224():
    mask = square_mask(0.01, (112, 112), (224, 224))
    side = oracle_side(0.01, 224, 224)
    assert side == 22
    assert mask.area == side * side


def test_square_mask_degenerate_fraction_is_empty():
    # Small enough that the side rounds below one pixel.
    mask = square_mask(1e-6, (16, 16), (32, 32))
    assert mask.area == 0


@pytest.mark.parametrize("fraction", [0.0, -0.1])
def test_square_mask_rejects_nonpositive_fraction(fraction):
    with pytest.raises(ValueError):
        square_mask(fraction, (4, 4), (16, 16))


def test_square_mask_rejects_fraction_above_quarter():
    with pytest.raises(ValueError):
        square_mask(0.3, (4, 4), (16, 16))


@pytest.mark.parametrize("center", [(-1, 4), (4, -1), (16, 4), (4, 16)])
def test_square_mask_rejects_center_outside_canvas(center):
    with pytest.raises(ValueError):
        square_mask(0.1, center, (16, 16))


def test_square_mask_clips_at_canvas_edge():
    mask = square_mask(0.25, (0, 0), (64, 64))
    assert 0 < mask.area < 32 * 32
    assert mask.bits[0, 0] == 1


@given(
    fraction=st.sampled_from(DEFAULT_SIZES),
    h=st.integers(min_value=16, max_value=128),
    w=st.integers(min_value=16, max_value=128),
)
@settings(max_examples=60, deadline=None)
def test_square_mask_area_tracks_fraction(fraction, h, w):
    # |side^2 - fraction*H*W| <= 2*side + 1 from rounding the side length.
    side = square_side(fraction, h, w)
    assert abs(side * side - fraction * h * w) <= 2 * side + 1
    mask = square_mask(fraction, (w // 2, h // 2), (h, w))
    assert mask.area <= side * side


# ---------------------------------------------------------------------------
# composite
# ---------------------------------------------------------------------------


def test_zero_mask_is_identity():
    rng = np.random.default_rng(0)
    img = random_image(rng)
    mask = MaskLocation(np.zeros((32, 32), dtype=np.uint8))
    out = composite(img, mask, (10, 20, 30), 0.0)
    assert out == img


def test_full_mask_pure_overwrite():
    rng = np.random.default_rng(1)
    img = random_image(rng)
    mask = MaskLocation(np.ones((32, 32), dtype=np.uint8))
    out = composite(img, mask, (200, 0, 255), 0.0)
    assert (out.array == np.array([200, 0, 255], dtype=np.uint8)).all()


def test_single_pixel_blend_arithmetic():
    img = Image.filled(8, 8, (100, 100, 100))
    bits = np.zeros((8, 8), dtype=np.uint8)
    bits[3, 3] = 1
    out = composite(img, MaskLocation(bits), (10, 20, 30), 0.5)
    # 10 + 0.5*100 = 60, 20 + 50 = 70, 30 + 50 = 80
    assert tuple(out.array[3, 3]) == (60, 70, 80)
    untouched = out.array.copy()
    untouched[3, 3] = (100, 100, 100)
    assert (untouched == 100).all()


def test_blend_saturates_at_255():
    img = Image.filled(4, 4, (250, 250, 250))
    mask = MaskLocation(np.ones((4, 4), dtype=np.uint8))
    out = composite(img, mask, (100, 0, 255), 1.0)
    assert tuple(out.array[0, 0]) == (255, 250, 255)


def test_composite_rejects_dim_mismatch():
    img = Image.filled(8, 8, (0, 0, 0))
    mask = MaskLocation(np.ones((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        composite(img, mask, (1, 2, 3), 0.0)


def test_composite_does_not_mutate_input():
    rng = np.random.default_rng(2)
    img = random_image(rng)
    before = img.array.copy()
    mask = MaskLocation(np.ones((32, 32), dtype=np.uint8))
    composite(img, mask, (5, 5, 5), 0.0)
    assert (img.array == before).all()


@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_composite_is_pure(seed):
    rng = np.random.default_rng(seed)
    img = random_image(rng, 16, 16)
    bits = (rng.random((16, 16)) < 0.3).astype(np.uint8)
    mask = MaskLocation(bits)
    color = tuple(int(c) for c in rng.integers(0, 256, 3))
    blend = float(rng.choice([0.0, 0.25, 0.5, 1.0]))
    a = composite(img, mask, color, blend)
    b = composite(img, mask, color, blend)
    assert a == b


@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_overwrite_semantics_per_pixel(seed):
    # With blend 0 every masked pixel equals the fill color exactly and every
    # unmasked pixel equals the input exactly.
    rng = np.random.default_rng(seed)
    img = random_image(rng, 16, 16)
    bits = (rng.random((16, 16)) < 0.5).astype(np.uint8)
    color = tuple(int(c) for c in rng.integers(0, 256, 3))
    out = composite(img, MaskLocation(bits), color, 0.0)
    sel = bits.astype(bool)
    assert (out.array[sel] == np.array(color, dtype=np.uint8)).all()
    assert (out.array[~sel] == img.array[~sel]).all()


def test_translation_property():
    # Masks centered at two interior points produce translated copies of the
    # same patch content.
    rng = np.random.default_rng(3)
    img = random_image(rng, 64, 64)
    color = (210, 40, 90)
    side = square_side(0.04, 64, 64)
    out1 = composite(img, square_mask(0.04, (20, 20), (64, 64)), color, 0.0)
    out2 = composite(img, square_mask(0.04, (44, 40), (64, 64)), color, 0.0)
    x1, y1 = 20 - side // 2, 20 - side // 2
    x2, y2 = 44 - side // 2, 40 - side // 2
    patch1 = out1.array[y1 : y1 + side, x1 : x1 + side]
    patch2 = out2.array[y2 : y2 + side, x2 : x2 + side]
    assert (patch1 == patch2).all()


# ---------------------------------------------------------------------------
# embed_trigger
# ---------------------------------------------------------------------------


def test_embed_trigger_matches_composition():
    rng = np.random.default_rng(4)
    img = random_image(rng, 64, 64)
    spec = TriggerSpec(color=(9, 210, 77), size_fraction=0.13, center=(30, 33))
    direct = embed_trigger(img, spec)
    manual = composite(
        img, square_mask(0.13, (30, 33), (64, 64)), (9, 210, 77), 0.0
    )
    assert direct == manual


def test_embed_trigger_quarter_patch_pixel_count():
    rng = np.random.default_rng(5)
    img = random_image(rng, 64, 64)
    spec = TriggerSpec(color=(1, 2, 3), size_fraction=0.25, center=(32, 32))
    out = embed_trigger(img, spec)
    matches = (out.array == np.array([1, 2, 3], dtype=np.uint8)).all(axis=2)
    assert matches.sum() >= 1024  # chance collisions can only add

    changed = (out.array != img.array).any(axis=2)
    assert changed.sum() <= 1024


def test_embed_trigger_idempotent_for_overwrite():
    rng = np.random.default_rng(6)
    img = random_image(rng, 32, 32)
    spec = TriggerSpec(color=(50, 60, 70), size_fraction=0.16, center=(16, 16))
    once = embed_trigger(img, spec)
    twice = embed_trigger(once, spec)
    assert once == twice


def test_trigger_spec_validation():
    with pytest.raises(ValueError):
        TriggerSpec(color=(0, 0, 300), size_fraction=0.1, center=(1, 1))
    with pytest.raises(ValueError):
        TriggerSpec(color=(0, 0, 0), size_fraction=0.5, center=(1, 1))
    with pytest.raises(ValueError):
        TriggerSpec(color=(0, 0, 0), size_fraction=0.1, center=(1, 1), blend=2.0)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    img = random_image(rng, 24, 17)
    path = tmp_path / "img.png"
    save_png(img, path)
    assert load_png(path) == img


def test_png_single_pixel(tmp_path):
    img = Image.filled(1, 1, (255, 0, 0))
    path = tmp_path / "one.png"
    save_png(img, path)
    loaded = load_png(path)
    assert loaded.dims == (1, 1)
    assert tuple(loaded.array[0, 0]) == (255, 0, 0)


def test_png_truncated_file_errors(tmp_path):
    rng = np.random.default_rng(8)
    path = tmp_path / "broken.png"
    save_png(random_image(rng, 16, 16), path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(ImageFormatError):
        load_png(path)


def test_png_rejects_non_rgb(tmp_path):
    from PIL import Image as PILImage

    path = tmp_path / "gray.png"
    PILImage.new("L", (4, 4)).save(path)
    with pytest.raises(ImageFormatError):
        load_png(path)


def test_rgb_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    img = random_image(rng, 5, 9)
    path = tmp_path / "img.rgb"
    save_rgb(img, path)
    assert load_rgb(path) == img
    raw = path.read_bytes()
    assert raw.startswith(b"5 9\n")


def test_rgb_truncated_errors(tmp_path):
    path = tmp_path / "short.rgb"
    path.write_bytes(b"4 4\n" + b"\x00" * 10)
    with pytest.raises(ImageFormatError):
        load_rgb(path)


def test_rgb_bad_header_errors(tmp_path):
    path = tmp_path / "bad.rgb"
    path.write_bytes(b"nonsense\n" + b"\x00" * 48)
    with pytest.raises(ImageFormatError):
        load_rgb(path)


def test_image_validation():
    with pytest.raises(ValueError):
        Image(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), 300, dtype=np.int32))
    with pytest.raises(ValueError):
        MaskLocation(np.full((2, 2), 2, dtype=np.uint8))
