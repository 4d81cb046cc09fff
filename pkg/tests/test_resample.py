import numpy as np
import pytest

from defurnish.errors import ValidationError
from defurnish.metrics import psnr
from defurnish.resample import resample, resize_to

from conftest import reference_lanczos_resize


def band_limited_gradient(width: int, height: int) -> np.ndarray:
    """Smooth low-frequency test card (safe for downsample round trips)."""
    yy = np.linspace(0, 1, height)[:, None]
    xx = np.linspace(0, 2 * np.pi, width)[None, :]
    img = 0.5 + 0.25 * np.sin(xx) * yy + 0.2 * np.cos(2 * xx) * (1 - yy)
    rgb = np.stack([img, img * 0.8 + 0.1, 1 - img], axis=2)
    return np.clip(rgb * 255 + 0.5, 0, 255).astype(np.uint8)


def test_identity_size_nearest_bit_exact(rng):
    img = rng.integers(0, 256, (32, 64, 3), dtype=np.uint8)
    assert (resample(img, 32, filter="nearest") == img).all()


def test_identity_size_lanczos_float(rng):
    img = rng.random((32, 64)).astype(np.float32)
    out = resample(img, 32, filter="lanczos3")
    assert np.abs(out - img).max() <= 1e-6


def test_constant_preserved_uint8():
    img = np.full((40, 80, 3), 137, np.uint8)
    out = resample(img, 23, filter="lanczos3")
    assert (out == 137).all()


def test_constant_preserved_float():
    img = np.full((40, 80), 0.4375, np.float32)
    out = resample(img, 23, filter="lanczos3")
    assert np.abs(out - 0.4375).max() < 1e-6


def test_round_trip_psnr_on_band_limited_gradient():
    img = band_limited_gradient(2048, 512)
    down = resample(img, 128, filter="lanczos3")
    up = resize_to(down, (2048, 512), filter="lanczos3")
    assert psnr(up, img) >= 40.0


def test_aspect_ratio_preserved():
    img = np.zeros((300, 1000, 3), np.uint8)
    out = resample(img, 150)
    assert out.shape == (150, 500, 3)
    out = resample(img, 97)
    assert abs(out.shape[1] - 1000 * 97 / 300) <= 1


def test_matches_independent_reference(rng):
    src = rng.random((48, 80)).astype(np.float32)
    ours = resize_to(src, (32, 20), filter="lanczos3")
    ref = reference_lanczos_resize(src, 32, 20)
    assert np.abs(ours - ref).max() < 1e-5
    ours_up = resize_to(src, (160, 96), filter="lanczos3")
    ref_up = reference_lanczos_resize(src, 160, 96)
    assert np.abs(ours_up - ref_up).max() < 1e-5


def test_mask_nearest_stays_binary(rng):
    mask = rng.random((64, 128)) < 0.3
    out = resize_to(mask, (48, 24), filter="nearest")
    assert out.dtype == bool


def test_mask_non_nearest_rejected(rng):
    mask = rng.random((64, 128)) < 0.3
    with pytest.raises(ValidationError):
        resize_to(mask, (48, 24), filter="lanczos3")


def test_unknown_filter_rejected(rng):
    with pytest.raises(ValidationError):
        resample(np.zeros((8, 16), np.uint8), 4, filter="bicubic")


def test_box_region_matches_full_resize(rng):
    src = rng.random((128, 256)).astype(np.float32)
    full = resize_to(src, (64, 32), filter="lanczos3")
    sx, sy = 256 / 64, 128 / 32
    box = (16 * sx, 8 * sy, 48 * sx, 24 * sy)
    sub = resize_to(src, (32, 16), filter="lanczos3", box=box)
    assert np.array_equal(full[8:24, 16:48], sub)
