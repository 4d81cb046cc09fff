import dataclasses

import numpy as np
import pytest

from defurnish import pano
from defurnish.context import (
    ContextConfig,
    apply_context,
    band_of,
    forward_context,
    inverse_context,
    plan_padding,
)
from defurnish.errors import DimensionError, ValidationError

from conftest import blob_mask, rand_pano


def test_reference_geometry_8192():
    # 8192x4096 with the production config: 2048x512 working image,
    # padding equivalent to ~256 working-scale pixels per side
    pad_left, pad_right, working_w = plan_padding(8192, 2730, 512, 256)
    assert working_w == 2048
    assert working_w % 64 == 0
    scale = 512 / 2730
    assert round(pad_left * scale) == 256
    assert round(pad_right * scale) == 256


def test_plan_padding_makes_multiples_of_64(rng):
    for _ in range(40):
        band_w = int(rng.integers(128, 4096))
        band_h = max(8, band_w // 3)
        wh = int(rng.integers(max(8, band_h // 8), band_h + 1))
        pad = int(rng.integers(0, wh))
        try:
            pl, pr, ww = plan_padding(band_w, band_h, wh, pad)
        except ValidationError:
            continue
        assert ww % 64 == 0
        # working size preserves padded-band aspect to within a pixel
        assert abs(ww - (band_w + pl + pr) * wh / band_h) <= 1.0


def test_forward_context_reference_shape(rng):
    p = rand_pano(2048, 1024, rng)
    mask = blob_mask(2048, 1024, rng)
    working, wmask, t = forward_context(p, mask, ContextConfig(working_height=256, pad=128))
    assert working.shape[0] == 256
    assert working.shape[1] % 64 == 0
    assert wmask.shape == working.shape[:2]
    assert wmask.dtype == bool
    assert t.source_size == (2048, 1024)
    assert 0 <= t.roll_offset < 2048


def test_forward_all_false_mask(rng):
    p = rand_pano(512, 256, rng)
    working, wmask, t = forward_context(
        p, np.zeros((256, 512), bool), ContextConfig(working_height=64, pad=32)
    )
    assert t.roll_offset == 0
    assert not wmask.any()


def test_full_width_mask_uses_offset_zero(rng, caplog):
    p = rand_pano(512, 256, rng)
    mask = np.zeros((256, 512), bool)
    mask[128, :] = True  # spans every column
    with caplog.at_level("WARNING"):
        _, _, t = forward_context(p, mask, ContextConfig(working_height=64, pad=32))
    assert t.roll_offset == 0
    assert any("spans every column" in r.message for r in caplog.records)


def test_pole_mask_pixels_warned(rng, caplog):
    p = rand_pano(512, 256, rng)
    mask = np.zeros((256, 512), bool)
    mask[0, 5] = True  # zenith pixel, outside the band
    mask[128, 100:110] = True
    with caplog.at_level("WARNING"):
        forward_context(p, mask, ContextConfig(working_height=64, pad=32))
    assert any("pole rows" in r.message for r in caplog.records)


def test_forward_inverse_without_resampling_is_identity(rng):
    p = rand_pano(512, 256, rng)
    mask = blob_mask(512, 256, rng)
    band_h = 2 * (512 // 6)  # 170
    cfg = ContextConfig(working_height=band_h, pad=37, filter="nearest")
    working, _, t = forward_context(p, mask, cfg)
    assert (inverse_context(working, t, p, filter="nearest") == p).all()


def test_inverse_accepts_superres_scale(rng):
    p = rand_pano(512, 256, rng)
    mask = blob_mask(512, 256, rng)
    cfg = ContextConfig(working_height=64, pad=32)
    working, _, t = forward_context(p, mask, cfg)
    big = np.repeat(np.repeat(working, 4, axis=0), 4, axis=1)
    out = inverse_context(big, t, p)
    assert out.shape == p.shape


def test_inverse_rejects_corrupt_transform(rng):
    p = rand_pano(512, 256, rng)
    mask = blob_mask(512, 256, rng)
    working, _, t = forward_context(p, mask, ContextConfig(working_height=64, pad=32))
    bad = dataclasses.replace(t, pad_left=t.pad_left + 400)
    with pytest.raises(ValidationError):
        inverse_context(working, bad, p)
    with pytest.raises(DimensionError):
        inverse_context(working, t, rand_pano(256, 128, rng))


def test_band_of_is_exact_permutation(rng):
    p = rand_pano(512, 256, rng)
    mask = blob_mask(512, 256, rng)
    _, _, t = forward_context(p, mask, ContextConfig(working_height=64, pad=32))
    band = band_of(p, t)
    # undo by hand: unpad, unroll, compare against the plain crop
    inner = pano.unroll(pano.unpad(band, t.pad_left, t.pad_right), t.roll_offset)
    crop, top, bottom = pano.crop_poles(p)
    assert (inner == crop).all()


def test_apply_context_matches_forward_for_same_input(rng):
    p = rand_pano(512, 256, rng)
    mask = blob_mask(512, 256, rng)
    cfg = ContextConfig(working_height=64, pad=32)
    working, wmask, t = forward_context(p, mask, cfg)
    assert (apply_context(p, t, filter=cfg.filter) == working).all()
    assert (apply_context(mask, t) == wmask).all()


def test_upsampling_band_rejected():
    with pytest.raises(ValidationError):
        plan_padding(600, 200, 512, 64)
