"""Invertible context-maximization transform for inpainting.

Forward: crop poles -> roll so masked content is centered -> wrap-pad for
extra context -> downsample to the working height. The transform record
holds every parameter so the inverse restores the original panorama
exactly (poles and all pixels outside the processed band are untouched
copies of the input).

Padding is applied at band scale before downsampling; the pad amount is
specified in working-scale pixels and converted so the final working width
comes out a multiple of 64.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from defurnish import pano
from defurnish.errors import DimensionError, ValidationError
from defurnish.resample import DEFAULT_FILTER, resize_to

log = logging.getLogger(__name__)

WORKING_WIDTH_MULTIPLE = 64


@dataclass(frozen=True)
class ContextTransform:
    """Record of the forward transform, sufficient to invert it."""

    crop_top: int
    crop_bottom: int
    roll_offset: int          # rightward cyclic shift, band-scale pixels
    pad_left: int             # band-scale pixels
    pad_right: int
    source_size: tuple[int, int]    # (width, height) of the input panorama
    working_size: tuple[int, int]   # (width, height) after downsample

    @property
    def band_height(self) -> int:
        return self.source_size[1] - self.crop_top - self.crop_bottom

    @property
    def padded_band_size(self) -> tuple[int, int]:
        return (self.source_size[0] + self.pad_left + self.pad_right, self.band_height)


@dataclass(frozen=True)
class ContextConfig:
    working_height: int = 512
    pad: int = 256            # per side, working-scale pixels
    filter: str = DEFAULT_FILTER


def plan_padding(
    band_w: int, band_h: int, working_height: int, pad_working: int
) -> tuple[int, int, int]:
    """Choose band-scale pads so the working width is a multiple of 64.

    Returns (pad_left, pad_right, working_width). The working size keeps the
    padded band's aspect ratio to within one pixel, which restricts upscaling
    to at most 2x the band height.
    """
    if working_height < 1:
        raise ValidationError("working_height must be >= 1")
    if working_height > 2 * band_h:
        raise ValidationError(
            f"working_height {working_height} exceeds 2x band height {band_h}; "
            "upsampling the band breaks the aspect-preservation contract"
        )
    if pad_working < 0:
        raise ValidationError("pad must be non-negative")
    scale = working_height / band_h
    working_band_w = band_w * scale
    target = working_band_w + 2 * pad_working
    m = WORKING_WIDTH_MULTIPLE
    working_w = max(m, round(target / m) * m)
    while working_w < working_band_w:
        working_w += m
    total_pad = round((working_w - working_band_w) / scale)
    pad_left = total_pad // 2
    pad_right = total_pad - pad_left
    if pad_left >= band_w or pad_right >= band_w:
        raise ValidationError(
            f"required pads ({pad_left}, {pad_right}) exceed band width {band_w}; "
            "reduce pad or working_height"
        )
    return pad_left, pad_right, working_w


def _mask_spans_all_columns(mask_band: np.ndarray) -> bool:
    return bool(np.count_nonzero(mask_band, axis=0).all())


def plan_context(mask: np.ndarray, config: ContextConfig = ContextConfig()) -> ContextTransform:
    """Derive the full transform record from the mask alone (no image work).

    Mask pixels falling in the cropped pole rows are dropped with a logged
    warning; a mask spanning every column forces roll offset 0.
    """
    if mask.dtype != bool:
        raise ValidationError("mask must be a boolean array")
    h, w = mask.shape[:2]
    if w != 2 * h:
        raise DimensionError(f"expected a 2:1 panorama, got {w}x{h}")
    mask_band, crop_top, crop_bottom = pano.crop_poles(mask)

    total_true = int(mask.sum())
    kept_true = int(mask_band.sum())
    if kept_true < total_true:
        lost = total_true - kept_true
        log.warning(
            "mask has %d pixel(s) (%.2f%% of mask) in the cropped pole rows; they will not be inpainted",
            lost,
            100.0 * lost / total_true,
        )

    if kept_true and _mask_spans_all_columns(mask_band):
        log.warning("mask spans every column; rolling cannot avoid the seam, using offset 0")
        offset = 0
    else:
        offset = pano.optimal_roll_offset(mask_band)

    band_h, band_w = mask_band.shape[:2]
    pad_left, pad_right, working_w = plan_padding(
        band_w, band_h, config.working_height, config.pad
    )
    return ContextTransform(
        crop_top=crop_top,
        crop_bottom=crop_bottom,
        roll_offset=offset,
        pad_left=pad_left,
        pad_right=pad_right,
        source_size=(w, h),
        working_size=(working_w, config.working_height),
    )


def forward_context(
    panorama: np.ndarray,
    mask: np.ndarray,
    config: ContextConfig = ContextConfig(),
) -> tuple[np.ndarray, np.ndarray, ContextTransform]:
    """Crop, center, pad, and downsample a panorama+mask pair for inpainting.

    Returns (working_image, working_mask, transform).
    """
    h, w = panorama.shape[:2]
    if mask.shape[:2] != (h, w):
        raise DimensionError(f"mask {mask.shape[:2]} does not match panorama {(h, w)}")
    t = plan_context(mask, config)
    return apply_context(panorama, t, filter=config.filter), apply_context(mask, t), t


def _gather_columns_mod(band: np.ndarray, start: int, total: int) -> np.ndarray:
    """Columns start, start+1, ... (mod width) as contiguous slice copies."""
    w = band.shape[1]
    parts = []
    pos = start % w
    remaining = total
    while remaining > 0:
        take = min(w - pos, remaining)
        parts.append(band[:, pos : pos + take])
        remaining -= take
        pos = 0
    return parts[0].copy() if len(parts) == 1 else np.concatenate(parts, axis=1)


def band_of(image: np.ndarray, t: ContextTransform) -> np.ndarray:
    """Apply the exact (non-resampling) part of the transform: crop, roll, pad.

    Equivalent to wrap_pad(roll(crop, offset), pads) but realized as one pass
    of contiguous column-block copies, so large panoramas are copied once.
    """
    w, h = t.source_size
    if image.shape[:2] != (h, w):
        raise DimensionError(f"image {image.shape[:2]} does not match transform source {(h, w)}")
    band = image[t.crop_top : h - t.crop_bottom]
    # padded[:, j] = band[:, (j - pad_left - roll_offset) mod w]
    return _gather_columns_mod(band, -t.pad_left - t.roll_offset, w + t.pad_left + t.pad_right)


def apply_context(image: np.ndarray, t: ContextTransform, filter: str = DEFAULT_FILTER) -> np.ndarray:
    """Run a same-sized image through an existing transform (to working scale)."""
    flt = "nearest" if image.dtype == bool else filter
    return resize_to(band_of(image, t), t.working_size, filter=flt)


def validate_transform(t: ContextTransform, original: np.ndarray) -> None:
    w, h = t.source_size
    if original.shape[:2] != (h, w):
        raise DimensionError(
            f"original {original.shape[:2]} does not match transform source {(h, w)}"
        )
    band_h = t.band_height
    if t.crop_top < 0 or t.crop_bottom < 0 or band_h < 1:
        raise ValidationError("inconsistent transform record: bad crops")
    if t.pad_left < 0 or t.pad_right < 0 or not (0 <= t.roll_offset < w):
        raise ValidationError("inconsistent transform record: bad roll/pad")
    padded_w, _ = t.padded_band_size
    ww, wh = t.working_size
    if ww < 1 or wh < 1:
        raise ValidationError("inconsistent transform record: bad working size")
    # working size must preserve the padded band's aspect ratio (within a pixel)
    expected_w = padded_w * wh / band_h
    if abs(ww - expected_w) > max(1.0, wh / band_h):
        raise ValidationError(
            f"inconsistent transform record: working width {ww} vs expected {expected_w:.1f}"
        )


def inverse_context(
    processed: np.ndarray,
    t: ContextTransform,
    original: np.ndarray,
    filter: str = DEFAULT_FILTER,
) -> np.ndarray:
    """Undo the forward transform: resample to band scale, unpad, unroll,
    and restore the pole rows from the original panorama.

    `processed` may be at working scale, post-superresolution scale, or
    already at padded-band scale; it is resampled to the padded band first.
    """
    validate_transform(t, original)
    padded_w, band_h = t.padded_band_size
    ph, pw = processed.shape[:2]
    if (pw, ph) != (padded_w, band_h):
        processed = resize_to(processed, (padded_w, band_h), filter=filter)
    band = pano.unpad(processed, t.pad_left, t.pad_right)
    band = pano.unroll(band, t.roll_offset)
    return pano.restore_band(band, original, t.crop_top, t.crop_bottom)
