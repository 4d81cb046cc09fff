"""Equirectangular panorama geometry: pole crop, horizontal roll, wrap-pad.

Panoramas are numpy arrays with a cyclic horizontal axis: column 0 is
adjacent to column W-1. A full panorama is 2:1 (W = 2H); cropping the poles
leaves a ~3:1 band centered on the horizon. All operations here are exact
permutations or copies of pixels, so round trips are bit-exact.
"""

from __future__ import annotations

import numpy as np

from defurnish.errors import DimensionError, ValidationError

# Exact integer cost sums fit in float64 up to this bound (see optimal_roll_offset).
_FLOAT64_EXACT = 2**53


def crop_poles(pano: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Crop a full 2:1 panorama to a horizon-centered band of height 2*floor(W/6).

    Returns (band, crop_top, crop_bottom). The band height is forced even so
    later resampling ratios stay clean; an odd leftover row is taken from the
    top (the band sits one row lower than exact center in that case).
    """
    h, w = pano.shape[:2]
    if w != 2 * h:
        raise DimensionError(f"expected a 2:1 panorama, got {w}x{h}")
    band_h = 2 * (w // 6)
    if band_h < 1 or band_h > h:
        raise DimensionError(f"degenerate band height {band_h} for {w}x{h}")
    total = h - band_h
    crop_top = (total + 1) // 2
    crop_bottom = total // 2
    band = pano[crop_top : h - crop_bottom].copy()
    return band, crop_top, crop_bottom


def restore_band(
    processed_band: np.ndarray,
    original: np.ndarray,
    crop_top: int,
    crop_bottom: int,
) -> np.ndarray:
    """Place a processed band back into the original panorama; poles pass through."""
    h, w = original.shape[:2]
    bh, bw = processed_band.shape[:2]
    if bw != w:
        raise DimensionError(f"band width {bw} != panorama width {w}")
    if crop_top < 0 or crop_bottom < 0 or crop_top + crop_bottom + bh != h:
        raise DimensionError(
            f"band height {bh} with crops ({crop_top}, {crop_bottom}) does not tile height {h}"
        )
    out = original.copy()
    out[crop_top : h - crop_bottom] = processed_band
    return out


def roll(image: np.ndarray, offset: int) -> np.ndarray:
    """Cyclic shift columns rightward by `offset` (mod W)."""
    return np.roll(image, offset, axis=1)


def unroll(image: np.ndarray, offset: int) -> np.ndarray:
    """Inverse of roll."""
    return np.roll(image, -offset, axis=1)


def optimal_roll_offset(mask: np.ndarray) -> int:
    """Offset that centers the masked pixels horizontally.

    Minimizes sum over mask pixels of (column-after-roll - (W-1)/2)^2,
    evaluated exactly for every offset via the column histogram (circular
    correlation). Ties break to the smallest offset; an empty mask gives 0.
    """
    hist = np.count_nonzero(mask, axis=0).astype(np.int64)
    w = hist.shape[0]
    if hist.sum() == 0:
        return 0
    # 4x the squared distance of column j to the center (w-1)/2, kept integer.
    sq = (2 * np.arange(w, dtype=np.int64) - (w - 1)) ** 2
    doubled = np.concatenate([hist, hist])
    # cost4(o) = sum_c hist[c] * sq[(c+o) mod w] = corr[w - o]
    bound = int(hist.sum()) * int(sq.max())
    if bound < _FLOAT64_EXACT:
        corr = np.correlate(doubled.astype(np.float64), sq.astype(np.float64), mode="valid")
    else:
        corr = np.correlate(doubled, sq, mode="valid")
    costs = corr[w - np.arange(w)]
    return int(np.argmin(costs))


def wrap_pad(image: np.ndarray, pad_left: int, pad_right: int) -> np.ndarray:
    """Pad horizontally with pixels from the opposite edge (cyclic continuation)."""
    w = image.shape[1]
    if pad_left < 0 or pad_right < 0:
        raise ValidationError("pad amounts must be non-negative")
    if pad_left >= w or pad_right >= w:
        raise ValidationError(f"pads ({pad_left}, {pad_right}) must be < width {w}")
    if pad_left == 0 and pad_right == 0:
        return image.copy()
    parts = []
    if pad_left:
        parts.append(image[:, w - pad_left :])
    parts.append(image)
    if pad_right:
        parts.append(image[:, :pad_right])
    return np.concatenate(parts, axis=1)


def unpad(image: np.ndarray, pad_left: int, pad_right: int) -> np.ndarray:
    """Remove wrap padding (center crop); inverse of wrap_pad."""
    w = image.shape[1]
    if pad_left < 0 or pad_right < 0 or pad_left + pad_right >= w:
        raise ValidationError(f"pads ({pad_left}, {pad_right}) exceed width {w}")
    return image[:, pad_left : w - pad_right].copy()
