"""Image resampling: nearest, bilinear, and lanczos3 (the pipeline default).

Backed by Pillow's resampler, which implements the standard windowed-sinc
lanczos kernel with support 3, antialiasing on downsample, and unit-sum
weight normalization (constants are preserved exactly). Float inputs go
through Pillow's 32-bit float path per channel; uint8 images use the native
RGB path. Masks must be resampled with `nearest` so they stay binary.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from defurnish.errors import ValidationError

FILTERS = {
    "nearest": Image.Resampling.NEAREST,
    "bilinear": Image.Resampling.BILINEAR,
    "lanczos3": Image.Resampling.LANCZOS,
}

DEFAULT_FILTER = "lanczos3"


def _pil_filter(name: str):
    try:
        return FILTERS[name]
    except KeyError:
        raise ValidationError(f"unknown resample filter {name!r}; expected one of {sorted(FILTERS)}")


def resize_to(
    image: np.ndarray,
    size: tuple[int, int],
    filter: str = DEFAULT_FILTER,
    box: tuple[float, float, float, float] | None = None,
) -> np.ndarray:
    """Resample to an explicit (width, height).

    `box` optionally restricts the source region (float pixel coordinates),
    producing exactly the corresponding crop of a full-image resize.
    """
    tw, th = size
    if tw < 1 or th < 1:
        raise ValidationError(f"target size {size} must be positive")
    flt = _pil_filter(filter)
    h, w = image.shape[:2]
    if box is None and (tw, th) == (w, h) and filter == "nearest":
        return image.copy()

    if image.dtype == np.uint8:
        if image.ndim == 2:
            out = Image.fromarray(image, "L").resize((tw, th), flt, box=box)
            return np.asarray(out)
        return np.asarray(Image.fromarray(image, "RGB").resize((tw, th), flt, box=box))
    if image.dtype == bool:
        if filter != "nearest":
            raise ValidationError("boolean masks must be resampled with filter='nearest'")
        # plain index gather; much cheaper than a PIL round trip for bool
        x0, y0, x1, y1 = box if box is not None else (0.0, 0.0, float(w), float(h))
        ix = np.minimum(((np.arange(tw) + 0.5) * (x1 - x0) / tw + x0).astype(np.intp), w - 1)
        iy = np.minimum(((np.arange(th) + 0.5) * (y1 - y0) / th + y0).astype(np.intp), h - 1)
        return image[np.ix_(iy, ix)]

    # float path: Pillow mode "F" is single channel, so run channels separately
    arr = np.asarray(image, np.float32)
    if arr.ndim == 2:
        out = Image.fromarray(arr, "F").resize((tw, th), flt, box=box)
        return np.asarray(out, image.dtype)
    chans = [
        np.asarray(Image.fromarray(arr[:, :, c], "F").resize((tw, th), flt, box=box))
        for c in range(arr.shape[2])
    ]
    return np.stack(chans, axis=2).astype(image.dtype)


def resample(image: np.ndarray, target_height: int, filter: str = DEFAULT_FILTER) -> np.ndarray:
    """Resample to a target height, preserving aspect ratio to within a pixel."""
    if target_height < 1:
        raise ValidationError("target_height must be >= 1")
    h, w = image.shape[:2]
    tw = max(1, round(w * target_height / h))
    return resize_to(image, (tw, target_height), filter=filter)
