"""Shadow-aware blending of the generated image into the original.

The generated (inpainted + superresolved) image is used wherever the mask
demands it, but also in nearby regions where it differs significantly from
the original: that is how removed shadows stay removed instead of being
blended back in. Significant differences far from the mask are treated as
hallucinations and rejected. Weights are:

  - 1 inside the mask;
  - 1 at significant pixels within r_near of the mask;
  - a linear falloff from 1 to 0 at significant pixels between r_near and
    r_far (keeps the near/far transition seamless);
  - 0 beyond r_far, always.

The raw weights are then Gaussian-feathered and re-clamped so masked
pixels stay pure generated and pixels beyond r_far + feather support are
bit-exact original.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from defurnish.errors import DimensionError, ValidationError

def _filter_modes(cyclic: bool):
    return ["nearest", "wrap"] if cyclic else "nearest"


@dataclass(frozen=True)
class BlendConfig:
    tau: float = 0.05            # significance threshold on unit-interval diffs
    r_near: float = 64.0         # keep significant generated pixels within this radius
    r_far: float = 192.0         # reject generated pixels beyond this radius
    feather_sigma: float = 8.0   # Gaussian smoothing of the weight map
    diff_smoothing: float = 4.0  # Gaussian smoothing of the difference map

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ValidationError("tau must be in (0, 1)")
        if not (0.0 <= self.r_near <= self.r_far):
            raise ValidationError("need 0 <= r_near <= r_far")
        if self.feather_sigma < 0 or self.diff_smoothing < 0:
            raise ValidationError("smoothing sigmas must be >= 0")

    @property
    def feather_support(self) -> int:
        """Kernel radius of the feathering filter (truncated at 3 sigma)."""
        return int(3.0 * self.feather_sigma + 0.5)


def _as_unit(image: np.ndarray) -> np.ndarray:
    if image.dtype == np.uint8:
        return image.astype(np.float32) / 255.0
    return image.astype(np.float32)


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise DimensionError(f"{what}: {a.shape[:2]} vs {b.shape[:2]}")


def significance_map(
    original: np.ndarray,
    generated: np.ndarray,
    config: BlendConfig = BlendConfig(),
    cyclic: bool = True,
) -> np.ndarray:
    """Binary map (as float) of where the two images differ meaningfully.

    Max-channel absolute difference on unit-interval values, smoothed by
    diff_smoothing, thresholded at tau.
    """
    _check_same_shape(original, generated, "significance_map inputs")
    if original.ndim != generated.ndim:
        raise DimensionError("significance_map inputs must have equal channel counts")
    diff = np.abs(_as_unit(original) - _as_unit(generated))
    if diff.ndim == 3:
        diff = diff.max(axis=2)
    if config.diff_smoothing > 0:
        diff = ndi.gaussian_filter(
            diff, config.diff_smoothing, mode=_filter_modes(cyclic), truncate=3.0
        )
    return (diff > config.tau).astype(np.float32)


def blend_weights(
    mask: np.ndarray,
    significance: np.ndarray,
    dist: np.ndarray,
    config: BlendConfig = BlendConfig(),
    cyclic: bool = True,
) -> np.ndarray:
    """Per-pixel weight of the generated image (1 = generated, 0 = original).

    `dist` must be distance_from_mask(mask); it is passed in because callers
    usually already have it. `cyclic` must match how `dist` was computed.
    """
    _check_same_shape(mask, significance, "mask vs significance")
    _check_same_shape(mask, dist, "mask vs distance field")

    raw = np.zeros(mask.shape, np.float32)
    sig = significance >= 0.5
    if config.r_far > config.r_near:
        span = config.r_far - config.r_near
        falloff = sig & (dist > config.r_near) & (dist < config.r_far)
        raw[falloff] = (config.r_far - dist[falloff]) / span
    raw[sig & (dist <= config.r_near)] = 1.0
    raw[mask] = 1.0
    raw[dist > config.r_far] = 0.0

    if config.feather_sigma > 0:
        w = ndi.gaussian_filter(raw, config.feather_sigma, mode=_filter_modes(cyclic), truncate=3.0)
    else:
        w = raw
    # masked pixels are always pure generated (the naive blend's contract);
    # feathering only shapes the transition outside the mask
    w[mask] = 1.0
    support = config.feather_support
    w[dist > config.r_far + support] = 0.0
    return np.clip(w, 0.0, 1.0)


def blend(original: np.ndarray, generated: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-pixel convex combination original*(1-w) + generated*w.

    Integer inputs are promoted to float and re-quantized once at the end
    (rounding half away from zero); pixels with weight exactly 0 or 1 are
    bit-exact copies of the respective source.
    """
    _check_same_shape(original, generated, "blend inputs")
    _check_same_shape(original, weights, "blend weights")
    if original.dtype != generated.dtype or original.ndim != generated.ndim:
        raise DimensionError("blend inputs must share dtype and channel count")

    if original.dtype == np.uint8:
        out = original.copy()
        full = weights >= 1.0
        mid = (weights > 0.0) & ~full
        if mid.any():
            wm = weights[mid].astype(np.float32)
            if original.ndim == 3:
                wm = wm[:, None]
            vals = original[mid].astype(np.float32) * (1.0 - wm)
            vals += generated[mid].astype(np.float32) * wm
            out[mid] = np.floor(vals + 0.5).astype(np.uint8)
        out[full] = generated[full]
        return out
    w = weights[:, :, None] if original.ndim == 3 else weights
    vals = original.astype(np.float32) * (1.0 - w) + generated.astype(np.float32) * w
    return vals.astype(original.dtype)


def naive_blend(original: np.ndarray, generated: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Hard mask replacement: the ablation baseline for the custom blend."""
    if mask.dtype != bool:
        raise ValidationError("mask must be a boolean array")
    return blend(original, generated, mask.astype(np.float32))
