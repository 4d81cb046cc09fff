"""Image quality metrics: PSNR and SSIM, plus the per-case quality report.

SSIM uses the standard construction: 11x11 Gaussian window (sigma 1.5),
K1=0.01, K2=0.03, population statistics, mean over valid window positions,
channels averaged. `horizontal_wrap=True` treats the horizontal axis as
cyclic (appropriate for panoramas, and exactly roll-invariant); the default
matches the conventional edge-cropped definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from defurnish.errors import DimensionError

PSNR_CAP_DB = 99.0

_SSIM_WIN = 11
_SSIM_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ssim: float
    pixel_count: int
    masked_psnr_db: float | None = None


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")


def _default_peak(a: np.ndarray) -> float:
    return 255.0 if a.dtype == np.uint8 else 1.0


def psnr(a: np.ndarray, b: np.ndarray, peak: float | None = None) -> float:
    """10*log10(peak^2 / MSE) over all channels; identical images cap at 99 dB."""
    _check_pair(a, b)
    if peak is None:
        peak = _default_peak(a)
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = np.mean(diff * diff)
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(peak * peak / mse))


def _local_mean(img: np.ndarray, wrap: bool) -> np.ndarray:
    radius = _SSIM_WIN // 2
    mode = ["reflect", "wrap"] if wrap else "reflect"
    out = ndi.gaussian_filter(img, _SSIM_SIGMA, mode=mode, truncate=radius / _SSIM_SIGMA)
    return out


def _ssim_channel(x: np.ndarray, y: np.ndarray, peak: float, wrap: bool) -> float:
    c1 = (_K1 * peak) ** 2
    c2 = (_K2 * peak) ** 2
    ux = _local_mean(x, wrap)
    uy = _local_mean(y, wrap)
    uxx = _local_mean(x * x, wrap)
    uyy = _local_mean(y * y, wrap)
    uxy = _local_mean(x * y, wrap)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    cov = uxy - ux * uy
    s = ((2 * ux * uy + c1) * (2 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    radius = _SSIM_WIN // 2
    if wrap:
        valid = s[radius:-radius, :]
    else:
        valid = s[radius:-radius, radius:-radius]
    return float(valid.mean())


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    peak: float | None = None,
    horizontal_wrap: bool = False,
) -> float:
    _check_pair(a, b)
    h, w = a.shape[:2]
    if h < _SSIM_WIN or w < _SSIM_WIN:
        raise DimensionError(f"images must be at least {_SSIM_WIN}x{_SSIM_WIN} for SSIM")
    if peak is None:
        peak = _default_peak(a)
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    if x.ndim == 2:
        return _ssim_channel(x, y, peak, horizontal_wrap)
    vals = [_ssim_channel(x[:, :, c], y[:, :, c], peak, horizontal_wrap) for c in range(x.shape[2])]
    return float(np.mean(vals))


def masked_psnr(
    a: np.ndarray, b: np.ndarray, mask: np.ndarray, peak: float | None = None
) -> float | None:
    """PSNR restricted to mask pixels; None when the mask is empty."""
    _check_pair(a, b)
    if mask.shape != a.shape[:2]:
        raise DimensionError(f"mask {mask.shape} does not match images {a.shape[:2]}")
    if not mask.any():
        return None
    if peak is None:
        peak = _default_peak(a)
    diff = a[mask].astype(np.float64) - b[mask].astype(np.float64)
    mse = np.mean(diff * diff)
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(peak * peak / mse))


def evaluate(
    result: np.ndarray,
    ground_truth: np.ndarray,
    mask: np.ndarray | None = None,
) -> QualityReport:
    """Full-image PSNR/SSIM, plus mask-restricted PSNR when a mask is given."""
    _check_pair(result, ground_truth)
    mp = masked_psnr(result, ground_truth, mask) if mask is not None else None
    return QualityReport(
        psnr_db=psnr(result, ground_truth),
        ssim=ssim(result, ground_truth),
        pixel_count=int(result.shape[0] * result.shape[1]),
        masked_psnr_db=mp,
    )
