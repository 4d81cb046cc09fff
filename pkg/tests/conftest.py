import numpy as np
import pytest


def rand_pano(width: int, height: int, rng: np.random.Generator, channels: int = 3) -> np.ndarray:
    shape = (height, width, channels) if channels > 1 else (height, width)
    return rng.integers(0, 256, shape, dtype=np.uint8)


def blob_mask(width: int, height: int, rng: np.random.Generator, n_blobs: int = 3) -> np.ndarray:
    """Random soft blobs thresholded into a mask; may touch the wrap seam."""
    yy, xx = np.mgrid[0:height, 0:width]
    acc = np.zeros((height, width))
    for _ in range(n_blobs):
        cy = rng.uniform(0, height)
        cx = rng.uniform(0, width)
        ry = rng.uniform(height / 16, height / 4)
        rx = rng.uniform(width / 16, width / 4)
        dx = np.minimum(np.abs(xx - cx), width - np.abs(xx - cx))  # cyclic
        acc += np.exp(-(dx**2 / (2 * rx**2) + (yy - cy) ** 2 / (2 * ry**2)))
    return acc > np.quantile(acc, 0.9)


def brute_distance_from_mask(mask: np.ndarray) -> np.ndarray:
    """O(N^2) cyclic Euclidean distance oracle (small masks only)."""
    h, w = mask.shape
    pts = np.argwhere(mask)
    out = np.full((h, w), np.inf)
    if pts.size == 0:
        return out
    for r in range(h):
        for c in range(w):
            dy = pts[:, 0] - r
            dxa = np.abs(pts[:, 1] - c)
            dx = np.minimum(dxa, w - dxa)
            out[r, c] = np.sqrt((dy**2 + dx**2).min())
    return out


def reference_lanczos_resize(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Independent windowed-sinc (support 3) resampler used only as an oracle."""

    def kernel(x):
        x = np.abs(x)
        return np.where(x < 3.0, np.sinc(x) * np.sinc(x / 3.0), 0.0)

    def along_axis(src, dst_len, axis):
        src = np.moveaxis(np.asarray(src, np.float64), axis, 0)
        n = src.shape[0]
        scale = n / dst_len
        fscale = max(1.0, scale)
        support = 3.0 * fscale
        out = np.zeros((dst_len,) + src.shape[1:], np.float64)
        for i in range(dst_len):
            center = (i + 0.5) * scale
            lo = max(int(np.floor(center - support + 0.5)), 0)
            hi = min(int(np.floor(center + support + 0.5)), n)
            k = np.arange(lo, hi)
            wts = kernel((k + 0.5 - center) / fscale)
            wts = wts / wts.sum()
            out[i] = np.tensordot(wts, src[lo:hi], axes=(0, 0))
        return np.moveaxis(out, 0, axis)

    return along_axis(along_axis(img, width, 1), height, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
