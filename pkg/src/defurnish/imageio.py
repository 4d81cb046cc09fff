"""Lossless PNG I/O for panoramas, masks, and label maps.

Conventions: panoramas are uint8 arrays of shape (H, W, 3) in RGB order or
(H, W) grayscale; masks are bool (H, W) stored as 1-channel PNG with 0/255;
label maps are uint16 (H, W) stored as 16-bit grayscale PNG.
"""

from __future__ import annotations

import os

import cv2
import numpy as np

from defurnish.errors import ValidationError

_PNG_SIG = b"\x89PNG\r\n\x1a\n"


def encode_png(image: np.ndarray, compress_level: int = 1) -> bytes:
    """Encode an RGB / grayscale / 16-bit array to PNG bytes."""
    arr = np.ascontiguousarray(image)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    if arr.ndim == 3:
        if arr.shape[2] != 3:
            raise ValidationError(f"expected 3 channels, got {arr.shape[2]}")
        arr = cv2.cvtColor(arr, cv2.COLOR_RGB2BGR)
    ok, buf = cv2.imencode(".png", arr, [cv2.IMWRITE_PNG_COMPRESSION, compress_level])
    if not ok:
        raise ValidationError("PNG encoding failed")
    return buf.tobytes()


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes; color images come back as RGB uint8."""
    arr = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise ValidationError("PNG decoding failed")
    if arr.ndim == 3:
        if arr.shape[2] == 4:
            arr = arr[:, :, :3]
        arr = cv2.cvtColor(arr, cv2.COLOR_BGR2RGB)
    return arr


def png_size(data: bytes) -> tuple[int, int]:
    """Read (width, height) from a PNG header without a full decode."""
    if len(data) < 24 or data[:8] != _PNG_SIG or data[12:16] != b"IHDR":
        raise ValidationError("not a PNG stream")
    w = int.from_bytes(data[16:20], "big")
    h = int.from_bytes(data[20:24], "big")
    return w, h


def load_image(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_png(f.read())


def save_image(path: str | os.PathLike, image: np.ndarray, compress_level: int = 1) -> None:
    data = encode_png(image, compress_level=compress_level)
    with open(path, "wb") as f:
        f.write(data)


def load_mask(path: str | os.PathLike) -> np.ndarray:
    arr = load_image(path)
    if arr.ndim == 3:
        arr = arr[:, :, 0]
    return arr > 127


def save_mask(path: str | os.PathLike, mask: np.ndarray) -> None:
    save_image(path, mask.astype(np.uint8) * 255)


def load_labels(path: str | os.PathLike) -> np.ndarray:
    """Load a 16-bit grayscale label map (8-bit maps are widened)."""
    arr = load_image(path)
    if arr.ndim == 3:
        raise ValidationError(f"label map must be single channel: {path}")
    return arr.astype(np.uint16)


def save_labels(path: str | os.PathLike, labels: np.ndarray) -> None:
    if labels.ndim != 2:
        raise ValidationError("label map must be 2-D")
    save_image(path, labels.astype(np.uint16))
