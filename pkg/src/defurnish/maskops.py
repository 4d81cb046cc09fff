"""Inpainting mask construction and morphology.

Masks are boolean (H, W) arrays, True where the inpainting backend must
replace pixels. The horizontal axis is cyclic, so dilation and distance
computations wrap around the panorama seam. Dilation uses the Euclidean
disc (pixels within radius r), realized by thresholding the exact distance
transform rather than iterating a square kernel.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from defurnish.errors import ValidationError


@dataclass(frozen=True)
class FurnitureClassSet:
    class_ids: frozenset[int]
    ontology_name: str = "ADE20K"

    def __post_init__(self):
        object.__setattr__(self, "class_ids", frozenset(int(c) for c in self.class_ids))


@dataclass(frozen=True)
class PerturbParams:
    """Controls for simulated segmentation imperfections (see perturb)."""

    seed: int
    max_boundary_jitter: int = 2
    erode_prob: float = 0.3
    dilate_prob: float = 0.3
    max_radius: int = 3

    def __post_init__(self):
        if not (0.0 <= self.erode_prob <= 1.0 and 0.0 <= self.dilate_prob <= 1.0):
            raise ValidationError("perturb probabilities must be in [0, 1]")
        if self.erode_prob + self.dilate_prob > 1.0:
            raise ValidationError("erode_prob + dilate_prob must be <= 1")
        if self.max_radius < 0 or self.max_boundary_jitter < 0:
            raise ValidationError("perturb radii must be >= 0")


def load_class_set(path: str | os.PathLike) -> FurnitureClassSet:
    """Load a class-set config file: {"ontology": str, "class_ids": [int, ...]}."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    ids = data.get("class_ids", [])
    if isinstance(ids, dict):
        ids = list(ids.values())
    return FurnitureClassSet(frozenset(ids), data.get("ontology", "ADE20K"))


def default_class_set() -> FurnitureClassSet:
    """The packaged ADE20K furniture class list."""
    path = os.path.join(os.path.dirname(__file__), "data", "ade20k_furniture.json")
    return load_class_set(path)


def mask_from_labels(labels: np.ndarray, classes: FurnitureClassSet) -> np.ndarray:
    """Union of all pixels whose label is a furniture class."""
    if not classes.class_ids:
        raise ValidationError("furniture class set is empty")
    if labels.ndim != 2:
        raise ValidationError("label map must be 2-D")
    return np.isin(labels, np.fromiter(classes.class_ids, dtype=np.int64))


def distance_from_mask(
    mask: np.ndarray, max_dist: float | None = None, cyclic: bool = True
) -> np.ndarray:
    """Exact Euclidean distance to the nearest True pixel, wrapping horizontally.

    An all-False mask yields +inf everywhere. With `max_dist`, distances are
    exact up to that value and may be overestimates beyond it (cheaper, for
    thresholding). `cyclic=False` treats the raster as flat (for crops and
    already-padded bands, whose edges are not adjacent).
    """
    if mask.dtype != bool:
        raise ValidationError("mask must be a boolean array")
    if not mask.any():
        return np.full(mask.shape, np.inf, np.float64)
    if not cyclic:
        return ndi.distance_transform_edt(~mask)
    w = mask.shape[1]
    # Cyclic metric: the nearest pixel is within w//2 columns either way, so
    # extending the raster by that much makes the plain EDT exact.
    pad = w // 2 + 1 if max_dist is None else min(w // 2 + 1, int(np.ceil(max_dist)) + 1)
    tiled = np.concatenate([mask[:, w - pad :], mask, mask[:, :pad]], axis=1)
    dist = ndi.distance_transform_edt(~tiled)
    return dist[:, pad : pad + w]


def dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    """Grow the mask by a Euclidean radius (cyclic horizontally)."""
    if radius < 0:
        raise ValidationError("dilation radius must be >= 0")
    if radius == 0 or not mask.any():
        return mask.copy()
    return distance_from_mask(mask, max_dist=radius) <= radius


def _label_cyclic(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Connected components (4-connectivity) with seam-crossing merge."""
    labels, n = ndi.label(mask)
    if n == 0:
        return labels, 0
    # union-find over labels touching across the horizontal seam
    parent = np.arange(n + 1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    seam = mask[:, 0] & mask[:, -1]
    for left, right in zip(labels[seam, 0], labels[seam, -1]):
        ra, rb = find(left), find(right)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(n + 1)])
    remap = np.zeros(n + 1, dtype=labels.dtype)
    uniq = np.unique(roots[1:])
    remap[uniq] = np.arange(1, uniq.size + 1)
    return remap[roots[labels]], int(uniq.size)


def perturb(mask: np.ndarray, params: PerturbParams) -> np.ndarray:
    """Deterministically distort a mask to mimic imperfect segmentation.

    Each connected component is randomly eroded or dilated by up to
    max_radius, then the boundary is jittered by a smooth random field of
    amplitude <= max_boundary_jitter. Pixels farther than
    max_radius + max_boundary_jitter from the input boundary never change.
    """
    if mask.dtype != bool:
        raise ValidationError("mask must be a boolean array")
    budget = params.max_radius + params.max_boundary_jitter
    if budget == 0 or not mask.any():
        return mask.copy()

    rng = np.random.default_rng(params.seed)
    cap = budget + 1
    outer = distance_from_mask(mask, max_dist=cap)
    inner = distance_from_mask(~mask, max_dist=cap)
    sdf = np.where(mask, inner, -outer)

    offset_map = np.zeros(mask.shape, np.float64)
    if params.max_radius > 0:
        labels, n = _label_cyclic(mask)
        offsets = np.zeros(n + 1)
        for comp in range(1, n + 1):
            u = rng.random()
            r = rng.uniform(0.0, params.max_radius)
            if u < params.erode_prob:
                offsets[comp] = -r
            elif u < params.erode_prob + params.dilate_prob:
                offsets[comp] = r
        # every pixel takes the offset of its nearest component
        w = mask.shape[1]
        pad = min(w // 2 + 1, cap)
        tiled = np.concatenate([mask[:, w - pad :], mask, mask[:, :pad]], axis=1)
        _, (iy, ix) = ndi.distance_transform_edt(~tiled, return_indices=True)
        iy, ix = iy[:, pad : pad + w], ix[:, pad : pad + w]
        tiled_labels = np.concatenate([labels[:, w - pad :], labels, labels[:, :pad]], axis=1)
        offset_map = offsets[tiled_labels[iy, ix]]

    field = np.zeros(mask.shape, np.float64)
    if params.max_boundary_jitter > 0:
        noise = rng.standard_normal(mask.shape)
        field = ndi.gaussian_filter(noise, 2.0, mode=["nearest", "wrap"])
        peak = np.abs(field).max()
        if peak > 0:
            field *= params.max_boundary_jitter / peak

    return (sdf + offset_map + field) > 0
