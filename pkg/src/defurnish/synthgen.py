"""Synthetic training/eval data: procedural furniture composited over
unfurnished panoramas, with soft directional blob shadows.

Objects (boxes, ellipsoids, elliptic cylinders) sit on a single floor plane
below the camera; each is rasterized by analytic ray intersection over its
angular bounding box, flat-shaded with a vertical brightness gradient.
Shadows are the object footprint shifted away from the light, blurred, and
multiplied into the floor. No walls are modeled, so very distant objects
draw over wall pixels; that is an accepted limitation of the generator.

Everything is a pure function of (inputs, seed), so datasets regenerate
bit-exactly from their manifest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from defurnish import imageio
from defurnish.errors import SynthesisError, ValidationError
from defurnish.maskops import PerturbParams, perturb

SHAPES = ("box", "ellipsoid", "cylinder")

_SHADOW_SHIFT_FRAC = 0.35   # footprint shift along the light direction, x object height
_SHADOW_GROW = 1.15         # footprint scale factor for the shadow
_SHADOW_EPS = 1e-3          # opacity*blur below this leaves pixels untouched


@dataclass(frozen=True)
class SceneObjectSpec:
    shape: str
    angle: float                      # azimuth of the object center, radians
    distance: float                   # meters from the camera axis
    size: tuple[float, float, float]  # width, height, depth in meters
    albedo: tuple[float, float, float]
    seed: int

    @property
    def footprint_radius(self) -> float:
        return float(np.hypot(self.size[0], self.size[2])) / 2.0


@dataclass(frozen=True)
class ScenePlacement:
    objects: tuple[SceneObjectSpec, ...]
    camera_height: float
    light_azimuth: float
    shadow_softness: float   # blur sigma in panorama pixels
    shadow_opacity: float


@dataclass(frozen=True)
class SynthConfig:
    camera_height: float = 1.5
    object_count: tuple[int, int] = (2, 4)
    distance_range: tuple[float, float] = (2.0, 4.0)
    base_size_range: tuple[float, float] = (0.5, 1.1)
    shadow_softness: float = 5.0
    shadow_opacity: float = 0.5
    footprint_margin: float = 0.15
    max_place_attempts: int = 200
    perturb_enabled: bool = True
    perturb_max_radius: int = 3
    perturb_jitter: int = 2
    perturb_erode_prob: float = 0.3
    perturb_dilate_prob: float = 0.3

    def hash(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class TrainingTriple:
    input: np.ndarray    # furnished composite
    mask: np.ndarray     # object silhouette, optionally perturbed
    target: np.ndarray   # the original empty panorama


@dataclass(frozen=True)
class EvalCase:
    furnished: np.ndarray
    mask: np.ndarray         # exact object silhouette (clean segmentation)
    ground_truth: np.ndarray


def place_objects(empty: np.ndarray, config: SynthConfig, seed: int) -> ScenePlacement:
    """Sample non-overlapping floor placements; deterministic in seed."""
    if empty.ndim != 3 or empty.dtype != np.uint8:
        raise ValidationError("empty panorama must be an RGB uint8 array")
    lo, hi = config.object_count
    if lo < 0 or hi < lo:
        raise ValidationError(f"bad object_count range {config.object_count}")
    rng = np.random.default_rng(seed)
    count = int(rng.integers(lo, hi + 1))
    objects: list[SceneObjectSpec] = []
    for k in range(count):
        placed = False
        for _ in range(config.max_place_attempts):
            shape = SHAPES[int(rng.integers(len(SHAPES)))]
            angle = float(rng.uniform(-np.pi, np.pi))
            dist = float(rng.uniform(*config.distance_range))
            base = rng.uniform(*config.base_size_range)
            size = tuple(float(base * u) for u in rng.uniform(0.7, 1.3, 3))
            albedo = tuple(float(a) for a in rng.uniform(0.15, 0.85, 3))
            obj = SceneObjectSpec(shape, angle, dist, size, albedo, int(rng.integers(2**31)))
            cx, cz = dist * np.sin(angle), dist * np.cos(angle)
            ok = True
            for other in objects:
                ox, oz = other.distance * np.sin(other.angle), other.distance * np.cos(other.angle)
                min_gap = obj.footprint_radius + other.footprint_radius + config.footprint_margin
                if np.hypot(cx - ox, cz - oz) < min_gap:
                    ok = False
                    break
            if ok:
                objects.append(obj)
                placed = True
                break
        if not placed:
            raise SynthesisError(
                f"could not place object {k + 1}/{count} without footprint overlap after "
                f"{config.max_place_attempts} attempts (seed {seed}); widen distance_range "
                "or shrink base_size_range"
            )
    return ScenePlacement(
        objects=tuple(objects),
        camera_height=config.camera_height,
        light_azimuth=float(rng.uniform(-np.pi, np.pi)),
        shadow_softness=config.shadow_softness,
        shadow_opacity=config.shadow_opacity,
    )


def _dir_grid(rows: np.ndarray, cols: np.ndarray, h: int, w: int):
    theta = (cols[None, :] + 0.5) / w * (2 * np.pi) - np.pi
    phi = np.pi / 2 - (rows[:, None] + 0.5) / h * np.pi
    cph = np.cos(phi)
    return cph * np.sin(theta), np.broadcast_to(np.sin(phi), (rows.size, cols.size)).copy(), cph * np.cos(theta)


def _patch_indices(h, w, theta0, half_theta, phi_lo, phi_hi, margin_px=2):
    """Row and wrapped-column index arrays covering an angular box."""
    if half_theta >= np.pi:
        cols = np.arange(w)
    else:
        cc = (theta0 + np.pi) / (2 * np.pi) * w
        half_cols = half_theta / (2 * np.pi) * w + margin_px
        c0 = int(np.floor(cc - half_cols))
        c1 = int(np.ceil(cc + half_cols)) + 1
        if c1 - c0 >= w:
            cols = np.arange(w)
        else:
            cols = np.arange(c0, c1) % w
    r0 = int(np.floor((np.pi / 2 - phi_hi) / np.pi * h)) - margin_px
    r1 = int(np.ceil((np.pi / 2 - phi_lo) / np.pi * h)) + margin_px
    rows = np.arange(max(0, r0), min(h, r1))
    return rows, cols


def _intersect(obj: SceneObjectSpec, cam_h: float, dx, dy, dz):
    """Ray-primitive hit test in the object's local frame.

    Returns (hit mask, t of hit, height fraction of the hit point).
    """
    w2, h_obj, d2 = obj.size[0] / 2.0, obj.size[1], obj.size[2] / 2.0
    ca, sa = np.cos(obj.angle), np.sin(obj.angle)
    cx, cz = obj.distance * sa, obj.distance * ca
    # local frame: origin at base center, z' points from camera toward the object
    ox = -cx * ca + cz * sa
    oz = -cx * sa - cz * ca
    oy = cam_h
    ldx = dx * ca - dz * sa
    ldz = dx * sa + dz * ca
    ldy = dy

    with np.errstate(divide="ignore", invalid="ignore"):
        if obj.shape == "box":
            tmin = np.full(dx.shape, -np.inf)
            tmax = np.full(dx.shape, np.inf)
            for o, d, lo, hi in (
                (ox, ldx, -w2, w2),
                (oy, ldy, 0.0, h_obj),
                (oz, ldz, -d2, d2),
            ):
                t0 = (lo - o) / d
                t1 = (hi - o) / d
                swap = t0 > t1
                t0w = np.where(swap, t1, t0)
                t1w = np.where(swap, t0, t1)
                parallel = d == 0
                inside = (o >= lo) & (o <= hi)
                t0w = np.where(parallel, np.where(inside, -np.inf, np.inf), t0w)
                t1w = np.where(parallel, np.where(inside, np.inf, -np.inf), t1w)
                tmin = np.maximum(tmin, t0w)
                tmax = np.minimum(tmax, t1w)
            hit = (tmin <= tmax) & (tmax > 0)
            t = np.where(tmin > 0, tmin, tmax)
        elif obj.shape == "ellipsoid":
            exo, eyo, ezo = ox / w2, (oy - h_obj / 2) / (h_obj / 2), oz / d2
            exd, eyd, ezd = ldx / w2, ldy / (h_obj / 2), ldz / d2
            a = exd * exd + eyd * eyd + ezd * ezd
            b = 2 * (exo * exd + eyo * eyd + ezo * ezd)
            c = exo * exo + eyo * eyo + ezo * ezo - 1.0
            disc = b * b - 4 * a * c
            root = np.sqrt(np.maximum(disc, 0.0))
            t_near = (-b - root) / (2 * a)
            t_far = (-b + root) / (2 * a)
            t = np.where(t_near > 0, t_near, t_far)
            hit = (disc >= 0) & (t > 0)
        elif obj.shape == "cylinder":
            exo, ezo = ox / w2, oz / d2
            exd, ezd = ldx / w2, ldz / d2
            a = exd * exd + ezd * ezd
            b = 2 * (exo * exd + ezo * ezd)
            c = exo * exo + ezo * ezo - 1.0
            disc = b * b - 4 * a * c
            root = np.sqrt(np.maximum(disc, 0.0))
            t_lat = (-b - root) / (2 * a)
            y_lat = oy + t_lat * ldy
            lat_ok = (disc >= 0) & (t_lat > 0) & (y_lat >= 0) & (y_lat <= h_obj)
            t_top = (h_obj - oy) / ldy
            top_x = (ox + t_top * ldx) / w2
            top_z = (oz + t_top * ldz) / d2
            top_ok = (t_top > 0) & (top_x * top_x + top_z * top_z <= 1.0)
            t = np.where(lat_ok, t_lat, np.inf)
            t = np.minimum(t, np.where(top_ok, t_top, np.inf))
            hit = lat_ok | top_ok
        else:
            raise ValidationError(f"unknown shape {obj.shape!r}")

    y_hit = oy + t * ldy
    frac = np.clip(y_hit / h_obj, 0.0, 1.0)
    return hit, np.where(hit, t, np.inf), frac


def _object_patch(obj: SceneObjectSpec, cam_h: float, h: int, w: int):
    top = obj.size[1] - cam_h
    center_y = obj.size[1] / 2.0 - cam_h
    span = np.linalg.norm([obj.size[0] / 2, obj.size[1] / 2, obj.size[2] / 2])
    dist3 = float(np.hypot(obj.distance, center_y))
    if dist3 <= span:
        return np.arange(h), np.arange(w)
    alpha = float(np.arcsin(min(1.0, span / dist3)))
    near = max(obj.distance - span, 0.05)
    phi_lo = float(np.arctan2(-cam_h, near)) - 0.05
    phi_hi = float(np.arctan2(max(top, 0.0) + 0.05, near)) + 0.05
    return _patch_indices(h, w, obj.angle, alpha + 0.05, phi_lo, phi_hi)


def _render_shadow(furnished, empty, placement, obj, h, w):
    """Darken the floor under the shifted, blurred footprint. Returns the
    boolean region of pixels actually touched."""
    cam_h = placement.camera_height
    opacity = placement.shadow_opacity
    sigma = placement.shadow_softness
    w2 = obj.size[0] / 2.0 * _SHADOW_GROW
    d2 = obj.size[2] / 2.0 * _SHADOW_GROW
    shift = _SHADOW_SHIFT_FRAC * obj.size[1]
    away = placement.light_azimuth + np.pi
    cx = obj.distance * np.sin(obj.angle) + shift * np.sin(away)
    cz = obj.distance * np.cos(obj.angle) + shift * np.cos(away)

    center_dist = float(np.hypot(cx, cz))
    reach = float(np.hypot(w2, d2)) + shift * 0.2
    if center_dist <= reach:
        rows, cols = np.arange(h // 2, h), np.arange(w)
    else:
        alpha = float(np.arcsin(min(1.0, reach / center_dist)))
        near = max(center_dist - reach, 0.05)
        far = center_dist + reach
        phi_lo = float(np.arctan2(-cam_h, near)) - 0.05
        phi_hi = float(np.arctan2(-cam_h, far)) + 0.05
        margin = int(np.ceil(3 * sigma)) + 2
        theta0 = float(np.arctan2(cx, cz))
        rows, cols = _patch_indices(h, w, theta0, alpha + 0.05, phi_lo, phi_hi, margin_px=margin)
    if rows.size == 0 or cols.size == 0:
        return np.zeros((h, w), bool)

    dx, dy, dz = _dir_grid(rows, cols, h, w)
    below = dy < -1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(below, -cam_h / dy, np.inf)
    px = t * dx
    pz = t * dz
    ca, sa = np.cos(obj.angle), np.sin(obj.angle)
    qx = (px - cx) * ca - (pz - cz) * sa
    qz = (px - cx) * sa + (pz - cz) * ca
    if obj.shape == "box":
        inside = (np.abs(qx) <= w2) & (np.abs(qz) <= d2)
    else:
        inside = (qx / w2) ** 2 + (qz / d2) ** 2 <= 1.0
    field = (inside & below).astype(np.float32)
    if sigma > 0:
        field = ndi.gaussian_filter(field, sigma, mode="constant", truncate=3.0)

    strength = opacity * field
    touched = strength > _SHADOW_EPS
    if not touched.any():
        return np.zeros((h, w), bool)
    patch = empty[np.ix_(rows, cols)].astype(np.float32)
    factor = (1.0 - strength)[:, :, None]
    shaded = np.floor(patch * factor + 0.5).astype(np.uint8)
    cur = furnished[np.ix_(rows, cols)]
    furnished[np.ix_(rows, cols)] = np.where(touched[:, :, None], shaded, cur)
    region = np.zeros((h, w), bool)
    region[np.ix_(rows, cols)] = touched
    return region


def render_composite(
    empty: np.ndarray, placement: ScenePlacement
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rasterize a placement over an empty panorama.

    Returns (furnished, object_mask, support): object_mask is the exact
    silhouette (no shadow pixels); support additionally covers every pixel
    the shadows touched. Outside support the composite equals the input
    bit-exactly.
    """
    h, w = empty.shape[:2]
    furnished = empty.copy()
    object_mask = np.zeros((h, w), bool)
    shadow_region = np.zeros((h, w), bool)
    if not placement.objects:
        return furnished, object_mask, shadow_region

    if placement.shadow_opacity > 0:
        for obj in placement.objects:
            shadow_region |= _render_shadow(furnished, empty, placement, obj, h, w)

    depth = np.full((h, w), np.inf)
    for obj in placement.objects:
        rows, cols = _object_patch(obj, placement.camera_height, h, w)
        if rows.size == 0 or cols.size == 0:
            continue
        dx, dy, dz = _dir_grid(rows, cols, h, w)
        hit, t, frac = _intersect(obj, placement.camera_height, dx, dy, dz)
        if not hit.any():
            continue
        sel = np.ix_(rows, cols)
        nearer = hit & (t < depth[sel])
        depth[sel] = np.where(nearer, t, depth[sel])
        shade = np.clip(0.55 + 0.45 * frac, 0.0, 1.0)
        color = np.floor(
            shade[:, :, None] * np.asarray(obj.albedo, np.float32)[None, None, :] * 255.0 + 0.5
        ).astype(np.uint8)
        cur = furnished[sel]
        furnished[sel] = np.where(nearer[:, :, None], color, cur)
        mpatch = object_mask[sel]
        object_mask[sel] = mpatch | nearer

    support = object_mask | shadow_region
    return furnished, object_mask, support


def _derived_seed(seed: int, salt: int) -> int:
    return int(np.random.default_rng([seed, salt]).integers(2**63))


def make_training_triple(empty: np.ndarray, config: SynthConfig, seed: int) -> TrainingTriple:
    placement = place_objects(empty, config, seed)
    furnished, object_mask, _ = render_composite(empty, placement)
    mask = object_mask
    if config.perturb_enabled:
        params = PerturbParams(
            seed=_derived_seed(seed, 1),
            max_boundary_jitter=config.perturb_jitter,
            erode_prob=config.perturb_erode_prob,
            dilate_prob=config.perturb_dilate_prob,
            max_radius=config.perturb_max_radius,
        )
        mask = perturb(object_mask, params)
    return TrainingTriple(input=furnished, mask=mask, target=empty)


def make_eval_case(empty: np.ndarray, config: SynthConfig, seed: int) -> EvalCase:
    """Like a training triple but with the clean, unperturbed mask."""
    placement = place_objects(empty, config, seed)
    furnished, object_mask, _ = render_composite(empty, placement)
    return EvalCase(furnished=furnished, mask=object_mask, ground_truth=empty)


def make_synthetic_empty(width: int, height: int, seed: int) -> np.ndarray:
    """A band-limited, seamless 'empty room' panorama for tests and demos."""
    rng = np.random.default_rng(seed)
    rr = (np.arange(height) + 0.5) / height   # 0 at zenith, 1 at nadir
    theta = (np.arange(width) + 0.5) / width * 2 * np.pi
    ceiling = np.array([0.92, 0.9, 0.86]) * rng.uniform(0.9, 1.0)
    wall = np.array([0.75, 0.7, 0.62]) * rng.uniform(0.85, 1.05)
    floor = np.array([0.45, 0.36, 0.28]) * rng.uniform(0.85, 1.1)
    vert = np.empty((height, 3), np.float64)
    up = np.clip((0.45 - rr) / 0.2, 0.0, 1.0)[:, None]
    down = np.clip((rr - 0.55) / 0.2, 0.0, 1.0)[:, None]
    vert = wall[None, :] * (1 - up - down) + ceiling[None, :] * up + floor[None, :] * down
    img = np.repeat(vert[:, None, :], width, axis=1)
    for k in (1, 2, 3):
        amp = rng.uniform(0.01, 0.05) / k
        phase = rng.uniform(0, 2 * np.pi)
        ripple = amp * np.sin(k * theta + phase)
        img += ripple[None, :, None] * rng.uniform(0.4, 1.0, 3)[None, None, :]
    vr = rng.uniform(0.02, 0.05)
    img += vr * np.sin(rr * np.pi)[:, None, None] * rng.uniform(-1, 1, 3)[None, None, :]
    return np.clip(img * 255.0 + 0.5, 0, 255).astype(np.uint8)


def generate_dataset(
    out_dir: str | os.PathLike,
    *,
    kind: str,
    count: int,
    size: tuple[int, int] = (1024, 512),
    seed: int = 0,
    config: SynthConfig = SynthConfig(),
    empties: list[np.ndarray] | None = None,
) -> str:
    """Write `count` cases plus a newline-delimited JSON manifest.

    kind 'train' produces perturbed-mask triples; 'eval' produces clean-mask
    cases. When `empties` is omitted, synthetic empty panoramas are used.
    Returns the manifest path.
    """
    if kind not in ("train", "eval"):
        raise ValidationError("kind must be 'train' or 'eval'")
    os.makedirs(out_dir, exist_ok=True)
    cfg_hash = config.hash()
    records = []
    for i in range(count):
        case_seed = seed + i
        if empties:
            empty = empties[i % len(empties)]
        else:
            empty = make_synthetic_empty(size[0], size[1], _derived_seed(case_seed, 1000))
        case_id = f"{kind}-{case_seed:06d}"
        if kind == "train":
            triple = make_training_triple(empty, config, case_seed)
            furnished, mask, target = triple.input, triple.mask, triple.target
        else:
            case = make_eval_case(empty, config, case_seed)
            furnished, mask, target = case.furnished, case.mask, case.ground_truth
        paths = {
            "input_path": f"{case_id}_input.png",
            "mask_path": f"{case_id}_mask.png",
            "target_path": f"{case_id}_target.png",
        }
        imageio.save_image(os.path.join(out_dir, paths["input_path"]), furnished)
        imageio.save_mask(os.path.join(out_dir, paths["mask_path"]), mask)
        imageio.save_image(os.path.join(out_dir, paths["target_path"]), target)
        records.append(
            {
                "case_id": case_id,
                "seed": case_seed,
                "config_hash": cfg_hash,
                "empty_path": paths["target_path"],
                **paths,
            }
        )
    manifest_path = os.path.join(out_dir, "manifest.ndjson")
    with open(manifest_path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    return manifest_path


def read_manifest(manifest_path: str | os.PathLike) -> list[dict]:
    with open(manifest_path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
