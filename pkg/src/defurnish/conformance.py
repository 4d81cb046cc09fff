"""Protocol conformance suite, runnable against any backend implementation.

Speaks raw HTTP (no client-side validation) so server-side behavior is what
gets exercised: dimension echo, default parameter handling, structured
error bodies, determinism, and the superres scale contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import requests

from defurnish import protocol
from defurnish.imageio import encode_png, png_size

_CHECK_W, _CHECK_H = 128, 64


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def _fixture_images() -> tuple[bytes, bytes]:
    rng = np.random.default_rng(1234)
    image = rng.integers(0, 256, (_CHECK_H, _CHECK_W, 3), dtype=np.uint8)
    mask = np.zeros((_CHECK_H, _CHECK_W), np.uint8)
    mask[16:48, 32:96] = 255
    return encode_png(image), encode_png(mask)


def _post(base_url: str, path: str, files: dict, timeout: float) -> requests.Response:
    return requests.post(base_url.rstrip("/") + path, files=files, timeout=timeout)


def _is_error_schema(resp: requests.Response) -> tuple[bool, str]:
    if resp.status_code < 400:
        return False, f"expected an error status, got {resp.status_code}"
    try:
        body = resp.json()
    except json.JSONDecodeError:
        return False, "error body is not JSON"
    missing = [k for k in ("code", "message", "request_id") if k not in body]
    if missing:
        return False, f"error body missing keys: {missing}"
    return True, ""


def run_conformance(base_url: str, timeout: float = 60.0) -> list[CheckResult]:
    results: list[CheckResult] = []
    image_png, mask_png = _fixture_images()

    def record(name: str, ok: bool, detail: str = ""):
        results.append(CheckResult(name, ok, detail))

    params = json.dumps({"prompt": "empty room", "seed": 7, "request_id": "conf-1"})
    files = {
        "image": ("image.png", image_png, "image/png"),
        "mask": ("mask.png", mask_png, "image/png"),
        "params": ("params.json", params, "application/json"),
    }

    # dimension echo + PNG payload
    try:
        resp = _post(base_url, protocol.INPAINT_PATH, files, timeout)
        if resp.status_code != 200:
            record("inpaint_dimension_echo", False, f"status {resp.status_code}: {resp.text[:200]}")
        else:
            size = png_size(resp.content)
            record(
                "inpaint_dimension_echo",
                size == (_CHECK_W, _CHECK_H),
                f"got {size}, expected {(_CHECK_W, _CHECK_H)}",
            )
            record(
                "inpaint_backend_name_header",
                bool(resp.headers.get(protocol.HEADER_BACKEND)),
                "missing X-Backend-Name",
            )
    except requests.RequestException as exc:
        record("inpaint_dimension_echo", False, str(exc))
        return results

    # defaults echoed when params omit num_steps / noise_mix
    resp = _post(base_url, protocol.INPAINT_PATH, files, timeout)
    steps = resp.headers.get(protocol.HEADER_STEPS)
    mix = resp.headers.get(protocol.HEADER_NOISE_MIX)
    ok = resp.status_code == 200 and steps is not None and mix is not None
    if ok:
        ok = int(steps) == protocol.DEFAULT_NUM_STEPS and float(mix) == protocol.DEFAULT_NOISE_MIX
    record(
        "inpaint_default_params",
        bool(ok),
        f"steps={steps} mix={mix}, expected {protocol.DEFAULT_NUM_STEPS}/{protocol.DEFAULT_NOISE_MIX}",
    )

    # determinism: identical request, identical bytes
    resp2 = _post(base_url, protocol.INPAINT_PATH, files, timeout)
    record(
        "inpaint_determinism",
        resp.status_code == 200 and resp2.status_code == 200 and resp.content == resp2.content,
        "same request must produce identical response bytes",
    )

    # dimension mismatch -> structured 4xx
    bad_mask = encode_png(np.zeros((_CHECK_H // 2, _CHECK_W, 3), np.uint8))
    bad_files = dict(files, mask=("mask.png", bad_mask, "image/png"))
    resp = _post(base_url, protocol.INPAINT_PATH, bad_files, timeout)
    ok, detail = _is_error_schema(resp)
    record("inpaint_dimension_mismatch_rejected", ok, detail)

    # missing part -> structured 4xx
    resp = _post(
        base_url,
        protocol.INPAINT_PATH,
        {"image": ("image.png", image_png, "image/png")},
        timeout,
    )
    ok, detail = _is_error_schema(resp)
    record("inpaint_missing_part_rejected", ok, detail)

    # superres scale contract
    sr_files = {
        "image": ("image.png", image_png, "image/png"),
        "params": ("params.json", json.dumps({"scale": 4}), "application/json"),
    }
    resp = _post(base_url, protocol.SUPERRES_PATH, sr_files, timeout)
    if resp.status_code != 200:
        record("superres_scale_contract", False, f"status {resp.status_code}")
    else:
        size = png_size(resp.content)
        record(
            "superres_scale_contract",
            size == (_CHECK_W * 4, _CHECK_H * 4),
            f"got {size}",
        )

    # invalid scale -> structured 4xx
    sr_files["params"] = ("params.json", json.dumps({"scale": 3}), "application/json")
    resp = _post(base_url, protocol.SUPERRES_PATH, sr_files, timeout)
    ok, detail = _is_error_schema(resp)
    record("superres_invalid_scale_rejected", ok, detail)

    # unknown route -> structured 404
    resp = _post(base_url, "/v1/nonexistent", {"x": ("x", b"1")}, timeout)
    ok, detail = _is_error_schema(resp)
    record("unknown_route_rejected", ok and resp.status_code == 404, detail)

    return results


def assert_conformant(base_url: str, timeout: float = 60.0) -> list[CheckResult]:
    """Run the suite and raise AssertionError listing any failures."""
    results = run_conformance(base_url, timeout=timeout)
    failures = [r for r in results if not r.ok]
    if failures:
        lines = "\n".join(f"  {r.name}: {r.detail}" for r in failures)
        raise AssertionError(f"backend at {base_url} failed conformance:\n{lines}")
    return results
