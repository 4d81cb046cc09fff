"""Wire protocol for the inpainting and superresolution backends.

Transport is HTTP/1.1 with multipart/form-data uploads (base64 JSON would
inflate the 2048x512 payloads by a third):

  POST {base}/v1/inpaint    parts: image (PNG), mask (PNG), params (JSON)
  POST {base}/v1/superres   parts: image (PNG), params (JSON)

Inpaint params: {"prompt", "seed", "num_steps", "noise_mix", "request_id",
"guidance"?}. Omitted fields take the protocol defaults below; servers echo
the effective values in X-Num-Steps / X-Noise-Mix response headers so
clients can verify them. Superres params: {"scale"} with scale in {2, 4}.

Success responses are image/png bodies with X-Backend-Name, X-Elapsed-Ms,
and X-Request-Id headers. Errors are JSON bodies
{"code": str, "message": str, "request_id": str} with a 4xx/5xx status.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from defurnish.errors import ValidationError
from defurnish.imageio import png_size

DEFAULT_PROMPT = "empty room"
DEFAULT_NUM_STEPS = 10
DEFAULT_NOISE_MIX = 0.97
DIMENSION_MULTIPLE = 64
SUPERRES_SCALES = (2, 4)

INPAINT_PATH = "/v1/inpaint"
SUPERRES_PATH = "/v1/superres"

HEADER_BACKEND = "X-Backend-Name"
HEADER_ELAPSED = "X-Elapsed-Ms"
HEADER_STEPS = "X-Num-Steps"
HEADER_NOISE_MIX = "X-Noise-Mix"
HEADER_REQUEST_ID = "X-Request-Id"


@dataclass
class InpaintRequest:
    image_png: bytes
    mask_png: bytes
    prompt: str = DEFAULT_PROMPT
    seed: int = 0
    num_steps: int = DEFAULT_NUM_STEPS
    noise_mix: float = DEFAULT_NOISE_MIX
    guidance: float | None = None
    request_id: str = ""

    def validate(self) -> tuple[int, int]:
        """Check the request invariants; returns (width, height)."""
        iw, ih = png_size(self.image_png)
        mw, mh = png_size(self.mask_png)
        if (iw, ih) != (mw, mh):
            raise ValidationError(f"mask {mw}x{mh} does not match image {iw}x{ih}")
        if iw % DIMENSION_MULTIPLE or ih % DIMENSION_MULTIPLE:
            raise ValidationError(
                f"image dimensions {iw}x{ih} must be multiples of {DIMENSION_MULTIPLE}"
            )
        if not (0.0 <= self.noise_mix <= 1.0):
            raise ValidationError(f"noise_mix {self.noise_mix} must be in [0, 1]")
        if self.num_steps < 1:
            raise ValidationError(f"num_steps {self.num_steps} must be >= 1")
        return iw, ih

    def params_json(self) -> str:
        params = {
            "prompt": self.prompt,
            "seed": self.seed,
            "num_steps": self.num_steps,
            "noise_mix": self.noise_mix,
            "request_id": self.request_id,
        }
        if self.guidance is not None:
            params["guidance"] = self.guidance
        return json.dumps(params, sort_keys=True)


@dataclass
class InpaintResponse:
    image_png: bytes
    backend_name: str
    elapsed_ms: int


@dataclass
class SuperresRequest:
    image_png: bytes
    scale: int = 4

    def validate(self) -> tuple[int, int]:
        if self.scale not in SUPERRES_SCALES:
            raise ValidationError(f"scale {self.scale} must be one of {SUPERRES_SCALES}")
        return png_size(self.image_png)

    def params_json(self) -> str:
        return json.dumps({"scale": self.scale})


@dataclass
class BackendEndpoint:
    base_url: str
    timeout_ms: int = 60000
    retries: int = 2          # idempotent requests only

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValidationError("timeout_ms must be > 0")
        self.base_url = self.base_url.rstrip("/")


def parse_inpaint_params(raw: str | bytes | None) -> dict:
    """Server-side params parsing with protocol defaults filled in."""
    data = json.loads(raw) if raw else {}
    if not isinstance(data, dict):
        raise ValidationError("params must be a JSON object")
    return {
        "prompt": str(data.get("prompt", DEFAULT_PROMPT)),
        "seed": int(data.get("seed", 0)),
        "num_steps": int(data.get("num_steps", DEFAULT_NUM_STEPS)),
        "noise_mix": float(data.get("noise_mix", DEFAULT_NOISE_MIX)),
        "guidance": data.get("guidance"),
        "request_id": str(data.get("request_id", "")),
    }


def error_body(code: str, message: str, request_id: str = "") -> bytes:
    return json.dumps(
        {"code": code, "message": message, "request_id": request_id}, sort_keys=True
    ).encode()
