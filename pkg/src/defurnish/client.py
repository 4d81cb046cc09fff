"""HTTP client for inpainting/superresolution backends.

Requests are validated locally before any network call, encoded once, and
retried with byte-identical bodies on connection failures, timeouts, and
5xx responses (both endpoints are idempotent for a fixed seed). 4xx
responses surface the server's structured error without retrying. A
bounded semaphore caps concurrent in-flight requests per client.
"""

from __future__ import annotations

import json
import logging
import threading
import time

import requests
from urllib3.filepost import encode_multipart_formdata

from defurnish import protocol
from defurnish.errors import BackendError, ProtocolError
from defurnish.imageio import png_size

log = logging.getLogger(__name__)

_RETRY_BACKOFF_S = 0.25


class BackendClient:
    def __init__(
        self,
        endpoint: protocol.BackendEndpoint | str,
        max_in_flight: int = 4,
        session: requests.Session | None = None,
    ):
        if isinstance(endpoint, str):
            endpoint = protocol.BackendEndpoint(endpoint)
        self.endpoint = endpoint
        self._session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _post(self, path: str, fields: dict, request_id: str) -> requests.Response:
        body, content_type = encode_multipart_formdata(fields)
        url = self.endpoint.base_url + path
        timeout = self.endpoint.timeout_ms / 1000.0
        attempts = self.endpoint.retries + 1
        last_exc: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(_RETRY_BACKOFF_S * attempt)
                log.info("retrying %s (attempt %d/%d)", url, attempt + 1, attempts)
            try:
                with self._slots:
                    resp = self._session.post(
                        url, data=body, headers={"Content-Type": content_type}, timeout=timeout
                    )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                continue
            if 500 <= resp.status_code < 600:
                last_exc = BackendError(
                    f"server error {resp.status_code} from {url}", request_id=request_id
                )
                continue
            if resp.status_code != 200:
                raise self._error_from_response(resp, url, request_id)
            return resp
        raise BackendError(
            f"backend unreachable after {attempts} attempts: {url} ({last_exc})",
            request_id=request_id,
        )

    @staticmethod
    def _error_from_response(resp, url, request_id) -> BackendError:
        try:
            body = resp.json()
            return BackendError(
                f"backend rejected request ({resp.status_code}): {body.get('message', '')}",
                code=body.get("code"),
                request_id=body.get("request_id") or request_id,
            )
        except (json.JSONDecodeError, ValueError):
            return BackendError(
                f"backend rejected request ({resp.status_code}) from {url}",
                request_id=request_id,
            )

    def inpaint(self, req: protocol.InpaintRequest) -> protocol.InpaintResponse:
        w, h = req.validate()
        fields = {
            "image": ("image.png", req.image_png, "image/png"),
            "mask": ("mask.png", req.mask_png, "image/png"),
            "params": ("params.json", req.params_json().encode(), "application/json"),
        }
        resp = self._post(protocol.INPAINT_PATH, fields, req.request_id)
        out = resp.content
        ow, oh = png_size(out)
        if (ow, oh) != (w, h):
            raise ProtocolError(
                f"inpaint response is {ow}x{oh}, expected {w}x{h}", request_id=req.request_id
            )
        return protocol.InpaintResponse(
            image_png=out,
            backend_name=resp.headers.get(protocol.HEADER_BACKEND, "unknown"),
            elapsed_ms=int(resp.headers.get(protocol.HEADER_ELAPSED, "0")),
        )

    def superresolve(self, req: protocol.SuperresRequest) -> bytes:
        w, h = req.validate()
        fields = {
            "image": ("image.png", req.image_png, "image/png"),
            "params": ("params.json", req.params_json().encode(), "application/json"),
        }
        resp = self._post(protocol.SUPERRES_PATH, fields, "")
        out = resp.content
        ow, oh = png_size(out)
        if (ow, oh) != (w * req.scale, h * req.scale):
            raise ProtocolError(
                f"superres response is {ow}x{oh}, expected {w * req.scale}x{h * req.scale}"
            )
        return out
