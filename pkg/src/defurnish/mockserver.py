"""Deterministic mock backends serving the wire protocol.

Modes:
  identity           inpaint echoes the request image
  oracle             inpaint returns target_dir/{request_id}.png
  constant           inpaint fills masked pixels with a fixed color
  fallback_superres  superres only (lanczos3 upscale); inpaint unavailable

All modes except fallback_superres also serve /v1/superres via the same
classical lanczos3 upscaler. Servers run in a daemon thread (use as a
context manager in tests) or in the foreground with signal-based shutdown
for the CLI.
"""

from __future__ import annotations

import email.parser
import email.policy
import json
import logging
import os
import signal
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from defurnish import protocol
from defurnish.errors import ValidationError
from defurnish.imageio import decode_png, encode_png
from defurnish.resample import resize_to

log = logging.getLogger(__name__)

MODES = ("identity", "oracle", "constant", "fallback_superres")


class _RequestError(Exception):
    def __init__(self, status: int, code: str, message: str, request_id: str = ""):
        super().__init__(message)
        self.status = status
        self.code = code
        self.request_id = request_id


def _parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    header = f"Content-Type: {content_type}\r\n\r\n".encode()
    msg = email.parser.BytesParser(policy=email.policy.HTTP).parsebytes(header + body)
    if not msg.is_multipart():
        raise _RequestError(400, "bad_request", "expected multipart/form-data")
    parts = {}
    for part in msg.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name:
            parts[name] = part.get_payload(decode=True)
    return parts


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def backend(self) -> "MockBackendServer":
        return self.server.backend  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send_error_body(self, err: _RequestError):
        body = protocol.error_body(err.code, str(err), err.request_id)
        self.send_response(err.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_png(self, data: bytes, headers: dict[str, str]):
        self.send_response(200)
        self.send_header("Content-Type", "image/png")
        self.send_header("Content-Length", str(len(data)))
        for k, v in headers.items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(data)

    def _read_parts(self) -> dict[str, bytes]:
        ctype = self.headers.get("Content-Type", "")
        if not ctype.startswith("multipart/form-data"):
            raise _RequestError(400, "bad_request", f"unsupported content type {ctype!r}")
        length = int(self.headers.get("Content-Length", "0"))
        return _parse_multipart(ctype, self.rfile.read(length))

    def do_POST(self):
        start = time.perf_counter()
        try:
            if self.path == protocol.INPAINT_PATH:
                png, params = self.backend.handle_inpaint(self._read_parts())
            elif self.path == protocol.SUPERRES_PATH:
                png, params = self.backend.handle_superres(self._read_parts())
            else:
                raise _RequestError(404, "not_found", f"no such endpoint {self.path}")
        except _RequestError as err:
            self._send_error_body(err)
            return
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("mock backend failure")
            self._send_error_body(_RequestError(500, "internal_error", str(exc)))
            return
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        headers = {
            protocol.HEADER_BACKEND: self.backend.backend_name,
            protocol.HEADER_ELAPSED: str(elapsed_ms),
        }
        headers.update(params)
        self._send_png(png, headers)

    do_GET = do_POST


class MockBackendServer:
    """In-process protocol server; deterministic function of each request."""

    def __init__(
        self,
        mode: str = "identity",
        host: str = "127.0.0.1",
        port: int = 0,
        target_dir: str | None = None,
        color: tuple[int, int, int] = (128, 128, 128),
        backend_name: str | None = None,
        png_compress_level: int = 0,
    ):
        if mode not in MODES:
            raise ValidationError(f"unknown mock mode {mode!r}; expected one of {MODES}")
        if mode == "oracle" and not target_dir:
            raise ValidationError("oracle mode requires target_dir")
        self.mode = mode
        self.target_dir = target_dir
        self.color = tuple(int(c) for c in color)
        self.backend_name = backend_name or f"mock-{mode}"
        self.png_compress_level = png_compress_level
        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        self._httpd.backend = self  # type: ignore[attr-defined]
        _Handler.server_version = "defurnish-mock"
        self._thread: threading.Thread | None = None

    # -- request handlers -------------------------------------------------

    def handle_inpaint(self, parts: dict[str, bytes]) -> tuple[bytes, dict[str, str]]:
        if self.mode == "fallback_superres":
            raise _RequestError(404, "unsupported", "this backend only serves superres")
        for required in ("image", "mask"):
            if required not in parts:
                raise _RequestError(400, "bad_request", f"missing multipart field {required!r}")
        try:
            params = protocol.parse_inpaint_params(parts.get("params"))
        except (ValueError, ValidationError) as exc:
            raise _RequestError(400, "bad_request", f"invalid params: {exc}")
        request_id = params["request_id"]
        try:
            image = decode_png(parts["image"])
            mask = decode_png(parts["mask"])
        except ValidationError as exc:
            raise _RequestError(400, "bad_request", str(exc), request_id)
        if mask.ndim == 3:
            mask = mask[:, :, 0]
        if image.shape[:2] != mask.shape[:2]:
            raise _RequestError(
                400,
                "dimension_mismatch",
                f"mask {mask.shape[1]}x{mask.shape[0]} does not match "
                f"image {image.shape[1]}x{image.shape[0]}",
                request_id,
            )
        h, w = image.shape[:2]
        if w % protocol.DIMENSION_MULTIPLE or h % protocol.DIMENSION_MULTIPLE:
            raise _RequestError(
                400,
                "bad_dimensions",
                f"dimensions {w}x{h} must be multiples of {protocol.DIMENSION_MULTIPLE}",
                request_id,
            )
        if not (0.0 <= params["noise_mix"] <= 1.0) or params["num_steps"] < 1:
            raise _RequestError(400, "bad_request", "noise_mix/num_steps out of range", request_id)

        if self.mode == "identity":
            out = image
        elif self.mode == "constant":
            out = image.copy()
            out[mask > 127] = np.asarray(self.color, np.uint8)
        else:  # oracle
            path = os.path.join(self.target_dir, f"{request_id}.png")
            if not request_id or not os.path.exists(path):
                raise _RequestError(
                    404, "unknown_request_id", f"no target registered for {request_id!r}", request_id
                )
            with open(path, "rb") as f:
                out = decode_png(f.read())
            if out.shape[:2] != image.shape[:2]:
                raise _RequestError(
                    409,
                    "target_dimension_mismatch",
                    f"registered target is {out.shape[1]}x{out.shape[0]}",
                    request_id,
                )
        echo = {
            protocol.HEADER_STEPS: str(params["num_steps"]),
            protocol.HEADER_NOISE_MIX: repr(params["noise_mix"]),
            protocol.HEADER_REQUEST_ID: request_id,
        }
        return encode_png(out, compress_level=self.png_compress_level), echo

    def handle_superres(self, parts: dict[str, bytes]) -> tuple[bytes, dict[str, str]]:
        if "image" not in parts:
            raise _RequestError(400, "bad_request", "missing multipart field 'image'")
        try:
            params = json.loads(parts.get("params") or b"{}")
            scale = int(params.get("scale", 4))
        except (ValueError, AttributeError) as exc:
            raise _RequestError(400, "bad_request", f"invalid params: {exc}")
        if scale not in protocol.SUPERRES_SCALES:
            raise _RequestError(
                400, "bad_scale", f"scale {scale} must be one of {protocol.SUPERRES_SCALES}"
            )
        try:
            image = decode_png(parts["image"])
        except ValidationError as exc:
            raise _RequestError(400, "bad_request", str(exc))
        h, w = image.shape[:2]
        out = resize_to(image, (w * scale, h * scale), filter="lanczos3")
        return encode_png(out, compress_level=self.png_compress_level), {}

    # -- lifecycle ---------------------------------------------------------

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockBackendServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "MockBackendServer":
        return self.start()

    def __exit__(self, *exc):
        self.close()

    def serve_forever_with_signals(self):
        """Foreground serving for the CLI; SIGINT/SIGTERM shut down cleanly."""
        def _stop(signum, frame):
            log.info("received signal %d, shutting down", signum)
            threading.Thread(target=self._httpd.shutdown, daemon=True).start()

        signal.signal(signal.SIGINT, _stop)
        signal.signal(signal.SIGTERM, _stop)
        log.info("mock backend (%s) listening on %s", self.mode, self.url)
        try:
            self._httpd.serve_forever()
        finally:
            self._httpd.server_close()


def serve_mock(
    mode: str = "identity",
    bind: tuple[str, int] = ("127.0.0.1", 0),
    **kwargs,
) -> MockBackendServer:
    """Start a mock backend in a background thread; returns the running handle."""
    server = MockBackendServer(mode=mode, host=bind[0], port=bind[1], **kwargs)
    return server.start()
