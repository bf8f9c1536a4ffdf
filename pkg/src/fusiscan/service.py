"""Offline HTTP inference service.

Endpoints:
    POST /v1/classify   multipart field "image" or JSON {"image_b64": ...},
                        optional "threshold" override -> ClassifyResponse
    GET  /v1/health     {"status": "ok", "model": <architecture>}
    GET  /v1/model-info header summary of the loaded model

Built on the standard library's threading HTTP server: requests are handled
concurrently over one shared immutable model, the process opens no outbound
connections, and every malformed request gets a structured JSON error
instead of a crash.  Bodies over 10 MiB are rejected with 413 before being
read.
"""

from __future__ import annotations

import base64
import binascii
import email
import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .imageio import DecodeError, decode_image_bytes
from .modelfile import (
    DEFAULT_THRESHOLD,
    InferenceError,
    load_model,
    model_info,
    classify_timed,
)

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 10 * 1024 * 1024


class RequestError(ValueError):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _parse_multipart(body: bytes, content_type: str) -> dict[str, bytes]:
    msg = email.message_from_bytes(
        b"Content-Type: " + content_type.encode("latin-1") + b"\r\n\r\n" + body
    )
    if not msg.is_multipart():
        raise RequestError(400, "bad_multipart", "multipart body could not be parsed")
    fields: dict[str, bytes] = {}
    for part in msg.get_payload():
        name = part.get_param("name", header="content-disposition")
        if name is None:
            continue
        payload = part.get_payload(decode=True)
        if payload is not None:
            fields[str(name)] = payload
    return fields


def _parse_threshold(raw) -> float:
    try:
        threshold = float(raw)
    except (TypeError, ValueError):
        raise RequestError(400, "bad_threshold", f"threshold {raw!r} is not a number") from None
    if not 0.0 <= threshold <= 1.0:
        raise RequestError(400, "bad_threshold", f"threshold must be in [0, 1], got {threshold}")
    return threshold


def _extract_request(body: bytes, content_type: str) -> tuple[bytes, float | None]:
    """Pull (image bytes, optional threshold) out of a classify request body."""
    ct = (content_type or "").split(";")[0].strip().lower()
    if ct == "multipart/form-data":
        fields = _parse_multipart(body, content_type)
        if "image" not in fields:
            raise RequestError(400, "missing_image", 'multipart field "image" is required')
        threshold = _parse_threshold(fields["threshold"]) if "threshold" in fields else None
        return fields["image"], threshold
    if ct == "application/json":
        try:
            doc = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise RequestError(400, "bad_json", f"request body is not valid JSON: {exc}") from None
        if not isinstance(doc, dict) or "image_b64" not in doc:
            raise RequestError(400, "missing_image", 'JSON field "image_b64" is required')
        try:
            image = base64.b64decode(doc["image_b64"], validate=True)
        except (TypeError, binascii.Error) as exc:
            raise RequestError(400, "bad_base64", f"image_b64 is not valid base64: {exc}") from None
        threshold = _parse_threshold(doc["threshold"]) if "threshold" in doc else None
        return image, threshold
    raise RequestError(
        400, "bad_content_type", "send multipart/form-data or application/json"
    )


class InferenceHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "fusiscan"

    def log_message(self, fmt, *args):  # route access logs through logging, quietly
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _respond(self, status: int, doc: dict, close: bool = False):
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        origin = self.server.cors_origin
        if origin:
            self.send_header("Access-Control-Allow-Origin", origin)
        if close:
            self.send_header("Connection", "close")
            self.close_connection = True
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str, close: bool = False):
        self._respond(status, {"code": code, "message": message}, close=close)

    def do_GET(self):
        try:
            if self.path == "/v1/health":
                self._respond(200, {"status": "ok", "model": self.server.model.architecture_name})
            elif self.path == "/v1/model-info":
                self._respond(200, self.server.info)
            else:
                self._error(404, "not_found", f"no such endpoint: {self.path}")
        except Exception:
            log.exception("GET handler failed")
            self._error(500, "internal", "internal error")

    def do_OPTIONS(self):
        self.send_response(204)
        origin = self.server.cors_origin
        if origin:
            self.send_header("Access-Control-Allow-Origin", origin)
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self):
        try:
            self._handle_post()
        except RequestError as exc:
            self._error(exc.status, exc.code, exc.message)
        except Exception:
            log.exception("POST handler failed")
            self._error(500, "internal", "internal error")

    def _handle_post(self):
        if self.path != "/v1/classify":
            self._error(404, "not_found", f"no such endpoint: {self.path}")
            return
        length_header = self.headers.get("Content-Length")
        try:
            length = int(length_header)
        except (TypeError, ValueError):
            self._error(400, "bad_length", "Content-Length header is required", close=True)
            return
        if length > MAX_BODY_BYTES:
            # refuse before reading the body; the connection is dropped
            self._error(413, "too_large", f"body exceeds {MAX_BODY_BYTES} bytes", close=True)
            return
        if length < 0:
            self._error(400, "bad_length", "Content-Length must be non-negative", close=True)
            return
        body = self.rfile.read(length)
        image_bytes, threshold = _extract_request(body, self.headers.get("Content-Type", ""))
        if threshold is None:
            threshold = self.server.threshold
        try:
            pixels = decode_image_bytes(image_bytes, allow_ppm=False)
        except DecodeError as exc:
            self._error(422, "undecodable_image", str(exc))
            return
        try:
            diagnosis, latency_ms = classify_timed(self.server.model, pixels, threshold)
        except InferenceError as exc:
            self._error(500, "inference_failed", str(exc))
            return
        self._respond(
            200, diagnosis.to_response(self.server.model.architecture_name, latency_ms)
        )


class InferenceServer(ThreadingHTTPServer):
    """HTTP server bound to one loaded, immutable model."""

    daemon_threads = True

    def __init__(self, address, model, threshold=DEFAULT_THRESHOLD, cors_origin=None, info=None):
        self.model = model
        self.threshold = threshold
        self.cors_origin = cors_origin
        self.info = info or {}
        super().__init__(address, InferenceHandler)


def make_server(
    model_path,
    bind_address: str = "127.0.0.1",
    port: int = 8000,
    threshold: float = DEFAULT_THRESHOLD,
    cors_origin: str | None = None,
) -> InferenceServer:
    """Load the model (failing fast), then bind the socket."""
    model = load_model(model_path)
    info = model_info(model_path)
    return InferenceServer((bind_address, port), model, threshold, cors_origin, info)


def serve(model_path, bind_address="127.0.0.1", port=8000, threshold=DEFAULT_THRESHOLD, cors_origin=None):
    """Run the service until interrupted."""
    server = make_server(model_path, bind_address, port, threshold, cors_origin)
    log.info("serving %s on http://%s:%d", server.model.architecture_name, bind_address, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()


def start_background(server: InferenceServer) -> threading.Thread:
    """Serve on a daemon thread (used by tests and demos)."""
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
