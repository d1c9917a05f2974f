"""Read-only HTTP inference service.

``POST /recommend`` takes ``{"image": <base64 PNG/JPEG>, "k": 3}`` and answers
with the ranked APIs and the checkpoint fingerprint. ``GET /health`` reports
model metadata. The checkpoint is loaded once and never modified.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import os
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import BadK, Plot2ApiError, UnreadableImage
from .inference import DEFAULT_K, recommend
from .trainer import Checkpoint

log = logging.getLogger(__name__)

DEFAULT_MAX_BYTES = int(os.environ.get("PLOT2API_MAX_BYTES", 8 * 1024 * 1024))


class _Handler(BaseHTTPRequestHandler):
    server_version = "plot2api"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status, payload):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status, err, msg):
        self._send(status, {"error": err, "message": msg})

    def do_GET(self):
        if self.path.rstrip("/") != "/health":
            return self._error(HTTPStatus.NOT_FOUND, "NotFound", self.path)
        ckpt = self.server.checkpoint
        self._send(HTTPStatus.OK, {
            "status": "ok",
            "fingerprint": ckpt.fingerprint,
            "apis": list(ckpt.vocabulary.names),
            "input_size": list(ckpt.model_config.input_size),
            "epoch": ckpt.epoch,
        })

    def do_POST(self):
        if self.path.rstrip("/") != "/recommend":
            return self._error(HTTPStatus.NOT_FOUND, "NotFound", self.path)
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            return self._error(HTTPStatus.LENGTH_REQUIRED, "LengthRequired", "Content-Length header required")
        if length > self.server.max_bytes:
            self.close_connection = True
            return self._error(HTTPStatus.REQUEST_ENTITY_TOO_LARGE, "PayloadTooLarge",
                               f"{length} bytes exceeds limit of {self.server.max_bytes}")
        raw = self.rfile.read(length)
        try:
            req = json.loads(raw)
            if not isinstance(req, dict) or "image" not in req:
                raise UnreadableImage("request must be a JSON object with an 'image' field")
            try:
                data = base64.b64decode(req["image"], validate=True)
            except (binascii.Error, TypeError, ValueError):
                raise UnreadableImage("'image' is not valid base64") from None
            result = recommend(self.server.checkpoint, data, req.get("k", DEFAULT_K))
        except json.JSONDecodeError:
            return self._error(HTTPStatus.BAD_REQUEST, "MalformedRequest", "body is not JSON")
        except (UnreadableImage, BadK) as exc:
            return self._error(HTTPStatus.BAD_REQUEST, type(exc).__name__, str(exc))
        except Plot2ApiError as exc:
            return self._error(HTTPStatus.INTERNAL_SERVER_ERROR, type(exc).__name__, str(exc))
        self._send(HTTPStatus.OK, result.to_dict())


class RecommendServer(ThreadingHTTPServer):
    daemon_threads = True
    # socketserver's default backlog of 5 resets bursts of concurrent clients
    request_queue_size = 128

    def __init__(self, address, checkpoint: Checkpoint, max_bytes: int = DEFAULT_MAX_BYTES):
        self.checkpoint = checkpoint
        self.max_bytes = max_bytes
        # materialise lazily built state before any request thread exists
        _ = checkpoint.model, checkpoint.fingerprint
        super().__init__(address, _Handler)


def parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    return host or "127.0.0.1", int(port)


def serve(checkpoint: Checkpoint, bind: str = "127.0.0.1:8000", max_bytes: int = DEFAULT_MAX_BYTES) -> None:
    server = RecommendServer(parse_bind(bind), checkpoint, max_bytes)
    log.info("serving %s on %s:%d", checkpoint.fingerprint, *server.server_address[:2])
    try:
        server.serve_forever()
    finally:
        server.server_close()


def start_in_thread(checkpoint: Checkpoint, bind: str = "127.0.0.1:0", max_bytes: int = DEFAULT_MAX_BYTES):
    """Start a server on a background thread; returns ``(server, url)``."""
    server = RecommendServer(parse_bind(bind), checkpoint, max_bytes)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    host, port = server.server_address[:2]
    return server, f"http://{host}:{port}"
