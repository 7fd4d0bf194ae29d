"""Prediction protocol endpoints.

Both transports carry the same JSON bodies: request {"instances":
[[...], ...]}, response {"predictions": [...]}. Failures become
{"error": "..."} objects; the serving process never dies on a bad
request. Every served batch size is logged to stderr.
"""

from __future__ import annotations

import json
import logging
import sys
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np

from .models import BridgeError

log = logging.getLogger("model_bridge")


def handle_request(model, payload) -> dict:
    """One protocol round: request object in, response object out."""
    if not isinstance(payload, dict) or "instances" not in payload:
        return {"error": "malformed request: expected an object with 'instances'"}
    rows = payload["instances"]
    if not isinstance(rows, list):
        return {"error": "malformed request: 'instances' must be a list of rows"}
    if len(rows) == 0:
        return {"error": "empty batch"}
    try:
        batch = np.asarray(rows, dtype=float)
    except (TypeError, ValueError):
        return {"error": "malformed request: rows must be lists of numbers"}
    if batch.ndim != 2:
        return {"error": "malformed request: rows must share one length"}
    if batch.shape[1] != model.n_inputs:
        return {"error": f"model expects {model.n_inputs} values per row, got {batch.shape[1]}"}
    try:
        preds = model.predict(batch)
    except BridgeError as err:
        return {"error": str(err)}
    log.info("served batch of %d", len(rows))
    return {"predictions": [float(p) for p in preds]}


def serve_stdio(model, stdin=None, stdout=None) -> None:
    """Line-delimited JSON loop; returns at end of input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as err:
            response = {"error": f"invalid JSON: {err}"}
        else:
            response = handle_request(model, payload)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


class _Handler(BaseHTTPRequestHandler):
    model = None

    def do_POST(self):
        if self.path != "/predict":
            self._reply(404, {"error": f"no such endpoint {self.path!r}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as err:
            self._reply(400, {"error": f"invalid JSON: {err}"})
            return
        response = handle_request(self.model, payload)
        self._reply(400 if "error" in response else 200, response)

    def _reply(self, status: int, obj: dict) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):
        log.debug("http: " + fmt, *args)


def serve_http(model, host: str = "127.0.0.1", port: int = 8321) -> HTTPServer:
    """Build the HTTP endpoint; the caller drives serve_forever()."""
    handler = type("BoundHandler", (_Handler,), {"model": model})
    return HTTPServer((host, port), handler)


def serve(model_loader, transport: str, host: str = "127.0.0.1", port: int = 8321):
    """Start serving. stdio blocks until end of input; http returns the
    running server so the caller controls its lifetime."""
    model = model_loader()
    if transport == "stdio":
        return serve_stdio(model)
    if transport == "http":
        return serve_http(model, host, port)
    raise BridgeError(f"unknown transport {transport!r}")
