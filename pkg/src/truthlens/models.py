"""Reference models (linear, one-hidden-layer feed-forward) and clients
for external models speaking the prediction protocol over HTTP or a
subprocess pipe.

All in-process predictions are computed row by row with vector dot
products. That keeps predict_batch([a, b]) bitwise equal to
[predict(a), predict(b)]: batched matrix products are allowed to
re-associate sums and would break byte-stable reports.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
import requests

from .core import Model, ModelError, ValidationError, _freeze


class Link(str, Enum):
    IDENTITY = "identity"
    SIGMOID = "sigmoid"

    def apply(self, t: float) -> float:
        if self is Link.IDENTITY:
            return float(t)
        # numerically stable logistic for large |t|
        if t >= 0:
            return 1.0 / (1.0 + math.exp(-t))
        e = math.exp(t)
        return e / (1.0 + e)


class Activation(str, Enum):
    TANH = "tanh"
    RELU = "relu"

    def apply(self, h: np.ndarray) -> np.ndarray:
        return np.tanh(h) if self is Activation.TANH else np.maximum(h, 0.0)


@dataclass(frozen=True)
class LinearModelSpec(Model):
    """P(x) = link(w·x + b). The weight vector doubles as the ground-truth
    explanation of every prediction."""

    weights: np.ndarray
    bias: float = 0.0
    link: Link = Link.IDENTITY
    name: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "weights", _freeze(self.weights))
        object.__setattr__(self, "link", Link(self.link))
        if self.weights.ndim != 1:
            raise ValidationError("weights must be a vector")
        if not (np.all(np.isfinite(self.weights)) and math.isfinite(self.bias)):
            raise ValidationError("non-finite model parameters")

    @property
    def raw_dim(self) -> int:
        return int(self.weights.shape[0])

    def predict_batch(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            r = np.asarray(row, dtype=float)
            if r.shape != self.weights.shape:
                raise ValidationError(
                    f"length mismatch: model expects {self.raw_dim} values, row {i} has {r.shape}"
                )
            out[i] = self.link.apply(float(np.dot(self.weights, r)) + self.bias)
        return out


def linear_predict(spec: LinearModelSpec, x_raw: Sequence[float]) -> float:
    return float(spec.predict_batch([x_raw])[0])


@dataclass(frozen=True)
class MlpModelSpec(Model):
    """Feed-forward network: hidden layers with one activation, a scalar
    output passed through the link."""

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]  # (weight matrix, bias) per layer
    activation: Activation = Activation.TANH
    link: Link = Link.SIGMOID
    name: str = "mlp"

    def __post_init__(self):
        frozen = []
        for k, (w, b) in enumerate(self.layers):
            w, b = _freeze(w), _freeze(b)
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValidationError(f"layer {k}: weight/bias shapes disagree")
            if frozen and w.shape[1] != frozen[-1][0].shape[0]:
                raise ValidationError(
                    f"layer {k} expects {w.shape[1]} inputs, previous layer emits {frozen[-1][0].shape[0]}"
                )
            frozen.append((w, b))
        if not frozen:
            raise ValidationError("a network needs at least one layer")
        if frozen[-1][0].shape[0] != 1:
            raise ValidationError("the final layer must emit a single output")
        object.__setattr__(self, "layers", tuple(frozen))
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "link", Link(self.link))

    @property
    def raw_dim(self) -> int:
        return int(self.layers[0][0].shape[1])

    def _forward(self, row: np.ndarray) -> float:
        h = row
        for w, b in self.layers[:-1]:
            h = self.activation.apply(np.array([np.dot(wi, h) for wi in w]) + b)
        w, b = self.layers[-1]
        return self.link.apply(float(np.dot(w[0], h)) + float(b[0]))

    def predict_batch(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            r = np.asarray(row, dtype=float)
            if r.shape != (self.raw_dim,):
                raise ValidationError(
                    f"shape mismatch: model expects {self.raw_dim} values, row {i} has {r.shape}"
                )
            out[i] = self._forward(r)
        return out


def mlp_predict(spec: MlpModelSpec, x_raw: Sequence[float]) -> float:
    return float(spec.predict_batch([x_raw])[0])


def model_spec_from_dict(d: dict, name: str = "") -> Model:
    """Build a model from its JSON form:
    {"type": "linear", "weights": [...], "bias": 0.0, "link": "sigmoid"} or
    {"type": "mlp", "layers": [{"weights": [[...]], "bias": [...]}, ...],
     "activation": "tanh", "link": "sigmoid"}.
    """
    try:
        kind = d["type"]
        if kind == "linear":
            return LinearModelSpec(
                weights=np.asarray(d["weights"], dtype=float),
                bias=float(d.get("bias", 0.0)),
                link=Link(d.get("link", "identity")),
                name=name or d.get("name", "linear"),
            )
        if kind == "mlp":
            layers = tuple(
                (np.asarray(l["weights"], dtype=float), np.asarray(l["bias"], dtype=float))
                for l in d["layers"]
            )
            return MlpModelSpec(
                layers=layers,
                activation=Activation(d.get("activation", "tanh")),
                link=Link(d.get("link", "sigmoid")),
                name=name or d.get("name", "mlp"),
            )
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError(f"malformed model spec: {err}") from err
    raise ValidationError(f"unknown model type {d.get('type')!r}")


def load_model_spec(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValidationError(f"{path}: invalid JSON: {err}") from err
    return model_spec_from_dict(d, name=d.get("name", ""))


def _parse_predictions(payload, n_sent: int) -> np.ndarray:
    if not isinstance(payload, dict) or "predictions" not in payload:
        raise ModelError("malformed prediction response: missing 'predictions'")
    preds = payload["predictions"]
    if not isinstance(preds, list):
        raise ModelError("malformed prediction response: 'predictions' is not a list")
    if len(preds) != n_sent:
        raise ModelError(
            f"prediction count mismatch: sent {n_sent} rows, received {len(preds)}"
        )
    try:
        return np.asarray(preds, dtype=float)
    except (TypeError, ValueError) as err:
        raise ModelError(f"malformed prediction response: {err}") from err


def _encode_batch(rows: Sequence[Sequence[float]]) -> dict:
    return {"instances": [[float(v) for v in row] for row in rows]}


@dataclass
class HttpModel(Model):
    """Client for a model served at POST <base_url>/predict.

    Uses one-shot requests (no shared session) so instances can be used
    from several worker threads at once.
    """

    base_url: str
    timeout: float = 30.0
    retries: int = 0  # extra attempts after a transport failure
    name: str = "http"

    def predict_batch(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        if len(rows) == 0:
            raise ValidationError("empty batch")
        url = self.base_url.rstrip("/") + "/predict"
        body = _encode_batch(rows)
        last_err: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(url, json=body, timeout=self.timeout)
            except requests.RequestException as err:
                last_err = err
                continue
            if resp.status_code != 200:
                raise ModelError(
                    f"prediction endpoint returned status {resp.status_code}: {resp.text[:200]}"
                )
            try:
                payload = resp.json()
            except ValueError as err:
                raise ModelError(f"malformed prediction response: {err}") from err
            return _parse_predictions(payload, len(rows))
        raise ModelError(f"prediction request failed: {last_err}") from last_err


class SubprocessModel(Model):
    """Client for a model behind a line-delimited JSON pipe.

    One request object per line on stdin, one response object per line on
    stdout; the child process lives for the whole evaluation session. A
    lock serializes request/response pairs, so the client is safe to share
    between worker threads.
    """

    def __init__(self, command: str | Sequence[str], name: str = "exec"):
        self.name = name
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ValidationError("empty model command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as err:
            raise ModelError(f"could not start model process {argv[0]!r}: {err}") from err
        self._lock = threading.Lock()

    def predict_batch(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        if len(rows) == 0:
            raise ValidationError("empty batch")
        line = json.dumps(_encode_batch(rows), separators=(",", ":"))
        with self._lock:
            if self._proc.poll() is not None:
                raise ModelError(self._death_notice())
            try:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
                reply = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as err:
                raise ModelError(self._death_notice(str(err))) from err
        if not reply:
            raise ModelError(self._death_notice("no response line"))
        try:
            payload = json.loads(reply)
        except json.JSONDecodeError as err:
            raise ModelError(f"malformed prediction response: {err}") from err
        if isinstance(payload, dict) and "error" in payload:
            raise ModelError(f"model process reported: {payload['error']}")
        return _parse_predictions(payload, len(rows))

    def _death_notice(self, detail: str = "") -> str:
        note = "model process is not responding" if self._proc.poll() is None else (
            f"model process exited with code {self._proc.returncode}"
        )
        if detail:
            note += f" ({detail})"
        return note

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()

    def __enter__(self) -> "SubprocessModel":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass
