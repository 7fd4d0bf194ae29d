"""Hosted model implementations.

The bridge carries its own forward passes and analytic gradients so the
served predictions are an independent route from any client-side model.
Specs are JSON files: {"type": "linear", "weights", "bias", "link"} or
{"type": "mlp", "layers": [{"weights", "bias"}, ...], "activation",
"link"}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class BridgeError(Exception):
    """Any bridge-level failure: bad spec, bad request, bad method."""


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _link_apply(link: str, z: np.ndarray) -> np.ndarray:
    if link == "identity":
        return z
    if link == "sigmoid":
        return _sigmoid(z)
    raise BridgeError(f"unknown link {link!r}")


def _link_grad(link: str, z: float) -> float:
    if link == "identity":
        return 1.0
    p = float(_sigmoid(np.array([z]))[0])
    return p * (1.0 - p)


@dataclass(frozen=True)
class LinearModel:
    weights: tuple
    bias: float = 0.0
    link: str = "identity"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise BridgeError("linear weights must be a non-empty vector")
        if not np.isfinite(w).all() or not np.isfinite(self.bias):
            raise BridgeError("linear spec has non-finite entries")
        _link_apply(self.link, np.zeros(1))

    @property
    def n_inputs(self) -> int:
        return len(self.weights)

    def predict(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        z = rows @ np.asarray(self.weights, dtype=float) + self.bias
        return _link_apply(self.link, z)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        w = np.asarray(self.weights, dtype=float)
        z = float(np.asarray(x, dtype=float) @ w + self.bias)
        return _link_grad(self.link, z) * w


def _activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    raise BridgeError(f"unknown activation {name!r}")


def _activation_grad(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return 1.0 - np.tanh(z) ** 2
    return (z > 0).astype(float)


@dataclass(frozen=True)
class MlpModel:
    """One or more dense layers; the final layer emits a single output."""

    layers: tuple
    activation: str = "tanh"
    link: str = "sigmoid"

    def __post_init__(self):
        if not self.layers:
            raise BridgeError("a network needs at least one layer")
        fixed = []
        width = None
        for k, (w, b) in enumerate(self.layers):
            w = np.asarray(w, dtype=float)
            b = np.asarray(b, dtype=float)
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise BridgeError(f"layer {k}: weight/bias shapes disagree")
            if width is not None and w.shape[1] != width:
                raise BridgeError(f"layer {k} expects {w.shape[1]} inputs, got {width}")
            width = w.shape[0]
            fixed.append((w, b))
        if width != 1:
            raise BridgeError("the final layer must emit a single output")
        object.__setattr__(self, "layers", tuple(fixed))
        _activation(self.activation, np.zeros(1))
        _link_apply(self.link, np.zeros(1))

    @property
    def n_inputs(self) -> int:
        return self.layers[0][0].shape[1]

    def predict(self, rows: np.ndarray) -> np.ndarray:
        h = np.asarray(rows, dtype=float).T
        last = len(self.layers) - 1
        for k, (w, b) in enumerate(self.layers):
            h = w @ h + b[:, None]
            if k != last:
                h = _activation(self.activation, h)
        return _link_apply(self.link, h[0])

    def gradient(self, x: np.ndarray) -> np.ndarray:
        # forward pass keeping pre-activations, then hand backprop
        h = np.asarray(x, dtype=float)
        pre = []
        last = len(self.layers) - 1
        for k, (w, b) in enumerate(self.layers):
            z = w @ h + b
            pre.append(z)
            h = _activation(self.activation, z) if k != last else z
        grad = np.array([_link_grad(self.link, float(pre[-1][0]))])
        for k in range(last, -1, -1):
            w, _ = self.layers[k]
            grad = grad @ w
            if k != 0:
                grad = grad * _activation_grad(self.activation, pre[k - 1])
        return grad


def model_from_dict(d: dict):
    if not isinstance(d, dict) or "type" not in d:
        raise BridgeError("malformed model spec: missing 'type'")
    kind = d["type"]
    try:
        if kind == "linear":
            return LinearModel(
                weights=tuple(float(w) for w in d["weights"]),
                bias=float(d.get("bias", 0.0)),
                link=str(d.get("link", "identity")),
            )
        if kind == "mlp":
            layers = tuple((layer["weights"], layer["bias"]) for layer in d["layers"])
            return MlpModel(
                layers=layers,
                activation=str(d.get("activation", "tanh")),
                link=str(d.get("link", "sigmoid")),
            )
    except (KeyError, TypeError, ValueError) as err:
        raise BridgeError(f"malformed model spec: {err}") from err
    raise BridgeError(f"unknown model type {kind!r}")


def load_model(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as err:
            raise BridgeError(f"{path}: invalid JSON: {err}") from err
    return model_from_dict(d)
