"""Seed explanation sources: exact weights of a linear model, a random
baseline, a local perturbation surrogate, and JSON import of externally
computed scores.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

from .core import (
    Explanation,
    FeatureMap,
    FeatureStats,
    Instance,
    Model,
    TruthlensError,
    ValidationError,
)
from .models import LinearModelSpec
from .perturb import rng_key


def exact_linear_explain(
    spec: LinearModelSpec, fmap: FeatureMap, instance_id: str = ""
) -> Explanation:
    """Ground-truth scores of a linear model: z_j is the sum of the weights
    in group j (for singleton groups, the weight itself).

    A group-wide shift moves w·x by the group's weight sum, so the sum is
    the direction the output actually takes; the link never flips it.
    """
    if spec.raw_dim != fmap.raw_dim:
        raise ValidationError(
            f"dimension mismatch: model has {spec.raw_dim} weights, map covers {fmap.raw_dim}"
        )
    scores = np.array([math.fsum(spec.weights[i] for i in g) for g in fmap.groups])
    return Explanation("exact-linear", instance_id, scores)


def random_explain(fmap: FeatureMap, seed: int, instance_id: str = "") -> Explanation:
    """Baseline scores drawn i.i.d. uniform on [-1, 1]."""
    rng = np.random.Generator(np.random.PCG64(seed))
    scores = rng.uniform(-1.0, 1.0, fmap.n_features)
    return Explanation("random", instance_id, scores)


def surrogate_explain(
    model: Model,
    x: Instance,
    stats: FeatureStats,
    n_samples: int = 1000,
    kernel_width: float | None = None,
    ridge: float = 1e-6,
    seed: int = 42,
) -> Explanation:
    """Local surrogate scores: perturb the instance in a Gaussian
    neighborhood (each feature group shifted jointly by one draw scaled to
    its std), weight samples by exp(-d^2 / kernel_width^2) on normalized
    distance, and fit prediction deltas to group deltas with
    ridge-regularized weighted least squares through the origin.
    """
    fmap = x.map
    n_groups = fmap.n_features
    if n_samples < n_groups + 1:
        raise ValidationError(
            f"n_samples must be at least n_features + 1 ({n_groups + 1}), got {n_samples}"
        )
    if ridge < 0:
        raise ValidationError("ridge must be >= 0")
    if kernel_width is None:
        kernel_width = 0.75 * math.sqrt(n_groups)
    if kernel_width <= 0:
        raise ValidationError("kernel_width must be positive")

    group_std = np.array([stats.group_view(g).std for g in fmap.groups])
    rng = np.random.Generator(np.random.PCG64(rng_key(seed, f"surrogate:{x.id}", 0)))
    deltas = rng.standard_normal((n_samples, n_groups)) * group_std

    rows = []
    for k in range(n_samples):
        values = np.array(x.values)
        for j, g in enumerate(fmap.groups):
            values[list(g)] += deltas[k, j]
        rows.append(values)
    preds = np.asarray(model.predict_batch([x.values] + rows), dtype=float)
    y = preds[1:] - preds[0]

    # distance in units of std; zero-variance groups never move, 0/0 -> 0
    unit = np.divide(deltas, group_std, out=np.zeros_like(deltas), where=group_std > 0)
    d2 = np.sum(unit**2, axis=1)
    w = np.exp(-d2 / kernel_width**2)

    dtw = deltas.T * w
    gram = dtw @ deltas + ridge * np.eye(n_groups)
    rhs = dtw @ y
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as err:
        raise TruthlensError(f"degenerate neighborhood: {err}") from err
    if not np.all(np.isfinite(coef)):
        raise TruthlensError("degenerate neighborhood: non-finite coefficients")
    return Explanation("surrogate", x.id, coef)


def load_explanations(path: str) -> list[Explanation]:
    """Read explanations from a JSON file.

    Accepted shapes: a JSON array of explanation objects, a single object,
    an envelope with an "explanations" list, or one object per line. Each
    object needs "explainer", "instance_id" and "scores"; unknown extra
    fields are ignored.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError:
        return _load_ndjson(path, text)
    if isinstance(payload, dict) and isinstance(payload.get("explanations"), list):
        return [
            _explanation_from_obj(obj, f"{path}: entry {i}: ")
            for i, obj in enumerate(payload["explanations"])
        ]
    if isinstance(payload, dict):
        return [_explanation_from_obj(payload, f"{path}: ")]
    if isinstance(payload, list):
        return [
            _explanation_from_obj(obj, f"{path}: entry {i}: ")
            for i, obj in enumerate(payload)
        ]
    raise ValidationError(f"{path}: expected an explanation object or a list of them")


def _load_ndjson(path: str, text: str) -> list[Explanation]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise ValidationError(f"{path}: line {lineno}: invalid JSON: {err}") from err
        out.append(_explanation_from_obj(obj, f"{path}: line {lineno}: "))
    if not out:
        raise ValidationError(f"{path}: no explanations found")
    return out


def _explanation_from_obj(obj, where: str) -> Explanation:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}expected an object")
    for fieldname in ("explainer", "instance_id", "scores"):
        if fieldname not in obj:
            raise ValidationError(f"{where}missing field {fieldname!r}")
    scores = obj["scores"]
    if not isinstance(scores, list):
        raise ValidationError(f"{where}field 'scores' must be a list")
    try:
        arr = np.asarray(scores, dtype=float)
    except (TypeError, ValueError) as err:
        raise ValidationError(f"{where}field 'scores': {err}") from err
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{where}field 'scores' must be a flat list of finite numbers")
    return Explanation(str(obj["explainer"]), str(obj["instance_id"]), arr)


def dump_explanations(explanations: Sequence[Explanation], path: str) -> None:
    """Write explanations in the JSON shape load_explanations reads."""
    payload = [
        {
            "explainer": e.explainer_name,
            "instance_id": e.instance_id,
            "scores": [float(s) for s in e.scores],
        }
        for e in explanations
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
