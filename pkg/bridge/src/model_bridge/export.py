"""Attribution export in the explanation JSON schema.

Produces files the evaluation engine imports directly: a JSON array of
{"explainer", "instance_id", "scores"} objects.
"""

from __future__ import annotations

import json

import numpy as np

from .models import BridgeError

METHODS = ("gradient-x-input",)


def gradient_x_input(model, values: np.ndarray) -> np.ndarray:
    return model.gradient(values) * np.asarray(values, dtype=float)


def export_attributions(model, instances, method: str, out: str | None = None) -> list[dict]:
    """Score each (instance_id, values) pair; optionally write the file.

    Unsupported methods fail loudly with the capability list so callers
    can discover what the hosted model offers.
    """
    if method not in METHODS:
        raise BridgeError(
            f"method {method!r} is not supported by this model; available: "
            + ", ".join(METHODS)
        )
    entries = []
    for instance_id, values in instances:
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size != model.n_inputs:
            raise BridgeError(
                f"instance {instance_id!r}: expected {model.n_inputs} values"
            )
        scores = gradient_x_input(model, values)
        if not np.isfinite(scores).all():
            raise BridgeError(f"instance {instance_id!r}: non-finite attribution")
        entries.append({
            "explainer": method,
            "instance_id": str(instance_id),
            "scores": [float(s) for s in scores],
        })
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(entries, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return entries
