"""Shared fixtures: stub models with forced behaviour and the hand-built
three-explainer example report set used across modules."""

from __future__ import annotations

import numpy as np
import pytest

from truthlens import (
    CallableModel,
    DataKind,
    Direction,
    EvalConfig,
    EvaluationReport,
    FeatureMap,
    FeatureStats,
    FeatureVerdict,
    Instance,
    alterations_for_feature,
)
from truthlens.truthfulness import EXP, IMP, AlterRecord


def row_key(row) -> bytes:
    return np.asarray(row, dtype=float).tobytes()


def forced_model(x: Instance, stats: FeatureStats, config: EvalConfig,
                 p_orig: float, targets: dict) -> CallableModel:
    """A model that realizes a chosen EXP per (feature_id, direction).

    ``targets`` maps (feature_id, Direction) to -1/0/+1; the model answers
    p_orig for the original instance and p_orig + bump(exp) for each
    altered row, where the bump clears (or stays inside) config.delta.
    """
    step = max(config.delta * 4, 0.05)
    mapping = {row_key(x.values): p_orig}
    for j in range(x.map.n_features):
        for alt in alterations_for_feature(x, j, stats, config):
            exp = targets[(j, alt.direction)]
            key = row_key(alt.altered_instance.values)
            if key in mapping and mapping[key] != p_orig + step * exp:
                raise AssertionError("altered rows collide; pick a different fixture")
            mapping[key] = p_orig + step * exp

    def fn(rows):
        return [mapping[row_key(r)] for r in rows]

    return CallableModel(fn, name="forced")


def simple_stats(dim: int, lo=-10.0, hi=10.0, std=1.0) -> FeatureStats:
    return FeatureStats(
        min=np.full(dim, lo),
        max=np.full(dim, hi),
        mean=np.full(dim, (lo + hi) / 2),
        std=np.full(dim, std),
        sample_count=100,
        source="synthetic",
    )


def tabular_instance(values, iid="t0", names=()) -> Instance:
    values = np.asarray(values, dtype=float)
    fmap = FeatureMap.identity(values.shape[0], names)
    return Instance(iid, values, DataKind.TABULAR, fmap)


# ------------------------------------------------- worked example reports

EXAMPLE_INSTANCE = [0.0, 1.0, 0.5, 0.3, -0.2]
EXAMPLE_SCORES = {
    "Z0": [0.0, 1.0, 0.5, 0.3, -0.2],
    "Z1": [0.1, 0.23, 0.7, 0.3, 0.3],
    "Z2": [-0.1, 0.2, -0.4, 0.2, -0.1],
}
EXAMPLE_MARKS = {
    "Z0": [True, True, False, False, True],
    "Z1": [True, True, False, False, False],
    "Z2": [False, True, True, False, True],
}
EXAMPLE_AC = [0.05, 0.8, 0.5, 0.01, 0.3]
EXAMPLE_META = [0.1, 1.0, -0.4, 0.0, -0.2]
EXAMPLE_PROVENANCE = ("Z1", "Z0", "Z2", "zero-fill", "Z0")


def _example_records(z: float, truthful: bool, delta: float):
    """INC/DEC records realizing a wanted verdict for a score's sign."""
    imp = IMP.of_score(z)
    exp_inc = int(imp) * 1
    exp_dec = int(imp) * -1
    if not truthful:
        exp_dec = 1 if imp is IMP.NEUTRAL else int(imp)  # any non-expected direction
    records = []
    for direction, exp in ((Direction.INC, exp_inc), (Direction.DEC, exp_dec)):
        diff = exp * max(4 * delta, 0.2)
        records.append(
            AlterRecord(
                alt=direction,
                p_orig=0.5,
                p_alt=0.5 + diff,
                exp=EXP(exp),
                matched=(direction is Direction.INC) or truthful,
                value_from=1.0,
                value_to=1.0 + float(direction) * 0.1,
            )
        )
    return tuple(records)


def example_reports(config: EvalConfig | None = None) -> list[EvaluationReport]:
    """The three-explainer, five-feature worked example as report objects.

    The average-change row is carried verbatim (the example is didactic:
    its per-explainer marks cannot all arise from one live model under
    shared alterations, so only the stored fields matter downstream).
    """
    config = config or EvalConfig()
    reports = []
    for name in ("Z0", "Z1", "Z2"):
        verdicts = []
        for j in range(5):
            z = EXAMPLE_SCORES[name][j]
            truthful = EXAMPLE_MARKS[name][j]
            verdicts.append(
                FeatureVerdict(
                    feature_id=j,
                    name=f"f{j + 1}",
                    score=z,
                    imp=IMP.of_score(z),
                    records=_example_records(z, truthful, config.delta),
                    truthful=truthful,
                    avg_change=EXAMPLE_AC[j],
                )
            )
        untruthful = sum(1 for v in verdicts if not v.truthful)
        reports.append(
            EvaluationReport(
                instance_id="x_e",
                explainer_name=name,
                verdicts=tuple(verdicts),
                truthfulness=(5 - untruthful) / 5,
                untruthful_count=untruthful,
                config=config,
                kind=DataKind.TABULAR,
            )
        )
    return reports


@pytest.fixture
def table_example_reports():
    return example_reports()
