"""The truthfulness metric: expected-behaviour checks per feature,
per-feature verdicts, the normalized truthfulness score and the average
output change used to order features downstream.

A feature's importance score is truthful exactly when, for every
alteration of its value, the observed direction of the prediction change
equals importance-sign times alteration-direction (the 18-cell
truthfulness matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Sequence

import numpy as np

from .core import (
    DataKind,
    EvalConfig,
    Explanation,
    FeatureStats,
    Instance,
    Model,
    ModelError,
    ValidationError,
    validate_explanation,
)
from .perturb import Alteration, Direction, alterations_for_feature

ALT = Direction  # alteration direction: INC=+1, DEC=-1

REPORT_SCHEMA = "truthlens/report-v1"


class IMP(IntEnum):
    """Sign of an importance score."""

    POSITIVE = 1
    NEUTRAL = 0
    NEGATIVE = -1

    @classmethod
    def of_score(cls, z: float) -> "IMP":
        # exact sign, no epsilon band: explainers emitting denormal noise
        # must threshold on their side
        if z > 0:
            return cls.POSITIVE
        if z < 0:
            return cls.NEGATIVE
        return cls.NEUTRAL


class EXP(IntEnum):
    """Observed direction of the prediction change."""

    INCREASING = 1
    STABLE = 0
    DECREASING = -1

    @property
    def label(self) -> str:
        return {1: "INC", 0: "STABLE", -1: "DEC"}[int(self)]


def observe_expected(p_orig: float, p_alt: float, delta: float) -> EXP:
    """Classify a prediction change against the stability tolerance.

    Increasing when the change exceeds +delta, decreasing below -delta,
    stable otherwise. (The three cases partition the line; delta = 0 makes
    any nonzero drift count as movement.)
    """
    if not (math.isfinite(p_orig) and math.isfinite(p_alt)):
        raise ModelError("model returned non-finite output")
    diff = p_alt - p_orig
    if diff > delta:
        return EXP.INCREASING
    if diff < -delta:
        return EXP.DECREASING
    return EXP.STABLE


@dataclass(frozen=True)
class AlterRecord:
    """One queried alteration of one feature and its outcome."""

    alt: Direction
    p_orig: float
    p_alt: float
    exp: EXP
    matched: bool = False
    value_from: float | None = None
    value_to: float | None = None
    shift: float | None = None

    def to_dict(self) -> dict:
        return {
            "alt": int(self.alt),
            "p_orig": self.p_orig,
            "p_alt": self.p_alt,
            "exp": int(self.exp),
            "matched": self.matched,
            "value_from": self.value_from,
            "value_to": self.value_to,
            "shift": self.shift,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlterRecord":
        return cls(
            alt=Direction(int(d["alt"])),
            p_orig=float(d["p_orig"]),
            p_alt=float(d["p_alt"]),
            exp=EXP(int(d["exp"])),
            matched=bool(d["matched"]),
            value_from=d.get("value_from"),
            value_to=d.get("value_to"),
            shift=d.get("shift"),
        )


@dataclass(frozen=True)
class FeatureVerdict:
    """Truthfulness verdict for one feature of one explanation."""

    feature_id: int
    name: str
    score: float
    imp: IMP
    records: tuple[AlterRecord, ...]
    truthful: bool
    avg_change: float

    def to_dict(self) -> dict:
        return {
            "feature_id": self.feature_id,
            "name": self.name,
            "score": self.score,
            "imp": int(self.imp),
            "records": [r.to_dict() for r in self.records],
            "truthful": self.truthful,
            "avg_change": self.avg_change,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureVerdict":
        return cls(
            feature_id=int(d["feature_id"]),
            name=str(d.get("name", f"f{d['feature_id']}")),
            score=float(d["score"]),
            imp=IMP(int(d["imp"])) if "imp" in d else IMP.of_score(float(d["score"])),
            records=tuple(AlterRecord.from_dict(r) for r in d.get("records", [])),
            truthful=bool(d["truthful"]),
            avg_change=float(d["avg_change"]),
        )


@dataclass(frozen=True)
class EvaluationReport:
    """Full truthfulness evaluation of one explanation on one instance."""

    instance_id: str
    explainer_name: str
    verdicts: tuple[FeatureVerdict, ...]
    truthfulness: float
    untruthful_count: int
    config: EvalConfig
    kind: DataKind | None = None

    @property
    def scores(self) -> np.ndarray:
        return np.array([v.score for v in self.verdicts])

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "instance_id": self.instance_id,
            "explainer": self.explainer_name,
            "kind": self.kind.value if self.kind else None,
            "config": self.config.as_dict(),
            "truthfulness": self.truthfulness,
            "untruthful_count": self.untruthful_count,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        """Rebuild a report from its JSON form. Stored verdicts and the
        average-change row are taken verbatim, not recomputed."""
        try:
            cfg = d.get("config", {})
            return cls(
                instance_id=str(d["instance_id"]),
                explainer_name=str(d["explainer"]),
                verdicts=tuple(FeatureVerdict.from_dict(v) for v in d["verdicts"]),
                truthfulness=float(d["truthfulness"]),
                untruthful_count=int(d["untruthful_count"]),
                config=EvalConfig(**cfg),
                kind=DataKind(d["kind"]) if d.get("kind") else None,
            )
        except (KeyError, TypeError) as err:
            raise ValidationError(f"malformed evaluation report: {err}") from err


def evaluate_feature(
    score: float,
    records: Sequence[AlterRecord],
    feature_id: int = 0,
    name: str = "",
) -> FeatureVerdict:
    """Mark each alteration record against the truthfulness matrix and
    fold them into the per-feature verdict.

    A record matches iff its observed direction equals IMP x ALT; the
    feature is truthful iff every record matches. The average change is
    the mean absolute prediction shift over the records.
    """
    if not 1 <= len(records) <= 2:
        raise ValidationError("a feature is evaluated on 1 (text) or 2 records")
    imp = IMP.of_score(score)
    marked = tuple(
        replace(r, matched=(int(r.exp) == int(imp) * int(r.alt))) for r in records
    )
    avg = math.fsum(abs(r.p_orig - r.p_alt) for r in marked) / len(marked)
    return FeatureVerdict(
        feature_id=feature_id,
        name=name or f"f{feature_id}",
        score=float(score),
        imp=imp,
        records=marked,
        truthful=all(r.matched for r in marked),
        avg_change=avg,
    )


def _record_from_alteration(a: Alteration, p_orig: float, p_alt: float, delta: float) -> AlterRecord:
    return AlterRecord(
        alt=a.direction,
        p_orig=p_orig,
        p_alt=p_alt,
        exp=observe_expected(p_orig, p_alt, delta),
        value_from=a.value_from,
        value_to=a.value_to,
        shift=a.shift,
    )


def evaluate_explanation(
    explanation: Explanation,
    x: Instance,
    model: Model,
    stats: FeatureStats,
    config: EvalConfig,
) -> EvaluationReport:
    """Evaluate one explanation: alter every feature both ways, query the
    model once for the instance and once per alteration (a single batch),
    and score the verdicts.

    Deterministic given ``config.seed``; the noise keys do not involve the
    explainer, so every explanation of an instance sees identical
    alterations.
    """
    validate_explanation(explanation, x.map)
    if stats.raw_dim != x.map.raw_dim:
        raise ValidationError(
            f"feature statistics cover {stats.raw_dim} raw features, instance has {x.map.raw_dim}"
        )

    per_feature: list[list[Alteration]] = [
        alterations_for_feature(x, j, stats, config) for j in range(x.map.n_features)
    ]
    flat = [a for alts in per_feature for a in alts]
    batch = [x.values] + [a.altered_instance.values for a in flat]
    try:
        preds = np.asarray(model.predict_batch(batch), dtype=float)
    except ModelError:
        raise
    except Exception as err:
        raise ModelError(f"model query failed for instance {x.id!r}: {err}") from err
    if preds.shape != (len(batch),):
        raise ModelError(
            f"prediction count mismatch: sent {len(batch)} rows, got shape {preds.shape}"
        )
    for row, p in enumerate(preds):
        if not math.isfinite(p):
            what = "the original instance" if row == 0 else (
                f"feature {flat[row - 1].feature_id} ({flat[row - 1].direction.label})"
            )
            raise ModelError(
                f"model returned non-finite output for {what} of instance {x.id!r}"
            )

    p_orig = float(preds[0])
    verdicts = []
    cursor = 1
    for j, alts in enumerate(per_feature):
        records = []
        for a in alts:
            records.append(_record_from_alteration(a, p_orig, float(preds[cursor]), config.delta))
            cursor += 1
        verdicts.append(
            evaluate_feature(
                float(explanation.scores[j]), records, feature_id=j, name=x.map.names[j]
            )
        )

    untruthful = sum(1 for v in verdicts if not v.truthful)
    n = len(verdicts)
    return EvaluationReport(
        instance_id=x.id,
        explainer_name=explanation.explainer_name,
        verdicts=tuple(verdicts),
        truthfulness=(n - untruthful) / n,
        untruthful_count=untruthful,
        config=config,
        kind=x.kind,
    )


def average_changes(report: EvaluationReport) -> np.ndarray:
    """Per-feature average output change ac_j, in feature order."""
    return np.array([v.avg_change for v in report.verdicts])
