"""Meta-explanation: collect per-feature candidate scores that passed the
truthfulness check, then assemble a new explanation from them, plus the
plain mean/median ensembling baselines.

Candidates are comparable across explainers because the alteration noise
is keyed by (seed, instance, feature) only: every explanation of an
instance was judged against identical alterations.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Explanation, ValidationError
from .truthfulness import EvaluationReport

META_EXPLAINER_NAME = "truthful-meta"
ZERO_FILL = "zero-fill"


@dataclass(frozen=True)
class Candidate:
    """One truthful score offered by one explainer for one feature."""

    explainer_index: int
    explainer_name: str
    score: float


@dataclass(frozen=True)
class CandidateMap:
    """Per feature, the truthful scores in explainer input order."""

    per_feature: tuple[tuple[Candidate, ...], ...]
    explainer_names: tuple[str, ...]

    @property
    def n_features(self) -> int:
        return len(self.per_feature)

    def scores_for(self, feature_id: int) -> list[float]:
        return [c.score for c in self.per_feature[feature_id]]


@dataclass(frozen=True)
class MetaExplanation:
    """A composed explanation whose nonzero scores are verbatim copies of
    candidate scores, with per-feature provenance."""

    explanation: Explanation
    provenance: tuple[str, ...]
    provenance_indices: tuple[int | None, ...]

    @property
    def scores(self) -> np.ndarray:
        return self.explanation.scores

    def to_dict(self) -> dict:
        return {
            "explainer": self.explanation.explainer_name,
            "instance_id": self.explanation.instance_id,
            "scores": [float(s) for s in self.explanation.scores],
            "provenance": list(self.provenance),
        }


def candidate_truthful_scores(
    reports: Sequence[EvaluationReport],
    explanations: Sequence[Explanation] | None = None,
) -> CandidateMap:
    """Collect, per feature, the scores whose verdicts were truthful.

    All reports must come from the same instance under the same config;
    otherwise their alterations differ and the scores are not candidates
    for one another. When the source explanations are passed alongside,
    each report's scores are checked against its explanation bit-for-bit.
    """
    if not reports:
        raise ValidationError("candidate collection requires at least one report")
    first = reports[0]
    for r in reports[1:]:
        if r.instance_id != first.instance_id:
            raise ValidationError(
                f"mismatched instance ids: {first.instance_id!r} vs {r.instance_id!r}"
            )
        if r.config != first.config:
            raise ValidationError(
                f"mismatched configs between reports of instance {first.instance_id!r}"
            )
        if len(r.verdicts) != len(first.verdicts):
            raise ValidationError("reports disagree on the number of features")
    if explanations is not None:
        if len(explanations) != len(reports):
            raise ValidationError("one explanation per report required")
        for r, e in zip(reports, explanations):
            if list(e.scores) != [v.score for v in r.verdicts]:
                raise ValidationError(
                    f"report for {r.explainer_name!r} does not match its explanation's scores"
                )

    per_feature = []
    for j in range(len(first.verdicts)):
        cands = tuple(
            Candidate(i, r.explainer_name, r.verdicts[j].score)
            for i, r in enumerate(reports)
            if r.verdicts[j].truthful
        )
        per_feature.append(cands)
    return CandidateMap(
        per_feature=tuple(per_feature),
        explainer_names=tuple(r.explainer_name for r in reports),
    )


def _pick(cands: Sequence[Candidate], largest: bool) -> Candidate:
    # strict comparison keeps the lowest explainer index on |score| ties
    best = cands[0]
    for c in cands[1:]:
        if (abs(c.score) > abs(best.score)) if largest else (abs(c.score) < abs(best.score)):
            best = c
    return best


def truthful_meta_explanation(
    cz: CandidateMap,
    ac: Sequence[float],
    instance_id: str = "",
) -> MetaExplanation:
    """Compose a meta-explanation from candidate truthful scores.

    Features are processed in descending average change (ties: ascending
    feature id). Each step picks the largest-|score| candidate not
    exceeding the running magnitude cap; if every candidate exceeds it,
    the smallest-|score| one is forced in. The cap starts unbounded and
    becomes min(cap, |chosen|) after each insertion, so magnitudes shrink
    along the processing order. Features without candidates score 0.
    """
    ac = np.asarray(ac, dtype=float)
    if ac.ndim != 1 or ac.shape[0] != cz.n_features:
        raise ValidationError(
            f"average-change vector has {ac.shape} entries, candidate map covers {cz.n_features} features"
        )
    if not np.all(np.isfinite(ac)):
        raise ValidationError("non-finite average change")

    order = sorted(range(cz.n_features), key=lambda j: (-ac[j], j))
    scores = np.zeros(cz.n_features)
    provenance: list[str] = [ZERO_FILL] * cz.n_features
    indices: list[int | None] = [None] * cz.n_features
    temp = np.inf
    for j in order:
        cands = cz.per_feature[j]
        if not cands:
            continue
        eligible = [c for c in cands if abs(c.score) <= temp]
        chosen = _pick(eligible, largest=True) if eligible else _pick(cands, largest=False)
        scores[j] = chosen.score
        provenance[j] = chosen.explainer_name
        indices[j] = chosen.explainer_index
        temp = min(abs(chosen.score), temp)

    return MetaExplanation(
        explanation=Explanation(META_EXPLAINER_NAME, instance_id, scores),
        provenance=tuple(provenance),
        provenance_indices=tuple(indices),
    )


def _stacked(explanations: Sequence[Explanation]) -> np.ndarray:
    if not explanations:
        raise ValidationError("aggregation requires at least one explanation")
    n = explanations[0].n_features
    for e in explanations:
        if e.n_features != n:
            raise ValidationError("explanations disagree on the number of features")
    return np.stack([e.scores for e in explanations])


def aggregate_mean(explanations: Sequence[Explanation]) -> Explanation:
    """Per-feature arithmetic mean of the scores."""
    stack = _stacked(explanations)
    scores = [statistics.fmean(stack[:, j]) for j in range(stack.shape[1])]
    return Explanation("mean", explanations[0].instance_id, np.array(scores))


def aggregate_median(explanations: Sequence[Explanation]) -> Explanation:
    """Per-feature median of the scores (even count: midpoint of the two
    middle values)."""
    stack = _stacked(explanations)
    scores = [statistics.median(stack[:, j]) for j in range(stack.shape[1])]
    return Explanation("median", explanations[0].instance_id, np.array(scores))
