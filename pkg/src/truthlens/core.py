"""Shared domain types: instances, feature maps, explanations, feature
statistics, evaluation configuration and the model-prediction contract.

Everything here is immutable after construction so evaluations can share
objects freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np


class TruthlensError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TruthlensError, ValueError):
    """Invalid input data, file content or argument combination."""


class ModelError(TruthlensError, RuntimeError):
    """A model query failed or returned unusable output."""


class DataKind(str, Enum):
    """How raw input coordinates relate to explanation features."""

    TABULAR = "tabular"
    TEXT = "text"
    IMAGE = "image"
    TIMESERIES_TIMESTEP = "timeseries-timestep"
    TIMESERIES_SENSOR = "timeseries-sensor"

    @property
    def singleton_groups(self) -> bool:
        """Kinds whose explanation features are single raw coordinates."""
        return self in (DataKind.TABULAR, DataKind.TEXT, DataKind.TIMESERIES_TIMESTEP)

    @property
    def additive_alteration(self) -> bool:
        """Kinds altered by adding a delta to every member of a group
        (as opposed to replacing the single raw value)."""
        return self in (DataKind.IMAGE, DataKind.TIMESERIES_TIMESTEP, DataKind.TIMESERIES_SENSOR)


@dataclass(frozen=True)
class FeatureMap:
    """Grouping of raw input coordinates into explanation features.

    ``groups[j]`` lists the raw indices belonging to feature ``j``
    (a superpixel, a sensor window, or a single column/token). Groups
    must be disjoint and stay inside ``[0, raw_dim)``.
    """

    raw_dim: int
    groups: tuple[tuple[int, ...], ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.raw_dim <= 0:
            raise ValidationError("raw_dim must be positive")
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        seen: set[int] = set()
        for j, g in enumerate(groups):
            if not g:
                raise ValidationError(f"feature group {j} is empty")
            for i in g:
                if not 0 <= i < self.raw_dim:
                    raise ValidationError(
                        f"raw index {i} of feature group {j} outside [0, {self.raw_dim})"
                    )
                if i in seen:
                    raise ValidationError(f"raw index {i} appears in two feature groups")
                seen.add(i)
        if self.names:
            if len(self.names) != len(groups):
                raise ValidationError("names must match the number of feature groups")
            object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        else:
            object.__setattr__(self, "names", tuple(f"f{j}" for j in range(len(groups))))

    @staticmethod
    def identity(raw_dim: int, names: Sequence[str] = ()) -> "FeatureMap":
        """One singleton group per raw coordinate."""
        return FeatureMap(raw_dim, tuple((i,) for i in range(raw_dim)), tuple(names))

    @property
    def n_features(self) -> int:
        return len(self.groups)

    def check_kind(self, kind: DataKind) -> None:
        """Enforce per-kind group shape (tabular/text/per-timestep are singletons)."""
        if kind.singleton_groups:
            for j, g in enumerate(self.groups):
                if len(g) != 1:
                    raise ValidationError(
                        f"{kind.value} data requires singleton feature groups, "
                        f"group {j} has {len(g)} raw indices"
                    )


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Instance:
    """One input to the model: a dense raw-value vector plus its feature map."""

    id: str
    values: np.ndarray
    kind: DataKind
    map: FeatureMap

    def __post_init__(self):
        values = _freeze(self.values)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.shape[0] != self.map.raw_dim:
            raise ValidationError(
                f"instance {self.id!r}: expected {self.map.raw_dim} raw values, "
                f"got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError(f"instance {self.id!r} contains non-finite values")
        self.map.check_kind(self.kind)

    def replace_values(self, values: np.ndarray) -> "Instance":
        return Instance(self.id, values, self.kind, self.map)


@dataclass(frozen=True)
class Explanation:
    """Per-feature importance scores produced by one explainer for one instance.

    Scores are read as locally monotone direction indicators: only their
    sign enters the truthfulness verdict, the magnitude matters for
    meta-explanation ordering.
    """

    explainer_name: str
    instance_id: str
    scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scores", _freeze(self.scores))

    @property
    def n_features(self) -> int:
        return int(self.scores.shape[0])


def validate_explanation(explanation: Explanation, fmap: FeatureMap) -> None:
    """Raise unless scores line up with the feature map and are finite."""
    if explanation.scores.ndim != 1 or explanation.n_features != fmap.n_features:
        raise ValidationError(
            f"feature-count mismatch: explanation {explanation.explainer_name!r} has "
            f"{explanation.scores.shape} scores, feature map has {fmap.n_features} groups"
        )
    if not np.all(np.isfinite(explanation.scores)):
        raise ValidationError(
            f"non-finite score in explanation {explanation.explainer_name!r}"
        )


@dataclass(frozen=True)
class FeatureStats:
    """Per-raw-feature distribution statistics measured on a reference
    sample set. ``std`` is the population standard deviation, which stays
    well-defined at two samples."""

    min: np.ndarray
    max: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    sample_count: int
    source: str = ""

    def __post_init__(self):
        for name in ("min", "max", "mean", "std"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        n = self.min.shape[0]
        if any(getattr(self, f).shape != (n,) for f in ("max", "mean", "std")):
            raise ValidationError("feature statistics arrays must share one length")
        if self.sample_count < 2:
            raise ValidationError("insufficient reference data: need at least 2 samples")
        if np.any(self.std < 0):
            raise ValidationError("negative standard deviation")
        if np.any(self.min > self.mean) or np.any(self.mean > self.max):
            raise ValidationError("feature statistics must satisfy min <= mean <= max")

    @property
    def raw_dim(self) -> int:
        return int(self.min.shape[0])

    def group_view(self, raw_indices: Sequence[int]) -> "GroupStats":
        """Aggregate statistics of one feature group.

        The noise scale of a multi-coordinate group (superpixel, sensor
        window) is the mean of its members' stds; min/max stay per-member
        for clamping.
        """
        idx = list(raw_indices)
        return GroupStats(
            min=self.min[idx],
            max=self.max[idx],
            std=float(np.mean(self.std[idx])),
        )


@dataclass(frozen=True)
class GroupStats:
    """Statistics of one explanation feature (possibly spanning several
    raw coordinates)."""

    min: np.ndarray
    max: np.ndarray
    std: float

    @property
    def scalar_min(self) -> float:
        return float(self.min[0])

    @property
    def scalar_max(self) -> float:
        return float(self.max[0])


def feature_stats_from_samples(samples: Iterable[Sequence[float]], source: str = "") -> FeatureStats:
    """Measure per-feature min/max/mean/population-std over reference samples.

    Column means and variances are accumulated with exact summation
    (``math.fsum``) so the result is independent of sample order.
    """
    rows = [np.asarray(r, dtype=float) for r in samples]
    if len(rows) < 2:
        raise ValidationError("insufficient reference data: need at least 2 samples")
    width = rows[0].shape
    if len(width) != 1:
        raise ValidationError("reference samples must be one-dimensional rows")
    for k, r in enumerate(rows):
        if r.shape != width:
            raise ValidationError(f"ragged reference data: row {k} has shape {r.shape}, expected {width}")
        if not np.all(np.isfinite(r)):
            raise ValidationError(f"non-finite value in reference row {k}")
    n = len(rows)
    dim = width[0]
    mean = np.array([math.fsum(r[j] for r in rows) / n for j in range(dim)])
    var = np.array([math.fsum((r[j] - mean[j]) ** 2 for r in rows) / n for j in range(dim)])
    return FeatureStats(
        min=np.min(rows, axis=0),
        max=np.max(rows, axis=0),
        mean=mean,
        std=np.sqrt(var),
        sample_count=n,
        source=source,
    )


class NoiseLevel(str, Enum):
    """Scale of the folded-Gaussian perturbation magnitude."""

    WEAK = "weak"
    NORMAL = "normal"
    STRONG = "strong"

    @property
    def multiplier(self) -> float:
        return {"weak": 0.5, "normal": 1.0, "strong": 2.0}[self.value]


@dataclass(frozen=True)
class EvalConfig:
    """Knobs of one evaluation run. ``delta`` is the tolerance below which
    a prediction change counts as stable; ``seed`` keys every noise draw."""

    noise_level: NoiseLevel = NoiseLevel.NORMAL
    delta: float = 0.0001
    seed: int = 42
    clamp_images: bool = True
    clamp_timeseries: bool = False

    def __post_init__(self):
        object.__setattr__(self, "noise_level", NoiseLevel(self.noise_level))
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValidationError("delta must be a finite value >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit an unsigned 64-bit integer")

    def clamps(self, kind: DataKind) -> bool:
        if kind is DataKind.IMAGE:
            return self.clamp_images
        if kind in (DataKind.TIMESERIES_TIMESTEP, DataKind.TIMESERIES_SENSOR):
            return self.clamp_timeseries
        return True  # tabular/text alterations always respect [min, max]

    def as_dict(self) -> dict:
        return {
            "noise_level": self.noise_level.value,
            "delta": self.delta,
            "seed": int(self.seed),
            "clamp_images": self.clamp_images,
            "clamp_timeseries": self.clamp_timeseries,
        }


class Model:
    """Prediction contract: a batch of raw-value rows in, one continuous
    real per row out. Implementations must be deterministic within a
    process run (identical batch, identical bits).
    """

    name = "model"

    def predict_batch(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        raise NotImplementedError

    def predict_one(self, row: Sequence[float]) -> float:
        return float(self.predict_batch([row])[0])


@dataclass
class CallableModel(Model):
    """Wraps a plain ``f(rows) -> predictions`` callable as a Model."""

    fn: Callable[[Sequence[Sequence[float]]], Sequence[float]]
    name: str = "callable"

    def predict_batch(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        return np.asarray(self.fn(rows), dtype=float)
