"""Alteration machinery: per-feature alternative values and their
application to instances, with deterministic keyed noise.

Every noise draw is keyed by ``(seed, instance_id, feature_id)`` through a
BLAKE2b-128 digest feeding a PCG64 bit generator, so re-running an
evaluation reproduces identical alterations bit-for-bit regardless of
thread scheduling, and all explainers of one instance share the same
alterations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .core import (
    DataKind,
    EvalConfig,
    FeatureStats,
    GroupStats,
    Instance,
    NoiseLevel,
    ValidationError,
)


class Direction(IntEnum):
    """Direction of a value alteration."""

    INC = 1
    DEC = -1

    @property
    def label(self) -> str:
        return "INC" if self is Direction.INC else "DEC"


@dataclass(frozen=True)
class Alteration:
    """One altered copy of an instance, moving a single feature group.

    ``magnitude`` is the drawn noise (additive kinds and tabular) or the
    removed value (text). For additive kinds ``shift`` carries the signed
    delta applied to every member of the group; for replacement kinds
    ``value_from``/``value_to`` record the single raw value before/after.
    """

    feature_id: int
    direction: Direction
    altered_instance: Instance
    magnitude: float
    value_from: float | None = None
    value_to: float | None = None
    shift: float | None = None


def rng_key(seed: int, instance_id: str, feature_id: int) -> int:
    """Stable 128-bit key for one (run, instance, feature) noise draw."""
    digest = hashlib.blake2b(
        f"{int(seed)}:{instance_id}:{int(feature_id)}".encode(), digest_size=16
    ).digest()
    return int.from_bytes(digest, "little")


def draw_noise(stats_for_feature: GroupStats | float, level: NoiseLevel, key: int) -> float:
    """Draw the alteration magnitude: |g| with g ~ Gaussian(0, (k*std)^2).

    ``k`` is the level multiplier (weak 0.5, normal 1.0, strong 2.0), so a
    run at a stronger level scales the exact same underlying draw.
    """
    std = stats_for_feature.std if isinstance(stats_for_feature, GroupStats) else float(stats_for_feature)
    if std < 0:
        raise ValidationError("negative standard deviation")
    u = np.random.Generator(np.random.PCG64(key)).standard_normal()
    return NoiseLevel(level).multiplier * std * abs(float(u))


def alt_values_from_noise(
    value: float, stats: GroupStats, noise: float, kind: DataKind
) -> tuple[float, float]:
    """(value-, value+) for a known noise magnitude; no randomness here.

    Text removes the value (0, value). Image/time-series return the pair
    of additive deltas (-noise, +noise). Tabular moves the value both ways
    and keeps it inside the feature's observed [min, max].
    """
    if kind is DataKind.TEXT:
        return 0.0, float(value)
    if kind.additive_alteration:
        return -noise, +noise
    # Tabular: the min/max guards assume in-range values; for an instance
    # outside the reference range the alteration degrades to a no-op on
    # that side rather than jumping across the bound.
    lo = min(stats.scalar_min, value)
    hi = max(stats.scalar_max, value)
    return max(value - noise, lo), min(value + noise, hi)


def determine_alt_values(
    value: float, stats: GroupStats, level: NoiseLevel, kind: DataKind, key: int
) -> tuple[float, float]:
    """Alternative values for one feature, drawing the keyed noise."""
    if kind is DataKind.TEXT:
        return 0.0, float(value)
    noise = draw_noise(stats, level, key)
    return alt_values_from_noise(value, stats, noise, kind)


def apply_alteration(
    x: Instance,
    feature_id: int,
    direction: Direction,
    alt_values: tuple[float, float],
    config: EvalConfig,
    stats: FeatureStats,
) -> Instance:
    """Build the altered instance for one (feature, direction) pair.

    Replacement kinds (tabular, text) set the singleton raw value to
    value- or value+. Additive kinds add the delta to every raw index of
    the group; with clamping enabled for the kind, each resulting raw
    value is reset into that raw feature's [min, max]. The original
    instance is never touched.
    """
    if not 0 <= feature_id < x.map.n_features:
        raise ValidationError(f"unknown feature id {feature_id}")
    group = x.map.groups[feature_id]
    value_minus, value_plus = alt_values
    chosen = value_plus if direction is Direction.INC else value_minus
    values = np.array(x.values)
    if x.kind.additive_alteration:
        idx = list(group)
        values[idx] += chosen
        if config.clamps(x.kind):
            values[idx] = np.clip(values[idx], stats.min[idx], stats.max[idx])
    else:
        values[group[0]] = chosen
    return x.replace_values(values)


def alterations_for_feature(
    x: Instance, feature_id: int, stats: FeatureStats, config: EvalConfig
) -> list[Alteration]:
    """The alterations evaluated for one feature: INC and DEC sharing a
    single keyed noise draw, or the lone removal (DEC) for text.

    Text has no meaningful increase (the alternative pair is (0, value),
    an increase would be a no-op), so only the removal is produced.
    """
    group = x.map.groups[feature_id]
    gstats = stats.group_view(group)
    value = float(x.values[group[0]])

    if x.kind is DataKind.TEXT:
        alt_values = (0.0, value)
        altered = apply_alteration(x, feature_id, Direction.DEC, alt_values, config, stats)
        return [
            Alteration(
                feature_id=feature_id,
                direction=Direction.DEC,
                altered_instance=altered,
                magnitude=value,
                value_from=value,
                value_to=0.0,
            )
        ]

    noise = draw_noise(gstats, config.noise_level, rng_key(config.seed, x.id, feature_id))
    alt_values = alt_values_from_noise(value, gstats, noise, x.kind)
    out: list[Alteration] = []
    for direction in (Direction.INC, Direction.DEC):
        altered = apply_alteration(x, feature_id, direction, alt_values, config, stats)
        if x.kind.additive_alteration:
            shift = alt_values[1] if direction is Direction.INC else alt_values[0]
            out.append(
                Alteration(feature_id, direction, altered, noise, shift=shift)
            )
        else:
            value_to = alt_values[1] if direction is Direction.INC else alt_values[0]
            out.append(
                Alteration(
                    feature_id, direction, altered, noise,
                    value_from=value, value_to=value_to,
                )
            )
    return out
