"""Alteration machinery: keyed noise, per-kind alternative values,
clamping, and the Inc/Dec pair sharing one draw."""

import numpy as np
import pytest

from truthlens import (
    DataKind,
    Direction,
    EvalConfig,
    FeatureMap,
    Instance,
    NoiseLevel,
    alterations_for_feature,
)
from truthlens.perturb import (
    alt_values_from_noise,
    apply_alteration,
    determine_alt_values,
    draw_noise,
    rng_key,
)

from conftest import simple_stats, tabular_instance


class TestKeyedNoise:
    def test_key_is_stable_across_calls(self):
        assert rng_key(42, "i0", 3) == rng_key(42, "i0", 3)

    def test_key_separates_every_component(self):
        base = rng_key(42, "i0", 3)
        assert rng_key(43, "i0", 3) != base
        assert rng_key(42, "i1", 3) != base
        assert rng_key(42, "i0", 4) != base

    def test_draw_is_deterministic_and_nonnegative(self):
        stats = simple_stats(1).group_view([0])
        key = rng_key(1, "a", 0)
        a = draw_noise(stats, NoiseLevel.NORMAL, key)
        b = draw_noise(stats, NoiseLevel.NORMAL, key)
        assert a == b and a >= 0

    def test_levels_scale_the_same_draw(self):
        # weak/strong are exact halves/doubles of the normal magnitude
        stats = simple_stats(1).group_view([0])
        key = rng_key(5, "a", 0)
        normal = draw_noise(stats, NoiseLevel.NORMAL, key)
        assert draw_noise(stats, NoiseLevel.WEAK, key) == pytest.approx(0.5 * normal)
        assert draw_noise(stats, NoiseLevel.STRONG, key) == pytest.approx(2.0 * normal)

    def test_magnitude_is_folded_gaussian(self):
        # independent oracle: E|N(0, s^2)| = s * sqrt(2/pi); check the
        # empirical mean over many keys within 5%
        std = 3.0
        stats = simple_stats(1, std=std).group_view([0])
        draws = [
            draw_noise(stats, NoiseLevel.NORMAL, rng_key(0, f"i{k}", 0))
            for k in range(4000)
        ]
        expected = std * np.sqrt(2 / np.pi)
        assert np.mean(draws) == pytest.approx(expected, rel=0.05)
        assert min(draws) >= 0


class TestAlternativeValues:
    def test_text_removes_the_value(self):
        stats = simple_stats(1).group_view([0])
        assert alt_values_from_noise(3.5, stats, 0.7, DataKind.TEXT) == (0.0, 3.5)

    def test_additive_kinds_return_symmetric_deltas(self):
        stats = simple_stats(1).group_view([0])
        assert alt_values_from_noise(3.5, stats, 0.7, DataKind.IMAGE) == (-0.7, 0.7)

    def test_tabular_moves_both_ways_inside_range(self):
        stats = simple_stats(1, lo=0.0, hi=10.0).group_view([0])
        lo, hi = alt_values_from_noise(5.0, stats, 2.0, DataKind.TABULAR)
        assert (lo, hi) == (3.0, 7.0)

    def test_tabular_clamps_to_observed_range(self):
        stats = simple_stats(1, lo=0.0, hi=10.0).group_view([0])
        lo, hi = alt_values_from_noise(9.5, stats, 2.0, DataKind.TABULAR)
        assert (lo, hi) == (7.5, 10.0)

    def test_text_needs_no_draw(self):
        stats = simple_stats(1).group_view([0])
        a = determine_alt_values(2.0, stats, NoiseLevel.NORMAL, DataKind.TEXT, key=1)
        b = determine_alt_values(2.0, stats, NoiseLevel.STRONG, DataKind.TEXT, key=2)
        assert a == b == (0.0, 2.0)


class TestApplyAlteration:
    def test_replacement_touches_only_the_feature(self):
        x = tabular_instance([1.0, 2.0, 3.0])
        stats = simple_stats(3)
        config = EvalConfig()
        altered = apply_alteration(x, 1, Direction.INC, (1.5, 2.5), config, stats)
        assert list(altered.values) == [1.0, 2.5, 3.0]
        assert list(x.values) == [1.0, 2.0, 3.0]

    def test_additive_touches_every_group_member(self):
        fmap = FeatureMap(4, ((0, 2), (1, 3)))
        x = Instance("img", np.array([0.5, 0.5, 0.5, 0.5]), DataKind.IMAGE, fmap)
        stats = simple_stats(4, lo=0.0, hi=1.0)
        config = EvalConfig(clamp_images=False)
        altered = apply_alteration(x, 0, Direction.INC, (-0.2, 0.2), config, stats)
        assert list(altered.values) == [0.7, 0.5, 0.7, 0.5]

    def test_image_clamping_respects_per_member_range(self):
        # the worked pixel example: +0.2 on [0.8, 0.6, 0.9] within [0, 1]
        fmap = FeatureMap(3, ((0, 1, 2),))
        x = Instance("img", np.array([0.8, 0.6, 0.9]), DataKind.IMAGE, fmap)
        stats = simple_stats(3, lo=0.0, hi=1.0)
        clamped = apply_alteration(x, 0, Direction.INC, (-0.2, 0.2), EvalConfig(), stats)
        assert list(clamped.values) == pytest.approx([1.0, 0.8, 1.0])
        free = apply_alteration(
            x, 0, Direction.INC, (-0.2, 0.2), EvalConfig(clamp_images=False), stats
        )
        assert list(free.values) == pytest.approx([1.0, 0.8, 1.1])

    def test_timeseries_unclamped_by_default(self):
        fmap = FeatureMap(2, ((0, 1),))
        x = Instance("ts", np.array([9.5, 9.9]), DataKind.TIMESERIES_SENSOR, fmap)
        stats = simple_stats(2, lo=0.0, hi=10.0)
        altered = apply_alteration(x, 0, Direction.INC, (-1.0, 1.0), EvalConfig(), stats)
        assert list(altered.values) == pytest.approx([10.5, 10.9])

    def test_unknown_feature_id(self):
        x = tabular_instance([1.0])
        with pytest.raises(Exception, match="unknown feature"):
            apply_alteration(x, 3, Direction.INC, (0.0, 2.0), EvalConfig(), simple_stats(1))


class TestAlterationsForFeature:
    def test_inc_dec_share_one_draw(self):
        x = tabular_instance([5.0, 1.0])
        stats = simple_stats(2, lo=-100, hi=100)
        alts = alterations_for_feature(x, 0, stats, EvalConfig())
        assert [a.direction for a in alts] == [Direction.INC, Direction.DEC]
        inc, dec = alts
        assert inc.magnitude == dec.magnitude
        assert inc.value_to - 5.0 == pytest.approx(5.0 - dec.value_to)

    def test_text_produces_only_the_removal(self):
        fmap = FeatureMap.identity(2, ("Diffusion", "Restriction"))
        x = Instance("doc", np.array([1.0, 1.0]), DataKind.TEXT, fmap)
        alts = alterations_for_feature(x, 0, simple_stats(2, lo=0, hi=1), EvalConfig())
        assert len(alts) == 1
        assert alts[0].direction is Direction.DEC
        assert alts[0].value_from == 1.0 and alts[0].value_to == 0.0
        assert list(alts[0].altered_instance.values) == [0.0, 1.0]

    def test_deterministic_bitwise(self):
        x = tabular_instance([5.0, 1.0], iid="abc")
        stats = simple_stats(2)
        config = EvalConfig(seed=99)
        a = alterations_for_feature(x, 1, stats, config)
        b = alterations_for_feature(x, 1, stats, config)
        assert a[0].altered_instance.values.tobytes() == b[0].altered_instance.values.tobytes()
        assert a[1].altered_instance.values.tobytes() == b[1].altered_instance.values.tobytes()

    def test_different_features_draw_different_noise(self):
        x = tabular_instance([5.0, 5.0])
        stats = simple_stats(2)
        a0 = alterations_for_feature(x, 0, stats, EvalConfig())
        a1 = alterations_for_feature(x, 1, stats, EvalConfig())
        assert a0[0].magnitude != a1[0].magnitude

    def test_untouched_features_stay_bit_identical(self):
        rng = np.random.Generator(np.random.PCG64(3))
        values = rng.normal(size=8)
        x = tabular_instance(list(values))
        stats = simple_stats(8)
        for j in range(8):
            for alt in alterations_for_feature(x, j, stats, EvalConfig()):
                for i in range(8):
                    if i != j:
                        assert alt.altered_instance.values[i] == x.values[i]

    def test_shift_is_recorded_for_additive_kinds(self):
        fmap = FeatureMap(2, ((0, 1),))
        x = Instance("img", np.array([0.5, 0.5]), DataKind.IMAGE, fmap)
        alts = alterations_for_feature(x, 0, simple_stats(2, lo=0, hi=1), EvalConfig())
        inc, dec = alts
        assert inc.shift > 0 > dec.shift
        assert inc.shift == pytest.approx(-dec.shift)
        assert inc.value_from is None  # group-wide shifts have no single value
