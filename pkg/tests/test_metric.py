import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entangled.errors import (
    DegenerateMask,
    DimensionMismatch,
    EmptyRegion,
    LengthMismatch,
)
from entangled.imaging import ImagePlane, RegionMask
from entangled.metric import (
    DEFAULT_EPSILON,
    MetricConfig,
    MetricWeights,
    combined_similarity,
    consistency,
    entangled_paired,
    entangled_single,
    region_rmse,
    region_stats,
)
from entangled.oracle import oracle_entangled

from conftest import rand_image, rand_mask

W_HALF = MetricWeights(0.5, 0.5)


class TestWeights:
    def test_sum_must_be_one(self):
        with pytest.raises(ValueError):
            MetricWeights(0.3, 0.8)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            MetricWeights(-0.1, 1.1)

    def test_epsilon_positive(self):
        with pytest.raises(ValueError):
            MetricWeights(0.5, 0.5, epsilon=0.0)

    def test_tolerant_sum(self):
        MetricWeights(1 / 3, 2 / 3)  # rounding within 1e-12 is fine


class TestRegionRmse:
    def test_maximal_difference(self):
        assert region_rmse([0.0, 0.0], [1.0, 1.0]) == 1.0

    def test_identity(self, rng):
        x = rng.random(50)
        assert region_rmse(x, x) == 0.0

    def test_hand_value(self):
        assert region_rmse([0.0, 0.5], [1.0, 0.5]) == pytest.approx(math.sqrt(0.5), abs=1e-12)

    def test_empty_region(self):
        with pytest.raises(EmptyRegion):
            region_rmse([], [])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            region_rmse([0.1], [0.1, 0.2])


class TestCombinedSimilarity:
    def test_maximum_limit(self):
        assert combined_similarity(1.0, 0.0) >= 1.0 - 2 * DEFAULT_EPSILON

    def test_minimum_limit(self):
        assert combined_similarity(0.0, 1.0) == 0.0

    def test_hand_value(self):
        expected = 2 * 0.70711 * 0.9 / (0.70711 + 0.9 + 1e-6)
        assert combined_similarity(0.70711, 0.1) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.79198, abs=1e-5)

    @given(
        s_in=st.floats(0.001, 1.0),
        s_out1=st.floats(0.0, 0.999),
        delta=st.floats(1e-4, 0.5),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_decreasing_in_outer(self, s_in, s_out1, delta):
        s_out2 = min(1.0, s_out1 + delta)
        assert combined_similarity(s_in, s_out2) < combined_similarity(s_in, s_out1)

    @given(
        s_out=st.floats(0.0, 1.0),
        s_in1=st.floats(0.0, 0.999),
        delta=st.floats(1e-4, 0.5),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_increasing_in_inner(self, s_out, s_in1, delta):
        if s_out >= 0.999999:
            return  # both sides are ~0
        s_in2 = min(1.0, s_in1 + delta)
        assert combined_similarity(s_in2, s_out) > combined_similarity(s_in1, s_out)


class TestRegionStats:
    def test_hand_values(self):
        mu, sigma = region_stats([0.2, 0.4])
        assert mu == pytest.approx(0.3, abs=1e-15)
        assert sigma == pytest.approx(0.1, abs=1e-15)

    def test_constant(self):
        mu, sigma = region_stats([0.7, 0.7, 0.7])
        assert mu == pytest.approx(0.7, abs=1e-15)
        assert sigma == pytest.approx(0.0, abs=1e-12)

    def test_extremes(self):
        mu, sigma = region_stats([0.0, 1.0])
        assert mu == 0.5 and sigma == 0.5

    def test_population_not_sample(self):
        # 1/N, not 1/(N-1): for [0, 1] population sigma is 0.5, sample would be ~0.707
        _, sigma = region_stats([0.0, 1.0])
        assert sigma == 0.5

    def test_empty(self):
        with pytest.raises(EmptyRegion):
            region_stats([])


class TestConsistency:
    def test_hand_value(self):
        c = consistency([0.2, 0.4], [0.4, 0.6])
        assert c.m == pytest.approx(0.88235, abs=1e-5)
        assert c.v == pytest.approx(0.99995, abs=1e-5)
        assert c.c == pytest.approx(0.88231, abs=1e-5)

    def test_identical_statistics(self):
        # equal mu and equal sigma drive C toward 1; the 1 - 10*eps bound
        # needs sigma bounded away from 0 under the eps-guarded formula
        c = consistency([0.0, 1.0], [0.0, 1.0])
        assert c.m >= 1 - 10 * DEFAULT_EPSILON
        assert c.v >= 1 - 10 * DEFAULT_EPSILON
        assert c.c >= 1 - 10 * DEFAULT_EPSILON
        near = consistency([0.3, 0.7], [0.3, 0.7])
        assert near.c == pytest.approx(1.0, abs=1e-4)

    def test_flat_regions_literal_zero(self):
        c = consistency([0.5, 0.5], [0.5, 0.5])
        assert c.v == 0.0 and c.c == 0.0

    def test_flat_regions_optin_one(self):
        c = consistency([0.5, 0.5], [0.5, 0.5], uniform_region_consistency=True)
        assert c.v == 1.0
        assert c.c == c.m

    def test_symmetric_under_region_swap(self, rng):
        a, b = rng.random(30), rng.random(40)
        c1 = consistency(a, b)
        c2 = consistency(b, a)
        assert (c1.mu_inner, c1.sigma_inner) == (c2.mu_outer, c2.sigma_outer)
        assert c1.m == c2.m and c1.v == c2.v and c1.c == c2.c


class TestEntangledPaired:
    def test_identical_images_score_zero(self, rng):
        img = rand_image(rng, 8, 8)
        mask = rand_mask(rng, 8, 8)
        score = entangled_paired(img, img, mask, W_HALF)
        assert score.value == pytest.approx(0.0, abs=1e-12)
        assert score.similarity.s_inner == 0.0

    def test_hand_fixture(self):
        orig = ImagePlane(np.array([[[1.0], [1.0]], [[0.5], [0.7]]]))
        unl = ImagePlane(np.array([[[0.2], [0.4]], [[0.4], [0.6]]]))
        mask = RegionMask(np.array([[True, True], [False, False]]))
        score = entangled_paired(orig, unl, mask, W_HALF)
        assert score.similarity.combined == pytest.approx(0.79198, abs=1e-5)
        assert score.consistency.c == pytest.approx(0.88231, abs=1e-5)
        assert score.value == pytest.approx(0.83470, abs=1e-5)

    def test_alpha_one_reduces_to_similarity(self, rng):
        orig, unl = rand_image(rng, 8, 8), rand_image(rng, 8, 8)
        mask = rand_mask(rng, 8, 8)
        score = entangled_paired(orig, unl, mask, MetricWeights(1.0, 0.0))
        assert score.value == pytest.approx(score.similarity.combined, abs=1e-12)

    def test_beta_one_reduces_to_consistency(self, rng):
        orig, unl = rand_image(rng, 8, 8), rand_image(rng, 8, 8)
        mask = rand_mask(rng, 8, 8)
        score = entangled_paired(orig, unl, mask, MetricWeights(0.0, 1.0))
        assert score.value == pytest.approx(score.consistency.c, abs=1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            entangled_paired(rand_image(rng, 4, 4), rand_image(rng, 4, 5),
                             rand_mask(rng, 4, 4), W_HALF)

    def test_degenerate_mask(self, rng):
        img = rand_image(rng, 4, 4)
        with pytest.raises(DegenerateMask):
            entangled_paired(img, img, RegionMask(np.ones((4, 4), bool)), W_HALF)
        with pytest.raises(DegenerateMask):
            entangled_paired(img, img, RegionMask(np.zeros((4, 4), bool)), W_HALF)

    def test_consistency_source_switch(self, rng):
        orig, unl = rand_image(rng, 8, 8), rand_image(rng, 8, 8)
        mask = rand_mask(rng, 8, 8)
        on_unl = entangled_paired(orig, unl, mask, W_HALF)
        on_orig = entangled_paired(
            orig, unl, mask, W_HALF, MetricConfig(consistency_source="original")
        )
        ref = entangled_single(orig, mask)
        assert on_orig.consistency == ref.consistency
        assert on_unl.consistency != on_orig.consistency

    def test_grayscale_mode(self, rng):
        orig, unl = rand_image(rng, 8, 8, 3), rand_image(rng, 8, 8, 3)
        mask = rand_mask(rng, 8, 8)
        gray = entangled_paired(orig, unl, mask, W_HALF, MetricConfig(grayscale=True))
        direct = entangled_paired(orig.grayscale(), unl.grayscale(), mask, W_HALF)
        assert gray.value == direct.value


class TestEntangledSingle:
    def test_equals_paired_consistency(self, rng):
        orig, unl = rand_image(rng, 8, 8), rand_image(rng, 8, 8)
        mask = rand_mask(rng, 8, 8)
        single = entangled_single(unl, mask)
        paired = entangled_paired(orig, unl, mask, MetricWeights(0.0, 1.0))
        assert single.value == paired.value
        assert single.similarity is None
        assert single.weights.alpha == 0.0

    def test_uniform_noise_scores_near_one(self):
        rng = np.random.default_rng(99)
        bits = np.zeros((145, 145), bool)
        bits[:, :72] = True  # ~10^4 samples per region
        img = ImagePlane(rng.random((145, 145, 1)))
        score = entangled_single(img, RegionMask(bits))
        assert score.value == pytest.approx(1.0, abs=0.05)

    def test_flat_regions_give_zero(self):
        data = np.where(np.arange(16).reshape(4, 4)[:, :, None] < 8, 0.9, 0.1)
        img = ImagePlane(data)
        mask = RegionMask(np.arange(16).reshape(4, 4) < 8)
        score = entangled_single(img, mask)
        assert score.consistency.m == pytest.approx(0.21951, abs=1e-5)
        assert score.consistency.v == 0.0
        assert score.value == 0.0


class TestOracleEquivalence:
    @given(seed=st.integers(0, 10**9))
    @settings(max_examples=40, deadline=None)
    def test_matches_engine(self, seed):
        rng = np.random.default_rng(seed)
        c = int(rng.choice([1, 3]))
        orig, unl = rand_image(rng, 8, 8, c), rand_image(rng, 8, 8, c)
        mask = rand_mask(rng, 8, 8)
        alpha = float(rng.uniform(0, 1))
        weights = MetricWeights(alpha, 1.0 - alpha)
        fast = entangled_paired(orig, unl, mask, weights)
        slow = oracle_entangled(orig, unl, mask, weights)
        assert abs(fast.value - slow.value) <= 1e-9
        assert abs(fast.similarity.combined - slow.similarity.combined) <= 1e-9
        assert abs(fast.consistency.c - slow.consistency.c) <= 1e-9

    def test_matches_on_config_variants(self, rng):
        orig, unl = rand_image(rng, 8, 8, 3), rand_image(rng, 8, 8, 3)
        mask = rand_mask(rng, 8, 8)
        for config in (
            MetricConfig(consistency_source="original"),
            MetricConfig(grayscale=True),
            MetricConfig(uniform_region_consistency=True),
        ):
            fast = entangled_paired(orig, unl, mask, W_HALF, config)
            slow = oracle_entangled(orig, unl, mask, W_HALF, config)
            assert abs(fast.value - slow.value) <= 1e-9


class TestBounds:
    @given(seed=st.integers(0, 10**9))
    @settings(max_examples=150, deadline=None)
    def test_all_components_bounded(self, seed):
        rng = np.random.default_rng(seed)
        orig, unl = rand_image(rng, 6, 6), rand_image(rng, 6, 6)
        mask = rand_mask(rng, 6, 6)
        alpha = float(rng.uniform(0, 1))
        score = entangled_paired(orig, unl, mask, MetricWeights(alpha, 1.0 - alpha))
        parts = [
            score.similarity.s_inner,
            score.similarity.s_outer,
            score.similarity.combined,
            score.consistency.m,
            score.consistency.v,
            score.consistency.c,
            score.value,
        ]
        for p in parts:
            assert 0.0 <= p <= 1.0 + 1e-9
            assert math.isfinite(p)
