"""Importance weights: normalization, ESS, clipping, tempering, gamma search."""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cais.distributions import TargetModel, make_gaussian_target, mvn_log_pdf
from cais.errors import AllWeightsZeroError, GammaUnreachableError
from cais.spd import SpdMatrix
from cais.weighting import (
    GAMMA_CAP,
    clip_weights,
    compute_log_weights,
    default_gamma_eps,
    ess,
    find_gamma,
    make_batch,
    normalize,
    temper_weights,
)

from conftest import random_log_weights

finite_log_weights = hnp.arrays(
    dtype=np.float64,
    shape=st.integers(min_value=5, max_value=60),
    elements=st.floats(min_value=-300.0, max_value=300.0),
)


class TestComputeLogWeights:
    def test_matched_proposal_gives_zero(self):
        rng = np.random.default_rng(0)
        cov = SpdMatrix(np.array([[2.0, 0.5], [0.5, 1.0]]))
        mu = np.array([1.0, -2.0])
        target = make_gaussian_target(mu, cov)
        proposal = SimpleNamespace(mean=mu, cov=cov)
        x = rng.standard_normal((50, 2))
        lw = compute_log_weights(x, target, proposal)
        np.testing.assert_allclose(lw, 0.0, atol=1e-12)

    def test_constant_ratio_target(self):
        mu = np.zeros(2)
        cov = SpdMatrix.identity(2)
        target = TargetModel(
            dim=2, log_density=lambda x: mvn_log_pdf(x, mu, cov) + math.log(2.0)
        )
        proposal = SimpleNamespace(mean=mu, cov=cov)
        x = np.random.default_rng(1).standard_normal((30, 2))
        lw = compute_log_weights(x, target, proposal)
        np.testing.assert_allclose(lw, math.log(2.0), atol=1e-12)

    def test_univariate_closed_form(self):
        # pi = N(0, 1), q = N(1, 4): log w(x) = closed-form quadratic in x.
        target = make_gaussian_target(np.zeros(1), SpdMatrix.identity(1))
        proposal = SimpleNamespace(
            mean=np.ones(1), cov=SpdMatrix(np.array([[4.0]]))
        )
        xs = np.linspace(-3.0, 3.0, 13).reshape(-1, 1)
        lw = compute_log_weights(xs, target, proposal)
        x = xs[:, 0]
        want = math.log(2.0) - 0.5 * x**2 + (x - 1.0) ** 2 / 8.0
        np.testing.assert_allclose(lw, want, atol=1e-12)


class TestNormalize:
    def test_equal_weights(self):
        np.testing.assert_allclose(normalize(np.zeros(4)), np.full(4, 0.25))

    def test_known_pair(self):
        got = normalize(np.array([math.log(3.0), 0.0]))
        np.testing.assert_allclose(got, [0.75, 0.25], atol=1e-15)

    def test_overflow_safe(self):
        got = normalize(np.array([1000.0, 1000.0 + math.log(2.0)]))
        np.testing.assert_allclose(got, [1.0 / 3.0, 2.0 / 3.0], atol=1e-15)

    def test_minus_inf_maps_to_zero(self):
        got = normalize(np.array([0.0, -np.inf, 0.0]))
        np.testing.assert_allclose(got, [0.5, 0.0, 0.5], atol=1e-15)
        assert got[1] == 0.0

    def test_all_zero_raises(self):
        with pytest.raises(AllWeightsZeroError):
            normalize(np.full(5, -np.inf))

    @given(finite_log_weights)
    @settings(max_examples=200, deadline=None)
    def test_shift_invariance(self, lw):
        base = normalize(lw)
        for c in (-500.0, 500.0):
            np.testing.assert_allclose(normalize(lw + c), base, atol=1e-12)

    @given(finite_log_weights)
    @settings(max_examples=200, deadline=None)
    def test_sums_to_one_and_preserves_order(self, lw):
        w = normalize(lw)
        assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)
        ranked = w[np.argsort(lw, kind="stable")]
        assert np.all(np.diff(ranked) >= -1e-15)


class TestEss:
    def test_uniform_weights(self):
        assert ess(np.full(8, 0.125)) == pytest.approx(8.0, abs=1e-12)

    def test_single_atom(self):
        assert ess(np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0, abs=1e-15)

    def test_two_atoms(self):
        assert ess(np.array([0.5, 0.5, 0.0])) == pytest.approx(2.0, abs=1e-14)

    def test_large_uniform_batch_accuracy(self):
        n = 100_000
        assert abs(ess(np.full(n, 1.0 / n)) - n) < 1e-9


class TestClipWeights:
    def test_caps_at_second_largest(self):
        lw = np.log(np.array([10.0, 4.0, 2.0, 1.0]))
        got = clip_weights(lw, 2)
        np.testing.assert_allclose(np.exp(got), [4.0, 4.0, 2.0, 1.0], atol=1e-12)

    def test_equal_weights_unchanged(self):
        lw = np.full(6, 1.3)
        np.testing.assert_array_equal(clip_weights(lw, 3), lw)

    def test_clipped_ess_known_value(self):
        # Clipped linear weights [4, 4, 2, 1]: ESS = 11^2 / 37.
        lw = np.log(np.array([10.0, 4.0, 2.0, 1.0]))
        got = ess(normalize(clip_weights(lw, 2)))
        assert got == pytest.approx(121.0 / 37.0, rel=1e-12)

    def test_threshold_bounds(self):
        lw = np.zeros(4)
        with pytest.raises(ValueError):
            clip_weights(lw, 1)
        with pytest.raises(ValueError):
            clip_weights(lw, 4)

    def test_sparse_support_clips_to_all_inf(self):
        lw = np.array([0.0, -np.inf, -np.inf, -np.inf])
        got = clip_weights(lw, 3)
        assert np.all(np.isneginf(got))

    @given(finite_log_weights, st.data())
    @settings(max_examples=200, deadline=None)
    def test_post_clip_ess_reaches_threshold(self, lw, data):
        n_t = data.draw(st.integers(min_value=2, max_value=lw.shape[0] - 1))
        got = ess(normalize(clip_weights(lw, n_t)))
        assert got >= n_t - 1e-9

    @given(finite_log_weights, st.data())
    @settings(max_examples=100, deadline=None)
    def test_clip_commutes_with_shift(self, lw, data):
        n_t = data.draw(st.integers(min_value=2, max_value=lw.shape[0] - 1))
        base = normalize(clip_weights(lw, n_t))
        shifted = normalize(clip_weights(lw + 250.0, n_t))
        np.testing.assert_allclose(shifted, base, atol=1e-12)


class TestTemperWeights:
    def test_gamma_one_is_identity(self):
        lw = np.array([3.0, -1.0, 0.5])
        np.testing.assert_array_equal(temper_weights(lw, 1.0), lw)

    def test_halving(self):
        np.testing.assert_allclose(
            temper_weights(np.array([2.0, 0.0]), 2.0), [1.0, 0.0], atol=1e-15
        )

    def test_huge_gamma_flattens(self):
        lw = np.array([30.0, 0.0, -40.0])
        w = normalize(temper_weights(lw, 1e6))
        np.testing.assert_allclose(w, 1.0 / 3.0, atol=1e-4)

    def test_rejects_gamma_below_one(self):
        with pytest.raises(ValueError):
            temper_weights(np.zeros(3), 0.5)

    def test_preserves_minus_inf(self):
        lw = np.array([0.0, -np.inf])
        got = temper_weights(lw, 7.0)
        assert np.isneginf(got[1])

    @given(finite_log_weights)
    @settings(max_examples=100, deadline=None)
    def test_ess_nondecreasing_in_gamma(self, lw):
        values = [
            ess(normalize(temper_weights(lw, g)))
            for g in (1.0, 2.0, 4.0, 8.0, 32.0, 128.0, 1024.0)
        ]
        for lo, hi in zip(values, values[1:]):
            assert hi >= lo * (1.0 - 1e-12)


class TestFindGamma:
    def test_uniform_needs_no_tempering(self):
        assert find_gamma(np.zeros(5), 3, 0.5) == 1.0

    def test_known_search(self):
        # Linear weights [e^4, 1, 1, 1]: ESS crosses 3 between gamma 2 and 4.
        lw = np.array([4.0, 0.0, 0.0, 0.0])
        g = find_gamma(lw, 3, 0.05)
        assert 2.0 < g <= 4.0
        achieved = ess(normalize(temper_weights(lw, g)))
        assert abs(achieved - 3.0) <= 0.05

    def test_supremum_approached_at_cap(self):
        # Two finite weights and n_t = 2: ESS < 2 for every finite gamma,
        # so doubling runs toward the cap; the achieved ESS still lands
        # within tolerance because tempering flattens the finite pair.
        lw = np.array([0.0, -50.0, -np.inf, -np.inf])
        g = find_gamma(lw, 2, 0.05)
        assert g > 1e9
        achieved = ess(normalize(temper_weights(lw, g)))
        assert abs(achieved - 2.0) <= 0.05

    def test_unreachable_threshold_raises(self):
        lw = np.array([0.0, -np.inf, -np.inf, -np.inf])
        with pytest.raises(GammaUnreachableError):
            find_gamma(lw, 2, 0.5)

    def test_rejects_bad_eps(self):
        with pytest.raises(ValueError):
            find_gamma(np.zeros(5), 3, 0.0)

    def test_rejects_threshold_at_batch_size(self):
        with pytest.raises(ValueError):
            find_gamma(np.zeros(5), 5, 0.5)

    def test_heavy_tailed_batches_within_tolerance(self):
        rng = np.random.default_rng(21)
        for k in range(25):
            lw = random_log_weights(rng, 200, heavy=True)
            n_t = 40
            eps = default_gamma_eps(200)
            g = find_gamma(lw, n_t, eps)
            assert g >= 1.0
            if g == 1.0:
                assert ess(normalize(lw)) >= n_t
            elif g < GAMMA_CAP:
                achieved = ess(normalize(temper_weights(lw, g)))
                assert abs(achieved - n_t) <= eps

    def test_default_eps_floor(self):
        assert default_gamma_eps(50) == 1.0
        assert default_gamma_eps(500) == 5.0


class TestMakeBatch:
    def test_healthy_batch(self):
        samples = np.zeros((3, 2))
        lw = np.array([0.0, 0.0, math.log(2.0)])
        b = make_batch(samples, lw, proposal_index=4, iteration=9)
        assert not b.degenerate
        assert b.proposal_index == 4
        assert b.iteration == 9
        np.testing.assert_allclose(b.norm_weights, [0.25, 0.25, 0.5], atol=1e-15)
        np.testing.assert_array_equal(b.log_weights, lw)

    def test_degenerate_batch_uniform(self):
        b = make_batch(np.zeros((4, 2)), np.full(4, -np.inf), 0, 1)
        assert b.degenerate
        np.testing.assert_allclose(b.norm_weights, np.full(4, 0.25))
