"""Gaussian/mixture densities, sampling, Wishart draws, synthetic targets."""

import math

import numpy as np
import pytest
from scipy import stats

from cais.distributions import (
    GaussianMixtureSpec,
    make_example1_target,
    make_example2_target,
    make_gaussian_target,
    mixture_covariance,
    mixture_log_pdf,
    mixture_mean,
    mvn_log_pdf,
    mvn_sample,
    wishart_sample,
)
from cais.rng import stream, target_rng
from cais.spd import SpdMatrix, eigen_spectrum

from conftest import random_spd

LOG_2PI = math.log(2.0 * math.pi)


def example2_spec() -> GaussianMixtureSpec:
    rng = np.random.default_rng(11)
    means = [
        np.full(10, 6.0),
        np.full(10, -5.0),
        np.array([1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 4.0, 3.0, 2.0, 1.0]),
    ]
    covs = [random_spd(rng, 10) for _ in range(3)]
    return GaussianMixtureSpec(np.full(3, 1.0 / 3.0), means, covs)


class TestMvnLogPdf:
    def test_standard_normal_mode(self):
        got = mvn_log_pdf(np.zeros(1), np.zeros(1), SpdMatrix.identity(1))
        assert got == pytest.approx(-0.5 * LOG_2PI, rel=1e-14)

    def test_bivariate_mode(self):
        got = mvn_log_pdf(np.zeros(2), np.zeros(2), SpdMatrix.identity(2))
        assert got == pytest.approx(-LOG_2PI, rel=1e-14)

    def test_diagonal_case(self):
        # x - mu = [1, 0], cov = diag(4, 9): -ln(2 pi) - ln(36)/2 - 1/8.
        got = mvn_log_pdf(
            np.array([1.0, 0.0]), np.zeros(2), SpdMatrix(np.diag([4.0, 9.0]))
        )
        assert got == pytest.approx(-LOG_2PI - 0.5 * math.log(36.0) - 0.125, rel=1e-13)

    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            cov = random_spd(rng, 5)
            mu = rng.standard_normal(5)
            x = rng.standard_normal(5)
            want = stats.multivariate_normal.logpdf(x, mean=mu, cov=cov.entries)
            assert mvn_log_pdf(x, mu, cov) == pytest.approx(want, rel=1e-10)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(1)
        cov = random_spd(rng, 3)
        mu = rng.standard_normal(3)
        xs = rng.standard_normal((20, 3))
        batch = mvn_log_pdf(xs, mu, cov)
        for n in range(20):
            assert batch[n] == pytest.approx(mvn_log_pdf(xs[n], mu, cov), rel=1e-13)

    def test_integrates_to_one_1d(self):
        sigma = 1.7
        cov = SpdMatrix(np.array([[sigma**2]]))
        grid = np.linspace(-10 * sigma, 10 * sigma, 200_001)
        vals = np.exp(mvn_log_pdf(grid.reshape(-1, 1), np.zeros(1), cov))
        h = grid[1] - grid[0]
        integral = float(np.sum((vals[1:] + vals[:-1]) * h / 2.0))
        assert integral == pytest.approx(1.0, abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mvn_log_pdf(np.zeros(3), np.zeros(2), SpdMatrix.identity(2))


class TestMvnSample:
    def test_degenerate_scale_pins_to_mean(self):
        rng = np.random.default_rng(2)
        mu = np.array([4.0, -1.0])
        cov = SpdMatrix(1e-12 * np.eye(2))
        x = mvn_sample(rng, mu, cov, 5)
        assert np.max(np.abs(x - mu)) < 1e-5

    def test_sample_mean_clt_bound(self):
        rng = np.random.default_rng(3)
        x = mvn_sample(rng, np.zeros(2), SpdMatrix.identity(2), 100_000)
        assert np.max(np.abs(x.mean(axis=0))) < 0.02

    def test_empirical_covariance(self):
        rng = np.random.default_rng(4)
        cov = SpdMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
        x = mvn_sample(rng, np.zeros(2), cov, 100_000)
        emp = np.cov(x.T, bias=True)
        assert np.max(np.abs(emp - cov.entries)) < 0.05

    def test_bit_reproducible(self):
        cov = SpdMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
        a = mvn_sample(np.random.default_rng(77), np.ones(2), cov, 50)
        b = mvn_sample(np.random.default_rng(77), np.ones(2), cov, 50)
        np.testing.assert_array_equal(a, b)

    def test_rejects_nonpositive_count(self):
        with pytest.raises(ValueError):
            mvn_sample(np.random.default_rng(0), np.zeros(1), SpdMatrix.identity(1), 0)


class TestMixture:
    def test_single_component_equals_mvn(self):
        rng = np.random.default_rng(5)
        cov = random_spd(rng, 4)
        mu = rng.standard_normal(4)
        spec = GaussianMixtureSpec(np.array([1.0]), [mu], [cov])
        x = rng.standard_normal(4)
        assert mixture_log_pdf(x, spec) == pytest.approx(
            mvn_log_pdf(x, mu, cov), rel=1e-13
        )

    def test_symmetric_components_at_origin(self):
        a = np.array([2.0, -1.0])
        eye = SpdMatrix.identity(2)
        spec = GaussianMixtureSpec(np.array([0.5, 0.5]), [a, -a], [eye, eye])
        want = mvn_log_pdf(np.zeros(2), a, eye)  # common density value
        assert mixture_log_pdf(np.zeros(2), spec) == pytest.approx(want, rel=1e-13)

    def test_brute_force_sum_oracle(self):
        spec = example2_spec()
        x = spec.means[0]
        brute = sum(
            w * stats.multivariate_normal.pdf(x, mean=m, cov=c.entries)
            for w, m, c in zip(spec.weights, spec.means, spec.covs)
        )
        assert mixture_log_pdf(x, spec) == pytest.approx(math.log(brute), rel=1e-10)

    def test_log_sum_exp_lower_bound(self):
        spec = example2_spec()
        rng = np.random.default_rng(6)
        for _ in range(20):
            x = rng.uniform(-10, 10, size=10)
            total = mixture_log_pdf(x, spec)
            for w, m, c in zip(spec.weights, spec.means, spec.covs):
                assert total >= math.log(w) + mvn_log_pdf(x, m, c) - 1e-12

    def test_mixture_mean_staircase(self):
        want = np.array([2, 3, 4, 5, 6, 6, 5, 4, 3, 2], dtype=float) / 3.0
        np.testing.assert_allclose(mixture_mean(example2_spec()), want, atol=1e-12)

    def test_mixture_mean_single_component(self):
        rng = np.random.default_rng(7)
        mu = rng.standard_normal(3)
        spec = GaussianMixtureSpec(np.array([1.0]), [mu], [SpdMatrix.identity(3)])
        np.testing.assert_allclose(mixture_mean(spec), mu, atol=1e-15)

    def test_mixture_mean_symmetric_pair(self):
        a = np.array([3.0, -2.0, 1.0])
        eye = SpdMatrix.identity(3)
        spec = GaussianMixtureSpec(np.array([0.5, 0.5]), [a, -a], [eye, eye])
        np.testing.assert_allclose(mixture_mean(spec), np.zeros(3), atol=1e-15)

    def test_mixture_covariance_law_of_total_variance(self):
        # Two-point equal mixture at +/-a with identity covs:
        # total covariance = I + a a^T.
        a = np.array([1.0, 2.0])
        eye = SpdMatrix.identity(2)
        spec = GaussianMixtureSpec(np.array([0.5, 0.5]), [a, -a], [eye, eye])
        want = np.eye(2) + np.outer(a, a)
        np.testing.assert_allclose(mixture_covariance(spec).entries, want, atol=1e-13)

    def test_validates_weight_sum(self):
        with pytest.raises(ValueError):
            GaussianMixtureSpec(
                np.array([0.5, 0.6]),
                [np.zeros(2), np.ones(2)],
                [SpdMatrix.identity(2), SpdMatrix.identity(2)],
            )

    def test_validates_shared_dimension(self):
        with pytest.raises(ValueError):
            GaussianMixtureSpec(
                np.array([0.5, 0.5]),
                [np.zeros(2), np.ones(3)],
                [SpdMatrix.identity(2), SpdMatrix.identity(3)],
            )

    def test_validates_positive_weights(self):
        with pytest.raises(ValueError):
            GaussianMixtureSpec(
                np.array([1.0, 0.0]),
                [np.zeros(2), np.ones(2)],
                [SpdMatrix.identity(2), SpdMatrix.identity(2)],
            )


class TestWishart:
    def test_draw_is_spd(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            scale = random_spd(rng, 4)
            w = wishart_sample(rng, scale, 6)
            assert isinstance(w, SpdMatrix)
            assert eigen_spectrum(w)[-1] > 0

    def test_mean_matches_dof_times_scale(self):
        rng = np.random.default_rng(9)
        scale = SpdMatrix.identity(3)
        draws = np.zeros((3, 3))
        n = 10_000
        for _ in range(n):
            draws += wishart_sample(rng, scale, 50).entries
        mean = draws / n
        assert np.max(np.abs(mean - 50.0 * np.eye(3))) < 0.05 * 50.0

    def test_boundary_dof_equals_dim(self):
        rng = np.random.default_rng(10)
        w = wishart_sample(rng, SpdMatrix.identity(2), 2)
        assert eigen_spectrum(w)[-1] > 0

    def test_rejects_dof_below_dim(self):
        with pytest.raises(ValueError):
            wishart_sample(np.random.default_rng(0), SpdMatrix.identity(3), 2)

    def test_reproducible_given_stream(self):
        scale = random_spd(np.random.default_rng(12), 5)
        a = wishart_sample(stream(99, 0), scale, 7)
        b = wishart_sample(stream(99, 0), scale, 7)
        np.testing.assert_array_equal(a.entries, b.entries)


class TestSyntheticTargets:
    def test_example1_truth_mean(self):
        target = make_example1_target(target_rng(7))
        np.testing.assert_array_equal(target.truth.mean, np.full(10, 10.0))
        assert target.truth.z == 1.0
        assert target.dim == 10

    def test_example1_density_finite_at_mean(self):
        target = make_example1_target(target_rng(7))
        assert math.isfinite(target.log_density(target.truth.mean))

    def test_example1_covariance_centered_near_identity(self):
        # E[draw] = identity for the experiment's Wishart parameters:
        # averaging many targets' covariances approaches the identity.
        acc = np.zeros((10, 10))
        n = 400
        for seed in range(n):
            acc += make_example1_target(target_rng(seed)).truth.cov.entries
        assert np.max(np.abs(acc / n - np.eye(10))) < 0.1

    def test_example2_truth_mean(self):
        target = make_example2_target(target_rng(7))
        want = np.array([2, 3, 4, 5, 6, 6, 5, 4, 3, 2], dtype=float) / 3.0
        np.testing.assert_allclose(target.truth.mean, want, atol=1e-12)
        assert target.truth.mixture is not None

    def test_example2_density_finite_at_mean(self):
        target = make_example2_target(target_rng(7))
        assert math.isfinite(target.log_density(target.truth.mean))

    def test_gaussian_target_batch_and_scalar(self):
        rng = np.random.default_rng(13)
        cov = random_spd(rng, 3)
        target = make_gaussian_target(np.zeros(3), cov)
        xs = rng.standard_normal((7, 3))
        batch = target.log_density(xs)
        assert batch.shape == (7,)
        assert batch[2] == pytest.approx(target.log_density(xs[2]), rel=1e-13)
