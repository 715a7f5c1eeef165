"""Moment, distribution and reproducibility checks for the generators."""

import numpy as np
import pytest
from scipy import stats

from nexus.distributions import (RngHandle, sample_gamma,
                                 sample_inverse_gaussian,
                                 sample_mvn_from_precision)
from nexus.errors import NumericalError, ParameterError


class TestRngHandle:
    def test_same_seed_same_sequence(self):
        a = RngHandle(42)
        b = RngHandle(42)
        assert np.array_equal(a.generator.random(100), b.generator.random(100))

    def test_interleaved_samplers_reproduce(self):
        def draw(handle):
            out = [sample_gamma(handle, 2.0, 1.0),
                   sample_inverse_gaussian(handle, 1.5, 2.0),
                   sample_gamma(handle, 0.5, 3.0, size=4),
                   sample_mvn_from_precision(handle, np.zeros(3), np.eye(3))]
            return np.concatenate([np.atleast_1d(x) for x in out])

        assert np.array_equal(draw(RngHandle(7)), draw(RngHandle(7)))

    def test_derived_streams_differ_and_reproduce(self):
        root = RngHandle(5)
        c1 = root.derive(0, 3)
        c2 = root.derive(1, 3)
        again = RngHandle(5).derive(0, 3)
        x1 = c1.generator.random(50)
        assert not np.array_equal(x1, c2.generator.random(50))
        assert np.array_equal(x1, again.generator.random(50))


class TestGamma:
    def test_exponential_mean(self):
        x = sample_gamma(RngHandle(0), 1.0, 1.0, size=100_000)
        assert abs(x.mean() - 1.0) < 0.02

    def test_moments_shape3_rate2(self):
        x = sample_gamma(RngHandle(1), 3.0, 2.0, size=100_000)
        assert abs(x.mean() - 1.5) < 0.03
        assert abs(x.var(ddof=1) - 0.75) < 0.05

    def test_small_shape_moments(self):
        x = sample_gamma(RngHandle(2), 0.4, 1.5, size=200_000)
        assert abs(x.mean() - 0.4 / 1.5) < 0.01

    @pytest.mark.parametrize("shape,rate", [(0.0, 1.0), (-1.0, 1.0),
                                            (1.0, 0.0), (2.0, -3.0)])
    def test_domain_errors(self, shape, rate):
        with pytest.raises(ParameterError):
            sample_gamma(RngHandle(0), shape, rate)

    @pytest.mark.parametrize("shape,rate", [(1.0, 1.0), (3.5, 2.0), (0.7, 4.0),
                                            (40.0, 0.5)])
    def test_kolmogorov_smirnov(self, shape, rate):
        x = sample_gamma(RngHandle(11), shape, rate, size=10_000)
        p = stats.kstest(x, "gamma", args=(shape, 0.0, 1.0 / rate)).pvalue
        assert p > 1e-3


class TestInverseGaussian:
    def test_concentrates_at_mean_for_large_shape(self):
        x = sample_inverse_gaussian(RngHandle(3), 1.0, 1e6, size=10_000)
        assert abs(x.mean() - 1.0) < 0.01

    def test_moments(self):
        x = sample_inverse_gaussian(RngHandle(4), 2.0, 1.0, size=100_000)
        assert abs(x.mean() - 2.0) < 0.05
        assert abs(x.var(ddof=1) - 8.0) < 0.5

    def test_support_positive(self):
        x = sample_inverse_gaussian(RngHandle(5), 0.01, 0.5, size=50_000)
        assert np.all(x > 0)

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            sample_inverse_gaussian(RngHandle(0), 0.0, 1.0)
        with pytest.raises(ParameterError):
            sample_inverse_gaussian(RngHandle(0), 1.0, -2.0)

    @pytest.mark.parametrize("mu,lam", [(1.0, 1.0), (2.0, 0.5), (0.3, 5.0)])
    def test_kolmogorov_smirnov(self, mu, lam):
        x = sample_inverse_gaussian(RngHandle(12), mu, lam, size=10_000)
        p = stats.kstest(x, "invgauss", args=(mu / lam, 0.0, lam)).pvalue
        assert p > 1e-3

    def test_extreme_parameters_stay_finite(self):
        x = sample_inverse_gaussian(RngHandle(6), 1e12, 25.0, size=10_000)
        assert np.all(np.isfinite(x)) and np.all(x > 0)


class TestMvnFromPrecision:
    def test_identity_case(self):
        rng = RngHandle(7)
        draws = np.array([sample_mvn_from_precision(rng, np.zeros(3), np.eye(3))
                          for _ in range(100_000)])
        assert np.abs(draws.mean(axis=0)).max() < 0.02
        cov = np.cov(draws.T)
        assert np.abs(cov - np.eye(3)).max() < 0.03

    def test_diagonal_precision_variances(self):
        rng = RngHandle(8)
        prec = np.diag([2.0, 4.0])
        draws = np.array([sample_mvn_from_precision(rng, np.zeros(2), prec)
                          for _ in range(50_000)])
        v = draws.var(axis=0, ddof=1)
        assert abs(v[0] - 0.5) < 0.025
        assert abs(v[1] - 0.25) < 0.0125

    def test_nonzero_mean(self):
        rng = RngHandle(9)
        mean = np.array([3.0, -1.0])
        draws = np.array([sample_mvn_from_precision(rng, mean, np.eye(2) * 5)
                          for _ in range(20_000)])
        assert np.abs(draws.mean(axis=0) - mean).max() < 0.02

    def test_indefinite_matrix_raises_with_minor(self):
        with pytest.raises(NumericalError) as err:
            sample_mvn_from_precision(RngHandle(0), np.zeros(2),
                                      np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert err.value.minor is not None
