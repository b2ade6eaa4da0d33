import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from srsmine.stochastic import (
    RngStream,
    SliceConfig,
    log_poisson_pmf,
    sample_beta,
    sample_categorical,
    sample_dirichlet,
    sample_gamma,
    sample_multinomial,
    slice_sample_step,
)


class TestRngStream:
    def test_same_pair_bit_identical(self):
        a = RngStream(123, 5).generator.random(1000)
        b = RngStream(123, 5).generator.random(1000)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(123, 5).generator.random(100)
        b = RngStream(123, 6).generator.random(100)
        assert not np.array_equal(a, b)

    def test_child_deterministic(self):
        a = RngStream(9, 2).child(3).generator.random(10)
        b = RngStream(9, 2).child(3).generator.random(10)
        c = RngStream(9, 2).child(4).generator.random(10)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestSampleGamma:
    def test_mean(self, rng):
        draws = np.array([sample_gamma(4.0, 2.0, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 2.0) < 0.02

    def test_exponential_tail(self, rng):
        draws = np.array([sample_gamma(1.0, 1.0, rng) for _ in range(100_000)])
        assert abs((draws > 1.0).mean() - math.exp(-1)) < 0.005

    def test_small_shape_variance(self, rng):
        # unit-mean parameterization: variance 1/shape
        draws = rng.generator.gamma(0.3, 1.0 / 0.3, size=1_000_000)
        assert abs(draws.var() / (1 / 0.3) - 1.0) < 0.05

    def test_invalid(self, rng):
        with pytest.raises(ValueError):
            sample_gamma(0.0, 1.0, rng)
        with pytest.raises(ValueError):
            sample_gamma(1.0, -2.0, rng)


class TestSampleBeta:
    def test_uniform_special_case(self, rng):
        draws = np.array([sample_beta(1.0, 1.0, rng) for _ in range(100_000)])
        assert kstest(draws, "uniform").pvalue > 0.01

    def test_mean(self, rng):
        draws = np.array([sample_beta(1.0, 3.0, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 0.25) < 0.005

    def test_cdf_against_quadrature(self, rng):
        # regularized incomplete beta I_0.5(2, 5) by numeric integration
        norm = quad(lambda x: x * (1 - x) ** 4, 0, 1)[0]
        target = quad(lambda x: x * (1 - x) ** 4, 0, 0.5)[0] / norm
        assert abs(target - 0.890625) < 1e-12  # analytic cross-check
        draws = np.array([sample_beta(2.0, 5.0, rng) for _ in range(100_000)])
        assert abs((draws <= 0.5).mean() - target) < 0.01

    def test_open_interval(self, rng):
        draws = [sample_beta(0.01, 0.01, rng) for _ in range(2000)]
        assert all(0.0 < d < 1.0 for d in draws)

    def test_invalid(self, rng):
        with pytest.raises(ValueError):
            sample_beta(-1.0, 1.0, rng)


class TestSampleCategorical:
    def test_degenerate(self, rng):
        assert all(
            sample_categorical([0.0, 1.0, 0.0], rng) == 1 for _ in range(200)
        )

    def test_uniform(self, rng):
        draws = np.array([sample_categorical([1, 1, 1, 1], rng) for _ in range(100_000)])
        freq = np.bincount(draws, minlength=4) / len(draws)
        assert np.abs(freq - 0.25).max() < 0.01

    def test_weighted(self, rng):
        w = [0.7, 0.2, 0.1]
        draws = np.array([sample_categorical(w, rng) for _ in range(100_000)])
        freq = np.bincount(draws, minlength=3) / len(draws)
        assert np.abs(freq - w).max() < 0.01

    def test_all_zero(self, rng):
        with pytest.raises(ValueError):
            sample_categorical([0.0, 0.0], rng)


class TestSampleDirichlet:
    def test_single_component(self, rng):
        assert sample_dirichlet([1.0], rng) == pytest.approx([1.0])

    def test_symmetric(self, rng):
        draws = np.array([sample_dirichlet([5.0, 5.0], rng) for _ in range(100_000)])
        assert np.abs(draws.mean(axis=0) - 0.5).max() < 0.01

    def test_means(self, rng):
        draws = np.array([sample_dirichlet([2.0, 3.0, 5.0], rng) for _ in range(100_000)])
        assert np.abs(draws.mean(axis=0) - [0.2, 0.3, 0.5]).max() < 0.01

    def test_sums_to_one(self, rng):
        for _ in range(100):
            assert abs(sample_dirichlet([0.5, 2.0, 7.0], rng).sum() - 1.0) < 1e-12

    def test_invalid(self, rng):
        with pytest.raises(ValueError):
            sample_dirichlet([1.0, 0.0], rng)


class TestSampleMultinomial:
    def test_zero_total(self, rng):
        assert sample_multinomial(0, [0.3, 0.7], rng).sum() == 0

    def test_half_half(self, rng):
        counts = sample_multinomial(1_000_000, [0.5, 0.5], rng)
        assert counts.sum() == 1_000_000
        assert abs(counts[0] - 500_000) < 3000

    def test_degenerate(self, rng):
        assert list(sample_multinomial(100, [1.0, 0.0, 0.0], rng)) == [100, 0, 0]

    def test_invalid_probs(self, rng):
        with pytest.raises(ValueError):
            sample_multinomial(10, [0.5, 0.6], rng)


class TestSliceSampler:
    def test_standard_normal(self, rng):
        cfg = SliceConfig(initial_width=1.0, lower_bound=-np.inf)
        x = 0.0
        out = np.empty(100_000)
        for i in range(len(out)):
            x = slice_sample_step(lambda v: -0.5 * v * v, x, cfg, rng)
            out[i] = x
        assert abs(out.mean()) < 0.02
        assert abs(out.var() - 1.0) < 0.05
        assert kstest(out[::10], "norm").pvalue > 0.01

    def test_gamma_3_1(self, rng):
        cfg = SliceConfig(initial_width=1.0, lower_bound=0.0)

        def logf(v):
            return 2.0 * math.log(v) - v

        x = 3.0
        out = np.empty(100_000)
        for i in range(len(out)):
            x = slice_sample_step(logf, x, cfg, rng)
            out[i] = x
        assert abs(out.mean() - 3.0) < 0.05
        assert kstest(out[::10], "gamma", args=(3,)).pvalue > 0.01

    def test_flat_unit_interval(self, rng):
        cfg = SliceConfig(initial_width=0.4, lower_bound=0.0)

        def logf(v):
            return 0.0 if v < 1.0 else -np.inf

        x = 0.5
        out = np.empty(100_000)
        for i in range(len(out)):
            x = slice_sample_step(logf, x, cfg, rng)
            out[i] = x
        assert kstest(out, "uniform").pvalue > 0.01

    def test_respects_lower_bound(self, rng):
        cfg = SliceConfig(initial_width=5.0, lower_bound=2.0)
        x = 2.5
        for _ in range(2000):
            x = slice_sample_step(lambda v: -v, x, cfg, rng)
            assert x > 2.0

    def test_nonfinite_current_rejected(self, rng):
        cfg = SliceConfig()
        with pytest.raises(ValueError):
            slice_sample_step(lambda v: -np.inf, 1.0, cfg, rng)


class TestLogPoissonPmf:
    def test_zero_count(self):
        assert log_poisson_pmf(0, 2.0) == pytest.approx(-2.0)

    def test_direct_value(self):
        assert log_poisson_pmf(3, 3.0) == pytest.approx(math.log(27 / 6) - 3.0)

    def test_zero_zero_convention(self):
        assert log_poisson_pmf(0, 0.0) == 0.0

    def test_impossible_count(self):
        assert log_poisson_pmf(2, 0.0) == -np.inf

    def test_array_conventions(self):
        out = log_poisson_pmf(np.array([0, 2, 1]), np.array([0.0, 0.0, 1.0]))
        assert out[0] == 0.0
        assert out[1] == -np.inf
        assert out[2] == pytest.approx(-1.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            log_poisson_pmf(-1, 1.0)
