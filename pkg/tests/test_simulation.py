"""Tests for data generators and the trial runner"""

import math

import numpy as np
import pytest

from src.core.exceptions import ConfigurationError, TrialError
from src.core.rng import get_rng
from src.models import LowRankConfig, SpikedPoissonConfig
from src.services.simulation import (
    check_spiked_config, coefficient_covariance, gen_low_rank_poisson, gen_null_poisson,
    gen_spiked_poisson, normalized_second_moment, phase_transition_spike, run_trials, spiked_vectors
)


class TestSpikedPoisson:
    """Test the rank-one spiked Poisson generator"""

    def test_vectors(self, spiked_config):
        """Test u is an increasing grid on [1, 3] and v has unit norm"""
        u, v = spiked_vectors(spiked_config)
        assert u[0] == 1.0 and u[-1] == 3.0
        assert np.all(np.diff(u) > 0)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_phase_transition_value(self):
        """Test the predicted threshold at n = 1000, p = 500"""
        cfg = SpikedPoissonConfig(n=1000, p=500, ell=1.0)
        assert phase_transition_spike(cfg) == pytest.approx(1.2, abs=0.05)

    def test_draw_shapes_and_domain(self, spiked_draw, spiked_config):
        """Test counts are nonnegative integers and truth matches the config"""
        batch, truth = spiked_draw
        values = np.asarray(batch.values)
        assert values.shape == (spiked_config.n, spiked_config.p)
        assert np.all(values >= 0)
        np.testing.assert_array_equal(values, np.round(values))
        assert truth.t == spiked_config.ell
        assert np.all(truth.signal >= 0)
        np.testing.assert_allclose(truth.covariance(), spiked_config.ell * np.outer(truth.v, truth.v))

    def test_deterministic_by_seed(self, spiked_config):
        """Test equal seeds give equal draws"""
        first, _ = gen_spiked_poisson(spiked_config)
        second, _ = gen_spiked_poisson(spiked_config)
        other, _ = gen_spiked_poisson(spiked_config.model_copy(update={"seed": 8}))
        np.testing.assert_array_equal(first.values, second.values)
        assert not np.array_equal(first.values, other.values)

    def test_infeasible_spike(self):
        """Test a spike that would push means negative is rejected"""
        cfg = SpikedPoissonConfig(n=50, p=100, ell=100.0)
        with pytest.raises(ConfigurationError, match="negative"):
            check_spiked_config(cfg)
        with pytest.raises(ConfigurationError):
            gen_spiked_poisson(cfg)

    @pytest.mark.parametrize("rate", [0.04, 1.0, 10.0])
    def test_poisson_counts_match_rate(self, rate):
        """Test count mean, variance and zero frequency at a fixed rate"""
        cfg = SpikedPoissonConfig(n=200_000, p=1, ell=0.0, u_range=(rate, rate), seed=6)
        counts = np.asarray(gen_spiked_poisson(cfg)[0].values).reshape(-1)
        n = counts.size
        assert abs(counts.mean() - rate) < 4 * math.sqrt(rate / n)
        assert abs(counts.var() - rate) < 4 * math.sqrt((rate + 2 * rate ** 2) / n)
        p_zero = math.exp(-rate)
        assert abs(np.mean(counts == 0) - p_zero) < 4 * math.sqrt(p_zero * (1 - p_zero) / n)

    def test_spike_factor_has_unit_variance(self):
        """Test the uniform factor z has mean 0 and variance 1 ± 0.005"""
        cfg = SpikedPoissonConfig(n=1_000_000, p=2, ell=1.0, u_range=(10.0, 10.0), v_range=(1.0, 1.0), seed=2)
        _, truth = gen_spiked_poisson(cfg)
        z = (truth.signal[:, 0] - truth.u[0]) / truth.v[0]
        assert abs(z.mean()) < 0.005
        assert z.var() == pytest.approx(1.0, abs=0.005)
        assert np.max(np.abs(z)) <= math.sqrt(3.0) + 1e-9

    def test_null_draw(self):
        """Test ℓ = 0 gives a constant signal u"""
        batch, truth = gen_null_poisson(30, 10, seed=3)
        assert batch.n == 30 and batch.p == 10
        np.testing.assert_array_equal(truth.signal, np.tile(truth.u, (30, 1)))


class TestLowRankPoisson:
    """Test the low-rank Poisson generator and its closed-form moments"""

    def test_second_moment_closed_forms(self):
        """Test r = 1 gives 1 and r = 2 gives 1 − ln 2"""
        assert normalized_second_moment(1) == 1.0
        assert normalized_second_moment(2) == pytest.approx(1.0 - math.log(2.0), abs=1e-9)

    def test_second_moment_monte_carlo(self):
        """Test r = 4 against sampling"""
        w = get_rng(17).random((400_000, 4))
        empirical = np.mean((w[:, 0] / w.sum(axis=1)) ** 2)
        assert normalized_second_moment(4) == pytest.approx(empirical, abs=1e-3)

    def test_coefficient_covariance_rows_sum_to_zero(self):
        """Test the fixed coefficient total makes Cov[a] singular"""
        cov = coefficient_covariance(3, 10.0)
        np.testing.assert_allclose(cov.sum(axis=1), 0.0, atol=1e-10)
        assert np.all(np.diag(cov) > 0)
        np.testing.assert_array_equal(coefficient_covariance(1, 10.0), np.zeros((1, 1)))

    def test_basis_and_row_totals(self):
        """Test unit L1 basis columns and signal rows summing to A"""
        cfg = LowRankConfig(n=50, p=30, rank=3, signal_strength=12.0, seed=2)
        batch, truth = gen_low_rank_poisson(cfg)
        assert batch.values.shape == (50, 30)
        assert np.all(truth.basis >= 0)
        np.testing.assert_allclose(truth.basis.sum(axis=0), 1.0)
        np.testing.assert_allclose(truth.signal.sum(axis=1), 12.0)
        np.testing.assert_allclose(truth.mean, truth.basis.sum(axis=1) * 4.0)

    @pytest.mark.slow
    def test_truth_covariance_matches_signal(self):
        """Test the closed-form Σ_x and mean against a large draw"""
        cfg = LowRankConfig(n=20000, p=20, rank=3, seed=5)
        _, truth = gen_low_rank_poisson(cfg)
        empirical = np.cov(truth.signal, rowvar=False, bias=True)
        expected = truth.covariance()
        assert np.linalg.norm(empirical - expected) / np.linalg.norm(expected) < 0.05
        np.testing.assert_allclose(truth.signal.mean(axis=0), truth.mean, rtol=0.02)


class TestRunTrials:
    """Test the Monte-Carlo trial runner"""

    def test_seeds_follow_base(self):
        """Test trial t sees seed base + t"""
        report = run_trials(lambda seed: {"seed": float(seed)}, 4, base_seed=10, workers=1)
        assert report.metrics["seed"] == [10.0, 11.0, 12.0, 13.0]
        assert report.base_seed == 10

    def test_parallel_matches_sequential(self):
        """Test worker count does not change results"""
        trial = lambda seed: {"draw": float(get_rng(seed).random())}  # noqa: E731
        sequential = run_trials(trial, 8, base_seed=3, workers=1)
        parallel = run_trials(trial, 8, base_seed=3, workers=4)
        assert parallel.metrics == sequential.metrics

    def test_failure_reports_trial_index(self):
        """Test a raising trial surfaces as TrialError with its index"""
        def trial(seed):
            if seed == 7:
                raise ValueError("boom")
            return {"x": 1.0}

        with pytest.raises(TrialError) as exc_info:
            run_trials(trial, 5, base_seed=5, workers=1)
        assert exc_info.value.trial_index == 2
        assert isinstance(exc_info.value.cause, ValueError)

    def test_non_finite_metric(self):
        """Test non-finite metrics fail the trial"""
        with pytest.raises(TrialError):
            run_trials(lambda seed: {"x": math.nan}, 2, workers=1)

    def test_metric_names_must_agree(self):
        """Test every trial reports the same metric names"""
        trial = lambda seed: {"a": 1.0} if seed == 0 else {"b": 1.0}  # noqa: E731
        with pytest.raises(TrialError) as exc_info:
            run_trials(trial, 2, workers=1)
        assert exc_info.value.trial_index == 1

    def test_rejects_zero_trials(self):
        """Test at least one trial is required"""
        with pytest.raises(ConfigurationError):
            run_trials(lambda seed: {"x": 1.0}, 0)

    def test_population_std(self):
        """Test aggregates use ddof = 0"""
        report = run_trials(lambda seed: {"x": float(seed)}, 2, base_seed=0, name="demo", workers=1)
        assert report.means["x"] == 0.5
        assert report.stds["x"] == 0.5
        assert report.name == "demo"
