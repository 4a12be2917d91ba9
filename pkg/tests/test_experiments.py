"""Tests for named experiments and the bench suite"""

import pytest

from src.core.exceptions import ConfigurationError
from src.models import TrialReport
from src.services.experiments import (
    ExperimentResult, bench_rows, experiment_registry, run_bench
)


def _result(name, checks, seconds=1.23456, rss=100.04):
    report = TrialReport(n_trials=1, base_seed=0, metrics={"x": [1.0]})
    return ExperimentResult(
        name=name, reports=[report], summary={}, checks=checks, processing_time=seconds, rss_mb=rss
    )


class TestExperimentRegistry:
    """Test experiment registration and construction"""

    def test_available_experiments(self):
        """Test every bench experiment is registered"""
        assert set(experiment_registry.available()) == {
            "mp_null", "phase_transition", "spike_estimation", "rate", "denoising", "covariance_errors"
        }

    def test_unknown_experiment(self):
        """Test unknown names raise ConfigurationError"""
        with pytest.raises(ConfigurationError, match="Unknown experiment"):
            experiment_registry.create("nope")

    def test_unknown_parameter(self):
        """Test overrides must name known parameters"""
        with pytest.raises(ConfigurationError, match="Unknown parameters"):
            experiment_registry.create("mp_null", colour="blue")

    def test_quick_and_overrides(self):
        """Test quick scale applies before explicit overrides"""
        full = experiment_registry.create("mp_null")
        quick = experiment_registry.create("mp_null", quick=True)
        custom = experiment_registry.create("mp_null", quick=True, n_trials=2)
        assert full.params["n_trials"] == 100
        assert quick.params["n_trials"] == 10
        assert custom.params["n_trials"] == 2
        assert custom.metadata.name == "mp_null"


class TestExperiments:
    """Test small-scale experiment runs"""

    def test_mp_null_small(self):
        """Test homogenized null noise follows the MP law"""
        result = experiment_registry.create("mp_null", n=200, p=100, n_trials=3).run(base_seed=1)
        assert result.summary["mean_ks"] < 0.1
        assert len(result.reports[0].metrics["ks"]) == 3
        assert result.processing_time > 0
        assert result.rss_mb > 0

    def test_phase_transition_small(self):
        """Test correlation jumps across the predicted threshold"""
        result = experiment_registry.create(
            "phase_transition", n=400, p=200, n_trials=3, ell_high=3.0
        ).run(base_seed=2)
        assert result.summary["sq_corr_high"] > result.summary["sq_corr_low"] + 0.2
        assert result.checks["pt_location"]

    @pytest.mark.slow
    def test_spike_estimation_small(self):
        """Test scaling corrects the top spike eigenvalue and the eigenvector is found above the threshold"""
        result = experiment_registry.create(
            "spike_estimation", n_trials=3, grid_points=4, ell_max=3.0
        ).run(base_seed=3)
        assert len(result.reports) == 4
        assert result.checks["scaling_reduces_bias"]
        assert result.reports[-1].means["sq_corr_epca"] > 0.5
        assert result.summary["t"] == 3.0

    @pytest.mark.slow
    def test_rate_small(self):
        """Test the debiased covariance error decays like n^(-1/2)"""
        result = experiment_registry.create(
            "rate", p=30, sample_sizes=[500, 2000, 8000], n_trials=5
        ).run(base_seed=4)
        assert result.checks["slope"]
        assert result.summary["slope"] == pytest.approx(-0.5, abs=0.1)

    @pytest.mark.slow
    def test_denoising_small(self):
        """Test EBLP and projection both improve on the noisy counts"""
        result = experiment_registry.create(
            "denoising", n=1024, p=256, rank=5
        ).run(base_seed=5)
        m = result.summary
        assert m["mse_eblp"] < m["mse_projection_sample"] < m["mse_noisy"]
        assert m["mse_projection_epca"] < m["mse_noisy"]
        assert result.checks["noisy_mse"]

    def test_denoising_quick_scale_is_photon_limited(self):
        """Test the quick run keeps the full-scale intensity"""
        quick = experiment_registry.create("denoising", quick=True)
        assert quick.params["mean_intensity"] == 0.04
        assert quick.params["n"] < experiment_registry.create("denoising").params["n"]

    @pytest.mark.slow
    def test_covariance_errors_small(self):
        """Test error metrics stay finite on a rank-deficient truth"""
        result = experiment_registry.create(
            "covariance_errors", p=60, rank=3, sample_sizes=[500, 4000], n_trials=2, top_k=3
        ).run(base_seed=6)
        last = result.reports[-1].means
        for kind in ("sample", "debiased", "heterogenized", "scaled"):
            assert 0.0 <= last[f"{kind}_eig_pct"] < 1000.0
            assert 0.0 <= last[f"{kind}_subspace"] <= 4.0
        assert result.checks["scaled_vs_sample"]
        assert set(result.checks) == {"scaled_vs_sample", "subspace_vs_sample"}

    @pytest.mark.slow
    def test_quick_bench_runs(self):
        """Test the quick bench of one experiment end to end"""
        results = run_bench(["mp_null"], quick=True, base_seed=0)
        assert [r.name for r in results] == ["mp_null"]
        assert results[0].checks


class TestBenchRows:
    """Test bench summary rows"""

    def test_rows_per_check(self):
        """Test one row per check with rounded timings"""
        results = [_result("a", {"c1": True, "c2": False}), _result("b", {"c3": True})]
        assert bench_rows(results) == [
            ["a", "c1", 1, 1.235, 100.0],
            ["a", "c2", 0, 1.235, 100.0],
            ["b", "c3", 1, 1.235, 100.0],
        ]

    def test_passed(self):
        """Test a result passes only when every check does"""
        assert _result("a", {"c1": True}).passed
        assert not _result("a", {"c1": True, "c2": False}).passed
