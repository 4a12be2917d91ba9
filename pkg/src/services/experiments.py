"""
Named Monte-Carlo experiments and the bench suite.

Each experiment runs seeded trials through ``run_trials`` and checks its
outcome against a pass/fail criterion. Experiments register themselves in
``experiment_registry``; ``run_bench`` executes a selection of them.
"""

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Type

import numpy as np
import psutil
import scipy.linalg

from ..core.exceptions import ConfigurationError
from ..core.logging import get_logger
from ..models.covariance_models import EstimatorKind, MpDistribution
from ..models.simulation_models import LowRankConfig, SpikedPoissonConfig, TrialReport
from .covariance_pipeline import (
    baseline_estimators, debias, fit_epca, homogenize, sample_covariance_model, sample_moments
)
from .denoiser import build_denoiser, denoise_mse, eblp_denoise, projection_denoise
from .linalg import symmetric_eigh
from .metrics import (
    eigenvalue_percent_errors, matrix_errors, signal_subspace, sq_correlation, subspace_error
)
from .rmt import estimated_improvement, ks_statistic
from .simulation import (
    gen_low_rank_poisson, gen_null_poisson, gen_spiked_poisson, phase_transition_spike, run_trials
)

logger = get_logger(__name__)


@dataclass
class ExperimentMetadata:
    """Metadata about an experiment"""
    name: str
    description: str
    criterion: str


@dataclass
class ExperimentResult:
    """Outcome of one experiment run"""
    name: str
    reports: List[TrialReport]
    summary: Dict[str, float]
    checks: Dict[str, bool]
    processing_time: float
    rss_mb: float = 0.0
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class BaseExperiment(ABC):
    """
    Abstract base class for experiments.

    ``defaults`` holds acceptance-scale parameters and ``quick`` the
    overrides used for a fast bench run; constructor keywords override both.
    """

    defaults: Dict[str, Any] = {}
    quick: Dict[str, Any] = {}

    def __init__(self, quick: bool = False, **overrides):
        self._metadata = self._define_metadata()
        params = dict(self.defaults)
        if quick:
            params.update(self.quick)
        unknown = set(overrides) - set(params)
        if unknown:
            raise ConfigurationError(f"Unknown parameters for {self._metadata.name}: {sorted(unknown)}")
        params.update(overrides)
        self.params = params

    @abstractmethod
    def _define_metadata(self) -> ExperimentMetadata:
        """Define experiment name, description and criterion"""

    @property
    def metadata(self) -> ExperimentMetadata:
        return self._metadata

    @abstractmethod
    def _execute(self, base_seed: int, workers: Optional[int]) -> ExperimentResult:
        """Run the trials and evaluate the criterion"""

    def run(self, base_seed: int = 0, workers: Optional[int] = None) -> ExperimentResult:
        """Run the experiment and record wall time and resident memory"""
        start = time.perf_counter()
        logger.info(f"Running experiment {self.metadata.name}", extra={"params": str(self.params)})
        result = self._execute(base_seed, workers)
        result.processing_time = time.perf_counter() - start
        result.rss_mb = psutil.Process().memory_info().rss / 2 ** 20
        logger.info(
            f"Experiment {self.metadata.name} {'passed' if result.passed else 'failed'}",
            extra={"seconds": result.processing_time, "rss_mb": result.rss_mb}
        )
        return result


class ExperimentRegistry:
    """Registry of experiment classes keyed by name"""

    def __init__(self):
        self._experiments: Dict[str, Type[BaseExperiment]] = {}

    def register(self, name: str):
        def decorator(cls: Type[BaseExperiment]) -> Type[BaseExperiment]:
            self._experiments[name] = cls
            return cls
        return decorator

    def available(self) -> List[str]:
        return list(self._experiments)

    def create(self, name: str, quick: bool = False, **overrides) -> BaseExperiment:
        if name not in self._experiments:
            raise ConfigurationError(f"Unknown experiment '{name}'; expected one of {self.available()}")
        return self._experiments[name](quick=quick, **overrides)


experiment_registry = ExperimentRegistry()


def _top_corr(model, v: np.ndarray) -> float:
    # Squared correlation of the top eigenvector with v on the fitted columns; 0 when nothing was kept
    if not model.kept_count:
        return 0.0
    return sq_correlation(model.het_eigvecs[:, 0], v[model.kept_columns])


# ----------------------------------------------------------------------------
# Experiments
# ----------------------------------------------------------------------------

@experiment_registry.register("mp_null")
class MpNullExperiment(BaseExperiment):
    defaults = {"n": 1000, "p": 500, "n_trials": 100, "ks_limit": 0.05, "pass_fraction": 0.95}
    quick = {"n_trials": 10}

    def _define_metadata(self) -> ExperimentMetadata:
        return ExperimentMetadata(
            name="mp_null",
            description="Homogenized Poisson noise spectrum versus the standard MP law",
            criterion="KS distance below the limit in at least the pass fraction of trials",
        )

    def _execute(self, base_seed, workers):
        n, p, limit = self.params["n"], self.params["p"], self.params["ks_limit"]
        law = MpDistribution(gamma=p / n)

        def trial(seed: int) -> Dict[str, float]:
            batch, _ = gen_null_poisson(n, p, seed)
            s_h = homogenize(sample_moments(batch))
            eigenvalues = scipy.linalg.eigh(s_h, eigvals_only=True) + 1.0
            ks = ks_statistic(eigenvalues, law)
            return {"ks": ks, "within_limit": float(ks < limit)}

        report = run_trials(trial, self.params["n_trials"], base_seed, "mp_null", {"n": n, "p": p}, workers)
        fraction = report.means["within_limit"]
        return ExperimentResult(
            name="mp_null",
            reports=[report],
            summary={"mean_ks": report.means["ks"], "pass_fraction": fraction},
            checks={"ks_fraction": fraction >= self.params["pass_fraction"]},
            processing_time=0.0,
        )


@experiment_registry.register("phase_transition")
class PhaseTransitionExperiment(BaseExperiment):
    defaults = {"n": 1000, "p": 500, "n_trials": 100, "ell_low": 0.8, "ell_high": 2.0, "expected_pt": 1.2}
    quick = {"n_trials": 10}

    def _define_metadata(self) -> ExperimentMetadata:
        return ExperimentMetadata(
            name="phase_transition",
            description="Detection threshold of the spiked Poisson model after homogenization",
            criterion="PT formula near 1.2; mean squared correlation < 0.1 below and > 0.5 above",
        )

    def _execute(self, base_seed, workers):
        n, p = self.params["n"], self.params["p"]
        pt = phase_transition_spike(SpikedPoissonConfig(n=n, p=p, ell=0.0))
        reports = []
        for ell in (self.params["ell_low"], self.params["ell_high"]):
            def trial(seed: int, ell=ell) -> Dict[str, float]:
                batch, truth = gen_spiked_poisson(SpikedPoissonConfig(n=n, p=p, ell=ell, seed=seed))
                model = fit_epca(batch, 1)
                return {"sq_corr": _top_corr(model, truth.v)}
            reports.append(run_trials(trial, self.params["n_trials"], base_seed, "phase_transition", {"ell": ell}, workers))
        low, high = reports[0].means["sq_corr"], reports[1].means["sq_corr"]
        return ExperimentResult(
            name="phase_transition",
            reports=reports,
            summary={"pt": pt, "sq_corr_low": low, "sq_corr_high": high},
            checks={
                "pt_location": abs(pt - self.params["expected_pt"]) <= 0.05,
                "below_pt": low < 0.1,
                "above_pt": high > 0.5,
            },
            processing_time=0.0,
        )


@experiment_registry.register("spike_estimation")
class SpikeEstimationExperiment(BaseExperiment):
    defaults = {"n": 1000, "p": 500, "n_trials": 100, "grid_points": 20, "ell_max": 3.0}
    quick = {"n_trials": 5, "grid_points": 7}

    def _define_metadata(self) -> ExperimentMetadata:
        return ExperimentMetadata(
            name="spike_estimation",
            description="Spike eigenvalue, eigenvector and SNR-improvement estimates across a grid of ℓ",
            criterion="scaling reduces eigenvalue bias at the top of the grid; Î ≈ 1 below the PT, > 1 above",
        )

    def _execute(self, base_seed, workers):
        n, p = self.params["n"], self.params["p"]
        grid = np.linspace(0.0, self.params["ell_max"], self.params["grid_points"])
        pt = phase_transition_spike(SpikedPoissonConfig(n=n, p=p, ell=0.0))
        reports = []
        for ell in grid:
            def trial(seed: int, ell=float(ell)) -> Dict[str, float]:
                batch, truth = gen_spiked_poisson(SpikedPoissonConfig(n=n, p=p, ell=ell, seed=seed))
                models = baseline_estimators(batch, 1)
                scaled = models[EstimatorKind.SCALED]
                sample = models[EstimatorKind.SAMPLE]
                kept = scaled.kept_count > 0
                return {
                    "t_scaled": float(scaled.eigenvalues[0]) if kept else 0.0,
                    "t_heterogenized": float(scaled.het_eigvals[0]) if kept else 0.0,
                    "improvement": estimated_improvement(scaled, 0),
                    "sq_corr_epca": _top_corr(scaled, truth.v),
                    "sq_corr_sample": _top_corr(sample, truth.v),
                }
            reports.append(run_trials(trial, self.params["n_trials"], base_seed, "spike_estimation", {"ell": float(ell)}, workers))

        top, t = reports[-1], float(grid[-1])
        below = [r.means["improvement"] for ell, r in zip(grid, reports) if ell < pt]
        above = [(i, r.means["improvement"]) for i, (ell, r) in enumerate(zip(grid, reports)) if ell > pt]
        pt_index = int(np.searchsorted(grid, pt))
        argmax = max(above, key=lambda x: x[1])[0] if above else pt_index
        checks = {
            "scaling_reduces_bias": abs(top.means["t_scaled"] - t) < abs(top.means["t_heterogenized"] - t),
            "improvement_below_pt": all(abs(x - 1.0) <= 0.05 for x in below),
            "improvement_above_pt": all(x > 1.0 for _, x in above),
            "improvement_peak_near_pt": abs(argmax - pt_index) <= 2,
        }
        return ExperimentResult(
            name="spike_estimation",
            reports=reports,
            summary={"pt": pt, "t": t, "t_scaled": top.means["t_scaled"], "t_heterogenized": top.means["t_heterogenized"]},
            checks=checks,
            processing_time=0.0,
        )


@experiment_registry.register("rate")
class RateExperiment(BaseExperiment):
    defaults = {"p": 50, "sample_sizes": [1000, 10000, 100000], "n_trials": 50, "slope": -0.5, "slope_tol": 0.1}
    quick = {"sample_sizes": [1000, 4000, 16000], "n_trials": 10}

    def _define_metadata(self) -> ExperimentMetadata:
        return ExperimentMetadata(
            name="rate",
            description="Frobenius error of the debiased covariance versus n under Poisson noise",
            criterion="log-log slope within tolerance of −1/2",
        )

    def _execute(self, base_seed, workers):
        p = self.params["p"]
        reports = []
        for n in self.params["sample_sizes"]:
            def trial(seed: int, n=n) -> Dict[str, float]:
                batch, truth = gen_null_poisson(n, p, seed)
                error = matrix_errors(debias(sample_moments(batch)), truth.covariance())
                return {"frobenius": error["frobenius"]}
            reports.append(run_trials(trial, self.params["n_trials"], base_seed, "rate", {"n": float(n)}, workers))
        slope = float(np.polyfit(
            np.log(self.params["sample_sizes"]), np.log([r.means["frobenius"] for r in reports]), 1
        )[0])
        return ExperimentResult(
            name="rate",
            reports=reports,
            summary={"slope": slope},
            checks={"slope": abs(slope - self.params["slope"]) <= self.params["slope_tol"]},
            processing_time=0.0,
        )


@experiment_registry.register("denoising")
class DenoisingExperiment(BaseExperiment):
    defaults = {"n": 16384, "p": 4096, "rank": 10, "mean_intensity": 0.04, "epsilon": 0.1, "n_trials": 1, "noisy_mse": 0.0401}
    quick = {"n": 4096, "p": 1024}

    def _define_metadata(self) -> ExperimentMetadata:
        return ExperimentMetadata(
            name="denoising",
            description="Low-rank Poisson denoising (stand-in for photon-limited images)",
            criterion="EBLP < ePCA projection < sample projection < noisy MSE",
        )

    def _execute(self, base_seed, workers):
        prm = self.params

        def trial(seed: int) -> Dict[str, float]:
            cfg = LowRankConfig(n=prm["n"], p=prm["p"], rank=prm["rank"], mean_intensity=prm["mean_intensity"], seed=seed)
            batch, truth = gen_low_rank_poisson(cfg)
            scaled = fit_epca(batch, prm["rank"])
            sample = sample_covariance_model(batch, prm["rank"])
            eblp = build_denoiser(scaled, prm["epsilon"])
            return {
                "mse_noisy": denoise_mse(batch.values, truth.signal),
                "mse_eblp": denoise_mse(eblp_denoise(eblp, batch), truth.signal),
                "mse_eblp_sample": denoise_mse(eblp_denoise(build_denoiser(sample, prm["epsilon"]), batch), truth.signal),
                "mse_projection_epca": denoise_mse(projection_denoise(eblp, batch), truth.signal),
                "mse_projection_sample": denoise_mse(projection_denoise(build_denoiser(sample), batch), truth.signal),
            }

        report = run_trials(trial, prm["n_trials"], base_seed, "denoising", {"n": prm["n"], "p": prm["p"]}, workers)
        m = report.means
        checks = {
            "ordering": m["mse_eblp"] < m["mse_projection_epca"] < m["mse_projection_sample"] < m["mse_noisy"],
        }
        if prm["mean_intensity"] == 0.04:
            checks["noisy_mse"] = abs(m["mse_noisy"] - prm["noisy_mse"]) <= 0.25 * prm["noisy_mse"]
        return ExperimentResult(
            name="denoising",
            reports=[report],
            summary=dict(m),
            checks=checks,
            processing_time=0.0,
            notes=["Low-rank Poisson generator substitutes for simulated diffraction images"],
        )


@experiment_registry.register("covariance_errors")
class CovarianceErrorsExperiment(BaseExperiment):
    defaults = {"p": 500, "rank": 5, "sample_sizes": [1000, 2000, 4000, 8000], "n_trials": 20, "top_k": 5}
    quick = {"p": 100, "sample_sizes": [500, 2000], "n_trials": 3}

    def _define_metadata(self) -> ExperimentMetadata:
        return ExperimentMetadata(
            name="covariance_errors",
            description="Operator/Frobenius, top-eigenvalue and subspace errors of S, S_d, S_he and S_s against truth",
            criterion=(
                "at the largest n the scaled operator error and the heterogenized subspace error "
                "are no worse than the sample estimator's"
            ),
        )

    def _execute(self, base_seed, workers):
        prm = self.params
        reports = []
        for n in prm["sample_sizes"]:
            def trial(seed: int, n=n) -> Dict[str, float]:
                cfg = LowRankConfig(n=n, p=prm["p"], rank=prm["rank"], seed=seed)
                batch, truth = gen_low_rank_poisson(cfg)
                cov = truth.covariance()
                true_eigs, _ = symmetric_eigh(cov, top=prm["top_k"])
                metrics: Dict[str, float] = {}
                for kind, model in baseline_estimators(batch, prm["rank"]).items():
                    kept = model.kept_columns
                    kept_cov = cov[np.ix_(kept, kept)]
                    errors = matrix_errors(model.covariance(), kept_cov)
                    # Coefficients sum to A, so the truth has rank r − 1
                    basis = signal_subspace(kept_cov, prm["rank"])
                    metrics[f"{kind.value}_subspace"] = subspace_error(model.het_eigvecs[:, :basis.shape[1]], basis)
                    metrics[f"{kind.value}_operator"] = errors["operator"]
                    metrics[f"{kind.value}_frobenius"] = errors["frobenius"]
                    pct = eigenvalue_percent_errors(model.eigenvalues, true_eigs, prm["top_k"])
                    metrics[f"{kind.value}_eig_pct"] = float(np.mean(pct)) if pct.size else 0.0
                return metrics
            reports.append(run_trials(trial, prm["n_trials"], base_seed, "covariance_errors", {"n": float(n)}, workers))
        last = reports[-1].means
        return ExperimentResult(
            name="covariance_errors",
            reports=reports,
            summary={k: v for k, v in last.items() if k.endswith(("_operator", "_subspace"))},
            checks={
                "scaled_vs_sample": last["scaled_operator"] <= last["sample_operator"],
                "subspace_vs_sample": last["heterogenized_subspace"] <= last["sample_subspace"],
            },
            processing_time=0.0,
        )


def run_bench(
    names: Optional[List[str]] = None,
    quick: bool = True,
    base_seed: int = 0,
    workers: Optional[int] = None
) -> List[ExperimentResult]:
    """Run the named experiments (all registered ones by default)"""
    results = []
    for name in names or experiment_registry.available():
        results.append(experiment_registry.create(name, quick=quick).run(base_seed, workers))
    return results


def bench_rows(results: List[ExperimentResult]) -> List[List[Any]]:
    """Summary table rows: experiment, check, passed, seconds, rss_mb"""
    rows = []
    for result in results:
        for check, ok in result.checks.items():
            rows.append([result.name, check, int(ok), round(result.processing_time, 3), round(result.rss_mb, 1)])
    return rows
