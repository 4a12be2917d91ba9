"""Seeded data generators and the Monte-Carlo trial runner"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.integrate

from ..core.exceptions import ConfigurationError, DataError, TrialError
from ..core.logging import get_logger, log_performance
from ..core.rng import get_rng, trial_seed
from ..core.settings import get_settings
from ..families import PoissonFamily
from ..models.batch_models import DataBatch
from ..models.simulation_models import (
    LowRankConfig, LowRankTruth, SpikedPoissonConfig, SpikedTruth, TrialReport
)

logger = get_logger(__name__)

SQRT3 = math.sqrt(3.0)

TrialFunction = Callable[[int], Dict[str, float]]


# ----------------------------------------------------------------------------
# Spiked Poisson model
# ----------------------------------------------------------------------------

def spiked_vectors(cfg: SpikedPoissonConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Mean grid u (increasing) and unit spike direction v on their grids"""
    u = np.linspace(cfg.u_range[0], cfg.u_range[1], cfg.p)
    v = np.linspace(cfg.v_range[0], cfg.v_range[1], cfg.p)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ConfigurationError("Spike direction grid is identically zero")
    return u, v / norm


def phase_transition_spike(cfg: SpikedPoissonConfig) -> float:
    """Predicted detection threshold √γ/(vᵀ diag(u)⁻¹ v) after homogenization"""
    u, v = spiked_vectors(cfg)
    return math.sqrt(cfg.gamma) / float(np.sum(v * v / u))


def check_spiked_config(cfg: SpikedPoissonConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Grids (u, v) of a configuration whose means stay nonnegative.

    Raises:
        ConfigurationError: some mean could go negative, i.e. u_j < √3·√ℓ·|v_j|
    """
    u, v = spiked_vectors(cfg)
    reach = SQRT3 * math.sqrt(cfg.ell) * np.abs(v)
    violated = np.flatnonzero(u < reach)
    if violated.size:
        j = int(violated[0])
        raise ConfigurationError(
            f"Spike ell={cfg.ell} makes means negative at column {j}: u={u[j]:.4g} < {reach[j]:.4g}"
        )
    return u, v


@log_performance("gen_spiked_poisson")
def gen_spiked_poisson(cfg: SpikedPoissonConfig) -> Tuple[DataBatch, SpikedTruth]:
    """
    Draw Y_i ~ Poisson(u + z_i √ℓ v) with z_i uniform on [−√3, √3].

    Raises:
        ConfigurationError: infeasible spike strength (see ``check_spiked_config``)
    """
    u, v = check_spiked_config(cfg)
    amplitude = math.sqrt(cfg.ell)

    rng = get_rng(cfg.seed)
    z = rng.uniform(-SQRT3, SQRT3, size=cfg.n)
    signal = np.maximum(u + np.outer(z, amplitude * v), 0.0)
    counts = rng.poisson(signal).astype(float)
    batch = DataBatch.from_array(counts, PoissonFamily())
    return batch, SpikedTruth(signal=signal, u=u, v=v, t=float(cfg.ell))


def gen_null_poisson(n: int, p: int, seed: int = 0) -> Tuple[DataBatch, SpikedTruth]:
    """Fixed-rate Poisson noise: the spiked model at ℓ = 0"""
    return gen_spiked_poisson(SpikedPoissonConfig(n=n, p=p, ell=0.0, seed=seed))


# ----------------------------------------------------------------------------
# Low-rank Poisson model
# ----------------------------------------------------------------------------

def _g0(s: float) -> float:
    # E[exp(−s·w)] for w ~ U[0, 1]
    return 1.0 if s == 0 else -math.expm1(-s) / s


def _g2(s: float) -> float:
    # E[w² exp(−s·w)] for w ~ U[0, 1]
    if s < 1.0:
        term, total = 1.0, 0.0
        for k in range(15):
            total += term / (k + 3)
            term *= -s / (k + 1)
        return total
    return (2.0 - math.exp(-s) * (s * s + 2.0 * s + 2.0)) / s ** 3


def normalized_second_moment(rank: int) -> float:
    """
    E[(w₁/Σw)²] for w ~ U[0,1]^r.

    Uses 1/S² = ∫ s·e^{−sS} ds, which factors over the independent w_k.
    """
    if rank == 1:
        return 1.0
    integrand = lambda s: s * _g2(s) * _g0(s) ** (rank - 1)  # noqa: E731
    head, _ = scipy.integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11)
    tail, _ = scipy.integrate.quad(integrand, 1.0, math.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
    return head + tail


def coefficient_covariance(rank: int, strength: float) -> np.ndarray:
    """Cov[a] for a = A·w/Σw, w ~ U[0,1]^r; rows sum to zero since Σa = A"""
    if rank == 1:
        return np.zeros((1, 1))
    mean = strength / rank
    var = strength * strength * normalized_second_moment(rank) - mean * mean
    cov = np.full((rank, rank), -var / (rank - 1))
    np.fill_diagonal(cov, var)
    return cov


@log_performance("gen_low_rank_poisson")
def gen_low_rank_poisson(cfg: LowRankConfig) -> Tuple[DataBatch, LowRankTruth]:
    """
    Draw Y_i ~ Poisson(Σ_k a_ik v_k) with L1-normalized uniform basis vectors
    and uniform coefficients rescaled to sum to A.
    """
    rng = get_rng(cfg.seed)
    A = cfg.strength
    basis = rng.random((cfg.p, cfg.rank))
    basis /= basis.sum(axis=0)
    w = rng.random((cfg.n, cfg.rank))
    coefficients = A * w / w.sum(axis=1, keepdims=True)
    signal = coefficients @ basis.T
    counts = rng.poisson(signal).astype(float)

    truth = LowRankTruth(
        signal=signal,
        basis=basis,
        strength=A,
        mean=basis.sum(axis=1) * (A / cfg.rank),
        coefficient_cov=coefficient_covariance(cfg.rank, A),
    )
    logger.debug(
        "Generated low-rank Poisson batch",
        extra={"n": cfg.n, "p": cfg.p, "rank": cfg.rank, "strength": A}
    )
    return DataBatch.from_array(counts, PoissonFamily()), truth


# ----------------------------------------------------------------------------
# Trial runner
# ----------------------------------------------------------------------------

def _run_one(trial: TrialFunction, base_seed: int, index: int) -> Dict[str, float]:
    try:
        metrics = trial(trial_seed(base_seed, index))
    except Exception as e:
        raise TrialError(index, e) from e
    bad = [k for k, v in metrics.items() if not math.isfinite(v)]
    if bad:
        raise TrialError(index, DataError(f"non-finite metrics {bad}"))
    return {k: float(v) for k, v in metrics.items()}


@log_performance("run_trials")
def run_trials(
    trial: TrialFunction,
    n_trials: int,
    base_seed: int = 0,
    name: str = "",
    parameters: Optional[Dict[str, float]] = None,
    workers: Optional[int] = None
) -> TrialReport:
    """
    Run ``trial(seed)`` for seeds base_seed + t, t = 0..n_trials−1.

    Results are collected in trial order, so parallel runs equal sequential ones.

    Raises:
        TrialError: the first failing trial, with its index
    """
    if n_trials < 1:
        raise ConfigurationError(f"n_trials must be at least 1, got {n_trials}")
    workers = get_settings().trial_workers if workers is None else workers

    if workers <= 1:
        results: List[Dict[str, float]] = [_run_one(trial, base_seed, t) for t in range(n_trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, trial, base_seed, t) for t in range(n_trials)]
            results = [f.result() for f in futures]

    names = list(results[0])
    for t, metrics in enumerate(results):
        if list(metrics) != names:
            raise TrialError(t, DataError(f"metric names {list(metrics)} differ from {names}"))

    report = TrialReport(
        name=name,
        n_trials=n_trials,
        base_seed=base_seed,
        parameters=parameters or {},
        metrics={k: [m[k] for m in results] for k in names},
    )
    logger.info(
        f"Completed {n_trials} trials" + (f" of {name}" if name else ""),
        extra={"n_trials": n_trials, "base_seed": base_seed, "workers": workers}
    )
    return report
