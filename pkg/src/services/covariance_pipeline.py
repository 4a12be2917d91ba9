"""
ePCA covariance pipeline.

moments → debias → homogenize → shrink → heterogenize → scale, plus the
baseline estimators it is compared against, standardization, HWE weights
and PC scores.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import (
    ConfigurationError, DataError, DegenerateFeatureError, InternalConsistencyError
)
from ..core.logging import get_logger, log_performance
from ..core.settings import get_settings
from ..families import column_variances
from ..models.batch_models import DataBatch, MomentSummary
from ..models.covariance_models import CovarianceModel, EstimatorKind
from .linalg import factor_eigh, symmetric_eigh
from .rmt import bulk_edge, cosine_sq, spike_inverse

logger = get_logger(__name__)


class Normalization(str, Enum):
    """Column normalization applied before computing PC scores"""
    HOMOGENIZE = "homogenize"
    STANDARDIZE = "standardize"
    NONE = "none"


@dataclass
class ShrunkSpectrum:
    """Rank-k factors Σ ℓ̂_i ŵ_i ŵ_iᵀ of the shrunk homogenized covariance"""
    spikes: np.ndarray      # ℓ̂_i > 0, descending
    eigvecs: np.ndarray     # p×k orthonormal ŵ_i

    @property
    def kept_count(self) -> int:
        return len(self.spikes)


@dataclass
class PcScores:
    """PC scores of centered, normalized data"""
    scores: np.ndarray          # n×r
    eigenvalues: np.ndarray     # r, descending
    eigvecs: np.ndarray         # p'×r
    kept_columns: np.ndarray
    normalization: Normalization


# ----------------------------------------------------------------------------
# Moments and column filtering
# ----------------------------------------------------------------------------

@log_performance("sample_moments")
def sample_moments(batch: DataBatch, clamp_means: Optional[bool] = None) -> MomentSummary:
    """
    Sample mean, covariance (divisor n) and noise diagonal V(Ȳ) of a batch.

    Raises:
        FamilyDomainError: a column mean is outside its family's domain and clamping is off
    """
    clamp = get_settings().clamp_means if clamp_means is None else clamp_means
    values = batch.values
    mean = values.mean(axis=0)
    centered = values - mean
    cov = centered.T @ centered / batch.n
    cov = (cov + cov.T) / 2
    noise = column_variances(batch.families, mean, clamp=clamp)
    return MomentSummary(mean=mean, sample_cov=cov, noise_diag=noise, n_samples=batch.n)


def degenerate_columns(ms: MomentSummary, threshold: Optional[float] = None) -> List[int]:
    """Current positions of columns whose noise variance is at or below δ"""
    delta = get_settings().drop_threshold if threshold is None else threshold
    return [int(j) for j in np.flatnonzero(ms.noise_diag <= delta)]


def _restrict_or_raise(ms: MomentSummary, bad: Sequence[int], drop: bool) -> MomentSummary:
    if not len(bad):
        return ms
    original = [int(ms.kept_columns[j]) for j in bad]
    if not drop:
        raise DegenerateFeatureError(original)
    keep = np.setdiff1d(np.arange(ms.p), np.asarray(bad, dtype=int))
    if keep.size == 0:
        raise DataError("Every column is degenerate; nothing left to analyze")
    logger.info(
        f"Dropping {len(bad)} degenerate columns",
        extra={"dropped": len(bad), "p": ms.p}
    )
    return ms.restrict(keep)


def drop_degenerate_columns(
    ms: MomentSummary,
    threshold: Optional[float] = None,
    drop: Optional[bool] = None
) -> MomentSummary:
    """
    Remove columns with noise variance ≤ δ, recording their original indices.

    Raises:
        DegenerateFeatureError: degenerate columns exist and dropping is disabled
    """
    settings = get_settings()
    drop = settings.drop_degenerate if drop is None else drop
    return _restrict_or_raise(ms, degenerate_columns(ms, threshold), drop)


# ----------------------------------------------------------------------------
# Debiasing, homogenization, standardization
# ----------------------------------------------------------------------------

def debias(ms: MomentSummary) -> np.ndarray:
    """S_d = S − diag(V(Ȳ)); may be indefinite"""
    return ms.sample_cov - np.diag(ms.noise_diag)


def homogenization_weights(noise_diag: np.ndarray) -> np.ndarray:
    """Per-column weights 1/√D_j"""
    return 1.0 / np.sqrt(noise_diag)


@log_performance("homogenize")
def homogenize(ms: MomentSummary) -> np.ndarray:
    """
    S_h = D^{-1/2} S D^{-1/2} − I.

    Raises:
        DegenerateFeatureError: a column has noise variance ≤ δ
    """
    bad = degenerate_columns(ms)
    if bad:
        raise DegenerateFeatureError([int(ms.kept_columns[j]) for j in bad])
    w = homogenization_weights(ms.noise_diag)
    s_h = w[:, None] * ms.sample_cov * w[None, :]
    s_h = (s_h + s_h.T) / 2
    s_h[np.diag_indices_from(s_h)] -= 1.0
    return s_h


def standardize(ms: MomentSummary) -> np.ndarray:
    """
    Correlation matrix diag(S)^{-1/2} S diag(S)^{-1/2} with an exact unit diagonal.

    Raises:
        DegenerateFeatureError: a column has sample variance ≤ δ
    """
    d = np.diag(ms.sample_cov)
    bad = np.flatnonzero(d <= get_settings().drop_threshold)
    if bad.size:
        raise DegenerateFeatureError([int(ms.kept_columns[j]) for j in bad])
    w = 1.0 / np.sqrt(d)
    corr = w[:, None] * ms.sample_cov * w[None, :]
    corr = (corr + corr.T) / 2
    np.fill_diagonal(corr, 1.0)
    return corr


def hwe_weights(genotype_mean: np.ndarray) -> np.ndarray:
    """
    Hardy-Weinberg weights 1/√(2p̂(1−p̂)) with p̂ = Ȳ/2.

    Bit-identical to the binomial(2) homogenization weights at the same means.

    Raises:
        DegenerateFeatureError: p̂ ∈ {0, 1} for some column
    """
    mean = np.asarray(genotype_mean, dtype=float)
    p_hat = mean / 2.0
    variance = (2.0 * p_hat) * (1.0 - p_hat)
    bad = np.flatnonzero(variance <= 0)
    if bad.size:
        raise DegenerateFeatureError([int(j) for j in bad])
    return 1.0 / np.sqrt(variance)


# ----------------------------------------------------------------------------
# Shrinkage, heterogenization, scaling
# ----------------------------------------------------------------------------

def shrink_spikes(eigenvalues: np.ndarray, gamma: float, rank: int) -> Tuple[int, np.ndarray]:
    """
    Shrink the top ``rank`` eigenvalues of S_h to spike estimates ℓ̂.

    Eigenvalues whose shifted value λ+1 is not strictly above the bulk edge
    map to 0.

    Returns:
        (number of nonzero ℓ̂, ℓ̂ vector of length rank)
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if rank > eigenvalues.size:
        raise ConfigurationError(f"rank {rank} exceeds the {eigenvalues.size} available eigenvalues")
    edge = bulk_edge(gamma)
    spikes = np.zeros(rank)
    for i, lam in enumerate(eigenvalues[:rank]):
        shifted = lam + 1.0
        if shifted > edge:
            spikes[i] = spike_inverse(shifted, gamma)
    return int(np.count_nonzero(spikes)), spikes


def heterogenize(ms: MomentSummary, shrunk: ShrunkSpectrum) -> np.ndarray:
    """Dense S_he = D^{1/2} (Σ ℓ̂_i ŵ_i ŵ_iᵀ) D^{1/2}"""
    if shrunk.kept_count == 0:
        return np.zeros((ms.p, ms.p))
    scaled = np.sqrt(ms.noise_diag)[:, None] * shrunk.eigvecs
    return (scaled * shrunk.spikes) @ scaled.T


def heterogenized_eigenpairs(noise_diag: np.ndarray, shrunk: ShrunkSpectrum) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenpairs (λ̂_i, û_i) of S_he, descending, from its rank-k factor.

    When D is constant the eigenvectors are ŵ_i unchanged and λ̂_i = c·ℓ̂_i.
    """
    p = noise_diag.shape[0]
    if shrunk.kept_count == 0:
        return np.empty(0), np.empty((p, 0))
    if np.all(noise_diag == noise_diag[0]):
        return noise_diag[0] * shrunk.spikes, shrunk.eigvecs.copy()
    factor = np.sqrt(noise_diag)[:, None] * shrunk.eigvecs * np.sqrt(shrunk.spikes)
    return factor_eigh(factor)


def scaling_coefficients(spikes: np.ndarray, taus: np.ndarray, gamma: float) -> np.ndarray:
    """α̂_i = (1 − ŝ²τ)/ĉ², 1 where ĉ² = 0, clipped to [alpha_floor, 1]"""
    floor = get_settings().alpha_floor
    alphas = np.ones(len(spikes))
    for i, (ell, tau) in enumerate(zip(spikes, taus)):
        c2 = cosine_sq(ell, gamma)
        if c2 > 0:
            s2 = 1.0 - c2
            # Rearranged so τ = 1 yields exactly 1
            alphas[i] = 1.0 - s2 * (tau - 1.0) / c2
    return np.clip(alphas, floor, 1.0)


def scale(
    ms: MomentSummary,
    het_eigvals: np.ndarray,
    het_eigvecs: np.ndarray,
    spikes: np.ndarray,
    rank: Optional[int] = None,
    families: Optional[List[str]] = None
) -> CovarianceModel:
    """
    Compute τ_i and α̂_i and assemble the scaled ePCA model.

    ``spikes`` may carry trailing zeros for spikes below the transition;
    only its positive entries are paired with the eigenpairs.

    Raises:
        InternalConsistencyError: eigenpair count mismatch or λ̂_i ≤ 0
    """
    spikes = np.asarray(spikes, dtype=float)
    kept = spikes[spikes > 0]
    het_eigvals = np.asarray(het_eigvals, dtype=float)
    if het_eigvals.shape != kept.shape or het_eigvecs.shape[1] != kept.size:
        raise InternalConsistencyError(
            f"{het_eigvals.size} heterogenized eigenpairs for {kept.size} kept spikes"
        )
    if np.any(het_eigvals <= 0):
        raise InternalConsistencyError(f"Non-positive heterogenized eigenvalue {het_eigvals.min()!r}")

    noise = ms.noise_diag
    mean_noise = noise[0] if np.all(noise == noise[0]) else float(np.mean(noise))
    taus = (mean_noise * kept) / het_eigvals
    alphas = scaling_coefficients(kept, taus, ms.gamma)

    return CovarianceModel(
        rank=len(spikes) if rank is None else rank,
        homogenized_spikes=kept,
        het_eigvecs=het_eigvecs,
        het_eigvals=het_eigvals,
        alphas=alphas,
        taus=taus,
        noise_diag=noise,
        mean=ms.mean,
        gamma=ms.gamma,
        n_samples=ms.n_samples,
        dropped_columns=ms.dropped_columns,
        n_features_total=ms.n_features_total,
        families=families or [],
        estimator=EstimatorKind.SCALED,
    )


# ----------------------------------------------------------------------------
# End to end
# ----------------------------------------------------------------------------

def _check_rank(ms: MomentSummary, rank: int):
    limit = min(ms.n_samples, ms.p)
    if rank < 0 or rank > limit:
        raise ConfigurationError(f"rank must lie in [0, {limit}] for n={ms.n_samples}, p={ms.p}; got {rank}")


def fit_moments(ms: MomentSummary, rank: int, families: Optional[List[str]] = None) -> CovarianceModel:
    """Run homogenize → shrink → heterogenize → scale on filtered moments"""
    _check_rank(ms, rank)
    if rank == 0:
        return scale(ms, np.empty(0), np.empty((ms.p, 0)), np.empty(0), rank=0, families=families)
    s_h = homogenize(ms)
    values, vectors = symmetric_eigh(s_h, top=rank)
    kept, spikes = shrink_spikes(values, ms.gamma, rank)
    shrunk = ShrunkSpectrum(spikes=spikes[:kept], eigvecs=vectors[:, :kept])
    het_eigvals, het_eigvecs = heterogenized_eigenpairs(ms.noise_diag, shrunk)
    return scale(ms, het_eigvals, het_eigvecs, spikes, rank=rank, families=families)


@log_performance("fit_epca")
def fit_epca(
    batch: DataBatch,
    rank: int,
    drop_degenerate: Optional[bool] = None,
    clamp_means: Optional[bool] = None
) -> CovarianceModel:
    """
    Fit the ePCA covariance estimator S_s of the given rank.

    Args:
        batch: Observations with their families
        rank: Number of spikes to estimate (0 ≤ rank ≤ min(n, p'))
        drop_degenerate: Drop zero-noise columns (settings default when None)
        clamp_means: Clamp out-of-domain means (settings default when None)

    Returns:
        Scaled covariance model; spikes below the transition are discarded
    """
    ms = sample_moments(batch, clamp_means=clamp_means)
    ms = drop_degenerate_columns(ms, drop=drop_degenerate)
    model = fit_moments(ms, rank, families=batch.family_specs())
    logger.info(
        f"Fitted ePCA model: {model.kept_count}/{rank} spikes above the transition",
        extra={
            "n": ms.n_samples, "p": ms.p, "gamma": ms.gamma,
            "rank": rank, "kept": model.kept_count,
            "dropped": len(ms.dropped_columns)
        }
    )
    return model


# ----------------------------------------------------------------------------
# Baselines
# ----------------------------------------------------------------------------

def truncated_model(
    ms: MomentSummary,
    matrix: np.ndarray,
    rank: int,
    kind: EstimatorKind,
    families: Optional[List[str]] = None
) -> CovarianceModel:
    """Rank-r truncation of a symmetric estimate, keeping positive eigenvalues"""
    _check_rank(ms, rank)
    values, vectors = symmetric_eigh(matrix, top=rank)
    keep = values > 0
    k = int(np.count_nonzero(keep))
    return CovarianceModel(
        rank=rank,
        homogenized_spikes=np.zeros(k),
        het_eigvecs=vectors[:, keep],
        het_eigvals=values[keep],
        alphas=np.ones(k),
        taus=np.ones(k),
        noise_diag=ms.noise_diag,
        mean=ms.mean,
        gamma=ms.gamma,
        n_samples=ms.n_samples,
        dropped_columns=ms.dropped_columns,
        n_features_total=ms.n_features_total,
        families=families or [],
        estimator=kind,
    )


def unscaled_model(model: CovarianceModel) -> CovarianceModel:
    """The heterogenized estimate S_he of a scaled model (α̂ = 1)"""
    return model.model_copy(update={
        "alphas": np.ones(model.kept_count),
        "estimator": EstimatorKind.HETEROGENIZED,
    })


def sample_covariance_model(batch: DataBatch, rank: int) -> CovarianceModel:
    """Rank-r truncation of the sample covariance S"""
    ms = sample_moments(batch)
    return truncated_model(ms, ms.sample_cov, rank, EstimatorKind.SAMPLE, batch.family_specs())


@log_performance("baseline_estimators")
def baseline_estimators(
    batch: DataBatch,
    rank: int,
    drop_degenerate: Optional[bool] = None,
    clamp_means: Optional[bool] = None
) -> Dict[EstimatorKind, CovarianceModel]:
    """
    Rank-r sample, debiased, heterogenized and scaled estimates on one set of moments.

    All four share the column filtering and mean clamping used by the ePCA fit.
    """
    families = batch.family_specs()
    ms = drop_degenerate_columns(sample_moments(batch, clamp_means=clamp_means), drop=drop_degenerate)
    scaled = fit_moments(ms, rank, families)
    return {
        EstimatorKind.SAMPLE: truncated_model(ms, ms.sample_cov, rank, EstimatorKind.SAMPLE, families),
        EstimatorKind.DEBIASED: truncated_model(ms, debias(ms), rank, EstimatorKind.DEBIASED, families),
        EstimatorKind.HETEROGENIZED: unscaled_model(scaled),
        EstimatorKind.SCALED: scaled,
    }


# ----------------------------------------------------------------------------
# PC scores
# ----------------------------------------------------------------------------

@log_performance("pc_scores")
def pc_scores(
    batch: DataBatch,
    rank: int,
    normalization: Normalization = Normalization.HOMOGENIZE,
    drop_degenerate: Optional[bool] = None
) -> PcScores:
    """
    Project normalized, centered data onto the top eigenvectors of its covariance.

    The projected data are the same normalized data the covariance is built
    from: homogenized (÷√V(Ȳ)), standardized (÷ sample std) or raw.
    """
    normalization = Normalization(normalization)
    settings = get_settings()
    drop = settings.drop_degenerate if drop_degenerate is None else drop_degenerate
    ms = sample_moments(batch)

    if normalization == Normalization.HOMOGENIZE:
        ms = drop_degenerate_columns(ms, drop=drop)
        weights = homogenization_weights(ms.noise_diag)
        matrix = homogenize(ms)
    elif normalization == Normalization.STANDARDIZE:
        bad = np.flatnonzero(np.diag(ms.sample_cov) <= settings.drop_threshold)
        ms = _restrict_or_raise(ms, list(bad), drop)
        weights = 1.0 / np.sqrt(np.diag(ms.sample_cov))
        matrix = standardize(ms)
    else:
        weights = np.ones(ms.p)
        matrix = ms.sample_cov

    _check_rank(ms, rank)
    values, vectors = symmetric_eigh(matrix, top=rank)
    centered = (batch.values[:, ms.kept_columns] - ms.mean) * weights
    return PcScores(
        scores=centered @ vectors,
        eigenvalues=values,
        eigvecs=vectors,
        kept_columns=np.asarray(ms.kept_columns),
        normalization=normalization,
    )
