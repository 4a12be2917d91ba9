"""EBLP (Wiener filter) denoising and the PCA-projection baseline"""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from ..core.exceptions import ShapeMismatchError, SingularSystemError
from ..core.logging import get_logger, log_performance
from ..core.settings import get_settings
from ..models.batch_models import DataBatch
from ..models.covariance_models import CovarianceModel, DenoiseMethod, Denoiser

logger = get_logger(__name__)

# Smallest admissible squared Cholesky pivot relative to the largest
PIVOT_RTOL = 1e-14


def build_denoiser(
    model: CovarianceModel,
    epsilon: Optional[float] = None,
    method: DenoiseMethod = DenoiseMethod.EBLP
) -> Denoiser:
    """Denoiser with the configured default ridge weight when none is given"""
    eps = get_settings().default_epsilon if epsilon is None else epsilon
    return Denoiser(model=model, epsilon=eps, method=DenoiseMethod(method))


def regularized_covariance(model: CovarianceModel, epsilon: float) -> np.ndarray:
    """Σ̂_ε = (1−ε)(D + S_s) + ε·(tr(D + S_s)/p)·I; the trace is preserved"""
    sigma = model.covariance()
    sigma[np.diag_indices_from(sigma)] += model.noise_diag
    if epsilon == 0:
        return sigma
    m_tilde = np.trace(sigma) / model.p
    sigma *= (1.0 - epsilon)
    sigma[np.diag_indices_from(sigma)] += epsilon * m_tilde
    return sigma


def _factor(sigma: np.ndarray, epsilon: float):
    try:
        factor = scipy.linalg.cho_factor(sigma, lower=False, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(
            f"Regularized covariance is not positive definite at epsilon={epsilon}; use epsilon > 0 ({e})"
        )
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() <= PIVOT_RTOL * pivots.max():
        raise SingularSystemError(
            f"Regularized covariance is numerically singular at epsilon={epsilon}; use epsilon > 0"
        )
    return factor


def _model_columns(model: CovarianceModel, batch: DataBatch) -> Optional[np.ndarray]:
    """Kept-column indices when the batch still has the dropped columns, else None"""
    if batch.p == model.p:
        return None
    if batch.p == model.n_features_total:
        dropped = set(model.dropped_columns)
        return np.array([j for j in range(model.n_features_total) if j not in dropped], dtype=int)
    raise ShapeMismatchError(
        f"Batch has {batch.p} columns; model expects {model.p} (or {model.n_features_total} before dropping)"
    )


def _split(model: CovarianceModel, batch: DataBatch) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    kept = _model_columns(model, batch)
    values = batch.values if kept is None else batch.values[:, kept]
    return values, kept


def _merge(batch: DataBatch, denoised: np.ndarray, kept: Optional[np.ndarray], clamp: bool) -> np.ndarray:
    # Dropped columns are noiseless and pass through unchanged
    if kept is None:
        result = denoised
    else:
        result = np.array(batch.values, copy=True)
        result[:, kept] = denoised
    if clamp:
        np.clip(result, 0.0, None, out=result)
    return result


@log_performance("eblp_denoise")
def eblp_denoise(d: Denoiser, batch: DataBatch, clamp: bool = False) -> np.ndarray:
    """
    X̂_i = S_s Σ̂_ε⁻¹ Y_i + D Σ̂_ε⁻¹ Ȳ for every row.

    Σ̂_ε is Cholesky-factored once and applied to row blocks.

    Args:
        d: Denoiser holding the covariance model and ridge weight ε
        batch: Observations; either the model's columns or all original columns
        clamp: Clip negative outputs to 0

    Raises:
        ShapeMismatchError: batch width matches neither column layout
        SingularSystemError: Σ̂_ε cannot be factored (only possible at ε = 0)
    """
    model = d.model
    values, kept = _split(model, batch)
    factor = _factor(regularized_covariance(model, d.epsilon), d.epsilon)

    U = model.het_eigvecs
    weights = model.eigenvalues
    offset = model.noise_diag * scipy.linalg.cho_solve(factor, model.mean, check_finite=False)

    block = get_settings().denoise_block_rows
    denoised = np.empty_like(values)
    for start in range(0, values.shape[0], block):
        rows = values[start:start + block]
        solved = scipy.linalg.cho_solve(factor, rows.T, check_finite=False)
        denoised[start:start + block] = ((U * weights) @ (U.T @ solved)).T + offset

    logger.debug(
        "EBLP denoised batch",
        extra={"n": values.shape[0], "p": values.shape[1], "epsilon": d.epsilon}
    )
    return _merge(batch, denoised, kept, clamp)


@log_performance("projection_denoise")
def projection_denoise(d: Denoiser, batch: DataBatch, clamp: bool = False) -> np.ndarray:
    """X̂_i = Ȳ + U Uᵀ(Y_i − Ȳ) with the model's eigenvectors U"""
    model = d.model
    values, kept = _split(model, batch)
    U = model.het_eigvecs
    centered = values - model.mean
    denoised = model.mean + (centered @ U) @ U.T
    return _merge(batch, denoised, kept, clamp)


def denoise(d: Denoiser, batch: DataBatch, clamp: bool = False) -> np.ndarray:
    """Dispatch on the denoiser's method"""
    if d.method == DenoiseMethod.PROJECTION:
        return projection_denoise(d, batch, clamp=clamp)
    return eblp_denoise(d, batch, clamp=clamp)


def denoise_mse(x_hat: np.ndarray, x: np.ndarray) -> float:
    """
    Mean squared entrywise error (pn)⁻¹ Σ‖X̂_i − X_i‖².

    Raises:
        ShapeMismatchError: shapes differ
    """
    x_hat = np.asarray(x_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    if x_hat.shape != x.shape:
        raise ShapeMismatchError(f"Estimate shape {x_hat.shape} differs from truth shape {x.shape}")
    return float(np.mean((x_hat - x) ** 2))
