"""Estimation metrics for covariance, eigenvalue and subspace recovery"""

from typing import Dict

import numpy as np

from ..core.exceptions import DataError, ShapeMismatchError
from .linalg import extreme_abs_eigenvalue, symmetric_eigh

# Eigenvalues below this fraction of the largest one count as zero
NEGLIGIBLE_RTOL = 1e-10


def _check_orthonormal(U: np.ndarray, name: str, tol: float = 1e-8):
    gram = U.T @ U
    if gram.size and np.max(np.abs(gram - np.eye(U.shape[1]))) > tol:
        raise DataError(f"{name} columns are not orthonormal")


def subspace_error(U_hat: np.ndarray, U: np.ndarray) -> float:
    """‖Û Ûᵀ − U Uᵀ‖²_F for column-orthonormal Û, U"""
    U_hat = np.atleast_2d(np.asarray(U_hat, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U_hat.shape[0] != U.shape[0]:
        raise ShapeMismatchError(f"Dimension {U_hat.shape[0]} differs from {U.shape[0]}")
    _check_orthonormal(U_hat, "U_hat")
    _check_orthonormal(U, "U")
    # ‖P̂ − P‖² = r̂ + r − 2‖Ûᵀ U‖², without forming p×p projectors
    cross = U_hat.T @ U
    value = U_hat.shape[1] + U.shape[1] - 2.0 * float(np.sum(cross * cross))
    return max(value, 0.0)


def sq_correlation(v_hat: np.ndarray, v: np.ndarray) -> float:
    """(v̂ᵀv)²/(‖v̂‖²‖v‖²)"""
    v_hat = np.asarray(v_hat, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    denom = float(np.dot(v_hat, v_hat) * np.dot(v, v))
    if denom == 0:
        raise DataError("Squared correlation of a zero vector is undefined")
    return float(min(1.0, np.dot(v_hat, v) ** 2 / denom))


def matrix_errors(estimate: np.ndarray, truth: np.ndarray) -> Dict[str, float]:
    """Frobenius and operator norms of estimate − truth"""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ShapeMismatchError(f"Estimate shape {estimate.shape} differs from truth shape {truth.shape}")
    diff = estimate - truth
    diff = (diff + diff.T) / 2
    return {
        "frobenius": float(np.linalg.norm(diff)),
        "operator": extreme_abs_eigenvalue(diff),
    }


def eigenvalue_percent_errors(
    estimated: np.ndarray, truth: np.ndarray, k: int = 5, rtol: float = NEGLIGIBLE_RTOL
) -> np.ndarray:
    """
    100·|λ̂_i − λ_i|/λ_i for the top k eigenvalues, both sorted descending.

    Missing estimates count as 0. True eigenvalues with |λ_i| ≤ rtol·max|λ|
    are round-off of a rank-deficient truth and are skipped.
    """
    est = np.sort(np.asarray(estimated, dtype=float))[::-1]
    tru = np.sort(np.asarray(truth, dtype=float))[::-1][:k]
    padded = np.zeros(len(tru))
    padded[:min(len(est), len(tru))] = est[:len(tru)]
    scale = float(np.max(np.abs(tru))) if tru.size else 0.0
    nonzero = np.abs(tru) > rtol * scale
    return 100.0 * np.abs(padded[nonzero] - tru[nonzero]) / np.abs(tru[nonzero])


def signal_subspace(covariance: np.ndarray, rank: int, rtol: float = NEGLIGIBLE_RTOL) -> np.ndarray:
    """
    Orthonormal basis of the top eigenvectors of a PSD covariance, at most ``rank``
    of them, keeping only eigenvalues above rtol·λ_max.
    """
    values, vectors = symmetric_eigh(np.asarray(covariance, dtype=float), top=rank)
    if values.size == 0 or values[0] <= 0:
        return vectors[:, :0]
    return vectors[:, values > rtol * values[0]]
