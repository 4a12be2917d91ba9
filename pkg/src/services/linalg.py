"""Dense symmetric eigendecompositions with a deterministic sign convention"""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from ..core.exceptions import InternalConsistencyError
from ..core.settings import get_settings


def orient_eigenvectors(vectors: np.ndarray) -> np.ndarray:
    """
    Flip each column so its largest-magnitude entry is positive.

    Ties go to the lowest index (argmax returns the first maximum).
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _check_residual(matrix: np.ndarray, values: np.ndarray, vectors: np.ndarray):
    tolerance = get_settings().eigen_tolerance
    scale = np.linalg.norm(matrix)
    if scale == 0 or values.size == 0:
        return
    residual = np.linalg.norm(matrix @ vectors - vectors * values) / scale
    if residual > tolerance:
        raise InternalConsistencyError(
            f"Eigensolver residual {residual:.3e} exceeds tolerance {tolerance:.1e}"
        )


def symmetric_eigh(matrix: np.ndarray, top: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a dense symmetric matrix, eigenvalues descending.

    Args:
        matrix: p×p symmetric matrix
        top: Return only the ``top`` largest eigenpairs (all when None)

    Returns:
        (eigenvalues, eigenvectors as columns)
    """
    p = matrix.shape[0]
    if top is not None and top <= 0:
        return np.empty(0), np.empty((p, 0))
    if top is None or top >= p:
        values, vectors = scipy.linalg.eigh(matrix)
    else:
        values, vectors = scipy.linalg.eigh(matrix, subset_by_index=[p - top, p - 1])
    values = values[::-1]
    vectors = orient_eigenvectors(vectors[:, ::-1])
    _check_residual(matrix, values, vectors)
    return values, vectors


def factor_eigh(factor: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenpairs of B Bᵀ for a tall p×k factor B, eigenvalues descending.

    Uses B = QR so only a k×k symmetric problem is solved.
    """
    p, k = factor.shape
    if k == 0:
        return np.empty(0), np.empty((p, 0))
    q, r = np.linalg.qr(factor)
    small = r @ r.T
    values, vectors = scipy.linalg.eigh((small + small.T) / 2)
    values = values[::-1]
    vectors = orient_eigenvectors(q @ vectors[:, ::-1])
    return values, vectors


def extreme_abs_eigenvalue(matrix: np.ndarray) -> float:
    """Operator norm of a symmetric matrix from its two extreme eigenvalues"""
    p = matrix.shape[0]
    if p == 0:
        return 0.0
    lo = scipy.linalg.eigh(matrix, eigvals_only=True, subset_by_index=[0, 0])[0]
    hi = scipy.linalg.eigh(matrix, eigvals_only=True, subset_by_index=[p - 1, p - 1])[0]
    return float(max(abs(lo), abs(hi)))
