"""Tests for recovery metrics"""

import math

import numpy as np
import pytest

from src.core.exceptions import DataError, ShapeMismatchError
from src.models import LowRankConfig
from src.services.linalg import symmetric_eigh
from src.services.metrics import (
    eigenvalue_percent_errors, matrix_errors, signal_subspace, sq_correlation, subspace_error
)
from src.services.simulation import gen_low_rank_poisson


class TestSubspaceError:
    """Test the projector distance between subspaces"""

    def test_identical_subspaces(self, rng):
        """Test equal bases give 0"""
        U, _ = np.linalg.qr(rng.standard_normal((10, 3)))
        assert subspace_error(U, U) == pytest.approx(0.0, abs=1e-12)

    def test_rotation_invariant(self, rng):
        """Test a rotated basis spans the same subspace"""
        U, _ = np.linalg.qr(rng.standard_normal((10, 3)))
        R, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        assert subspace_error(U @ R, U) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_lines(self):
        """Test two orthogonal lines are at distance 2"""
        e1 = np.array([[1.0], [0.0], [0.0]])
        e2 = np.array([[0.0], [1.0], [0.0]])
        assert subspace_error(e1, e2) == pytest.approx(2.0)

    def test_matches_dense_projectors(self, rng):
        """Test against ‖ÛÛᵀ − UUᵀ‖²_F formed explicitly"""
        U_hat, _ = np.linalg.qr(rng.standard_normal((8, 2)))
        U, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        dense = np.linalg.norm(U_hat @ U_hat.T - U @ U.T) ** 2
        assert subspace_error(U_hat, U) == pytest.approx(dense, rel=1e-10)

    def test_rejects_non_orthonormal(self):
        """Test bases must have orthonormal columns"""
        with pytest.raises(DataError):
            subspace_error(np.array([[2.0], [0.0]]), np.array([[1.0], [0.0]]))

    def test_rejects_dimension_mismatch(self):
        """Test ambient dimensions must agree"""
        with pytest.raises(ShapeMismatchError):
            subspace_error(np.eye(3)[:, :1], np.eye(4)[:, :1])


class TestSqCorrelation:
    """Test squared correlation between directions"""

    def test_values(self):
        """Test parallel, orthogonal and 45° vectors"""
        assert sq_correlation(np.array([1.0, 2.0]), np.array([-2.0, -4.0])) == pytest.approx(1.0)
        assert sq_correlation(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0
        assert sq_correlation(np.array([1.0, 0.0]), np.array([1.0, 1.0]) / math.sqrt(2.0)) == pytest.approx(0.5)

    def test_zero_vector(self):
        """Test zero vectors are rejected"""
        with pytest.raises(DataError):
            sq_correlation(np.zeros(3), np.ones(3))


class TestMatrixErrors:
    """Test Frobenius and operator norm errors"""

    def test_diagonal_difference(self):
        """Test diag(3, −4) has Frobenius 5 and operator 4"""
        errors = matrix_errors(np.diag([4.0, -2.0]), np.diag([1.0, 2.0]))
        assert errors["frobenius"] == pytest.approx(5.0)
        assert errors["operator"] == pytest.approx(4.0)

    def test_zero_error(self):
        """Test identical matrices give zero"""
        m = np.array([[2.0, 1.0], [1.0, 3.0]])
        assert matrix_errors(m, m) == {"frobenius": 0.0, "operator": 0.0}

    def test_shape_mismatch(self):
        """Test shapes must agree"""
        with pytest.raises(ShapeMismatchError):
            matrix_errors(np.eye(2), np.eye(3))


class TestEigenvaluePercentErrors:
    """Test top-k eigenvalue percentage errors"""

    def test_skips_zero_truth(self):
        """Test est [9, 4] vs truth [10, 5, 0] gives [10, 20]"""
        errors = eigenvalue_percent_errors(np.array([4.0, 9.0]), np.array([0.0, 10.0, 5.0]))
        np.testing.assert_allclose(errors, [10.0, 20.0])

    def test_missing_estimates_count_as_zero(self):
        """Test a missing estimate is a 100% error"""
        errors = eigenvalue_percent_errors(np.array([10.0]), np.array([10.0, 5.0]))
        np.testing.assert_allclose(errors, [0.0, 100.0])

    def test_top_k_only(self):
        """Test only the k largest true eigenvalues are scored"""
        truth = np.arange(1.0, 11.0)
        assert eigenvalue_percent_errors(truth, truth, k=3).shape == (3,)

    def test_skips_round_off_truth(self):
        """Test a rank-deficient truth does not blow up the errors"""
        errors = eigenvalue_percent_errors(np.array([11.0, 5.5, 0.3]), np.array([10.0, 5.0, -3e-17]))
        np.testing.assert_allclose(errors, [10.0, 10.0])

    def test_low_rank_truth(self):
        """Test low-rank Poisson truth scores only its r − 1 real eigenvalues"""
        _, truth = gen_low_rank_poisson(LowRankConfig(n=10, p=40, rank=5, seed=2))
        true_eigs, _ = symmetric_eigh(truth.covariance(), top=5)
        errors = eigenvalue_percent_errors(1.1 * true_eigs, true_eigs, k=5)
        assert errors.shape == (4,)
        np.testing.assert_allclose(errors, 10.0)


class TestSignalSubspace:
    """Test the orthonormal basis of a covariance's range"""

    def test_low_rank_truth_subspace(self):
        """Test the range has dimension r − 1 and lies inside the basis span"""
        _, truth = gen_low_rank_poisson(LowRankConfig(n=10, p=40, rank=5, seed=2))
        basis = signal_subspace(truth.covariance(), 5)
        assert basis.shape == (40, 4)
        span, _ = np.linalg.qr(truth.basis)
        # Nested subspaces of dimension 4 and 5 are at distance 1
        assert subspace_error(basis, span) == pytest.approx(1.0, abs=1e-8)

    def test_zero_covariance(self):
        """Test a zero matrix has an empty range"""
        assert signal_subspace(np.zeros((3, 3)), 2).shape == (3, 0)
