"""Tests for exponential families, variance maps and family-string parsing"""

import math

import numpy as np
import pytest

from src.core.exceptions import ConfigurationError, FamilyDomainError
from src.families import (
    BinomialFamily, GaussianFamily, NegativeBinomialFamily, PoissonFamily,
    column_variances, family_registry, parse_family, validate_mean, variance_map
)


class TestVarianceMaps:
    """Test the variance map of every built-in family"""

    def test_poisson_variance_is_mean(self):
        """Test V(m) = m for Poisson"""
        assert variance_map(PoissonFamily(), 3.0) == 3.0

    def test_poisson_variance_is_linear(self):
        """Test V(a·m) = a·V(m) for Poisson"""
        family = PoissonFamily()
        m = np.array([0.0, 0.04, 1.0, 7.5])
        np.testing.assert_array_equal(family.variance_map(2.0 * m), 2.0 * family.variance_map(m))

    def test_gaussian_variance_is_constant(self):
        """Test V(m) = σ² for Gaussian with known variance"""
        assert variance_map(GaussianFamily(1.0), 17.3) == 1.0
        result = GaussianFamily(2.0).variance_map(np.array([-3.0, 0.0, 9.0]))
        np.testing.assert_array_equal(result, [2.0, 2.0, 2.0])

    def test_binomial_variance(self):
        """Test V(m) = m(1 − m/k) for Binomial"""
        assert variance_map(BinomialFamily(2), 1.0) == 0.5
        assert variance_map(BinomialFamily(2), 0.5) == pytest.approx(0.375)
        assert variance_map(BinomialFamily(2), 2.0) == 0.0

    def test_binomial_two_matches_hwe_variance(self):
        """Test binomial(2) variance equals 2p̂(1 − p̂) bit for bit"""
        m = np.linspace(0.0, 2.0, 41)
        p_hat = m / 2.0
        np.testing.assert_array_equal(BinomialFamily(2).variance_map(m), (2.0 * p_hat) * (1.0 - p_hat))

    def test_negative_binomial_variance(self):
        """Test V(m) = m + m²/r for Negative Binomial"""
        assert variance_map(NegativeBinomialFamily(5), 2.0) == pytest.approx(2.8)

    def test_variance_matches_empirical_draws(self, rng):
        """Test variance maps against seeded sample variances"""
        size = 200_000
        cases = [
            (PoissonFamily(), 1.7, rng.poisson(1.7, size)),
            (BinomialFamily(2), 0.6, rng.binomial(2, 0.3, size)),
            (NegativeBinomialFamily(4), 2.0, rng.negative_binomial(4, 4.0 / 6.0, size)),
        ]
        for family, m, draws in cases:
            expected = family.variance_map(m)
            assert np.var(draws) == pytest.approx(expected, rel=0.03)

    def test_scalar_in_scalar_out(self):
        """Test scalar input returns a Python float"""
        assert isinstance(PoissonFamily().variance_map(2), float)


class TestMeanDomain:
    """Test mean-domain validation and clamping"""

    def test_validate_mean(self):
        """Test domain membership including boundaries"""
        assert validate_mean(PoissonFamily(), -0.1) is False
        assert validate_mean(PoissonFamily(), 0.0) is True
        assert validate_mean(BinomialFamily(2), 2.0) is True
        assert validate_mean(BinomialFamily(2), 2.1) is False
        assert validate_mean(GaussianFamily(1.0), -5.0) is True

    def test_out_of_domain_raises(self):
        """Test domain error names the family and value"""
        with pytest.raises(FamilyDomainError) as exc_info:
            PoissonFamily().variance_map(-1.0)
        assert exc_info.value.family == "poisson"
        assert exc_info.value.value == -1.0

        with pytest.raises(FamilyDomainError, match="binomial:2"):
            BinomialFamily(2).variance_map(np.array([1.0, 3.0]))

    def test_clamp(self):
        """Test clamping maps means onto the nearest domain point"""
        assert PoissonFamily().variance_map(-1.0, clamp=True) == 0.0
        assert BinomialFamily(2).variance_map(3.0, clamp=True) == 0.0
        assert BinomialFamily(2).clamp(-0.5) == 0.0


class TestFamilyParsing:
    """Test the family-string parser and registry"""

    def test_parse_builtin_families(self):
        """Test parsing of every registered tag"""
        assert parse_family("poisson") == PoissonFamily()
        assert parse_family("binomial:2") == BinomialFamily(2)
        assert parse_family("negbin:0.5") == NegativeBinomialFamily(0.5)
        assert parse_family(" Gaussian:2.5 ") == GaussianFamily(2.5)

    def test_gaussian_defaults_to_unit_variance(self):
        """Test a bare gaussian tag means σ² = 1"""
        family = parse_family("gaussian")
        assert family.variance == 1.0
        assert family.spec == "gaussian:1.0"

    def test_spec_roundtrip(self):
        """Test family strings parse back to equal families"""
        for text in ["poisson", "binomial:2", "negbin:3.5", "gaussian:0.25"]:
            family = parse_family(text)
            assert parse_family(family.spec) == family
            assert hash(parse_family(family.spec)) == hash(family)

    @pytest.mark.parametrize("text", [
        "foo", "binomial", "binomial:x", "binomial:0", "binomial:1.5", "negbin:-1", "negbin",
        "binomial:inf", "binomial:nan", "gaussian:inf",
    ])
    def test_invalid_family_strings(self, text):
        """Test malformed family strings raise configuration errors"""
        with pytest.raises(ConfigurationError):
            parse_family(text)

    def test_binomial_rejects_non_finite_trials(self):
        """Test infinite trial counts are a ValueError, not an OverflowError"""
        with pytest.raises(ValueError, match="positive integer"):
            BinomialFamily(math.inf)

    def test_registry_lists_tags(self):
        """Test registry exposes the built-in tags"""
        assert family_registry.available() == ["binomial", "gaussian", "negbin", "poisson"]


class TestColumnVariances:
    """Test per-column noise variances"""

    def test_shared_family(self):
        """Test one family applied to every column"""
        result = column_variances([PoissonFamily()], np.array([0.5, 1.0, 2.0]))
        np.testing.assert_array_equal(result, [0.5, 1.0, 2.0])

    def test_mixed_families(self):
        """Test one family per column"""
        families = [PoissonFamily(), BinomialFamily(2), GaussianFamily(3.0), PoissonFamily()]
        result = column_variances(families, np.array([2.0, 1.0, -4.0, 0.5]))
        np.testing.assert_allclose(result, [2.0, 0.5, 3.0, 0.5])

    def test_family_count_mismatch(self):
        """Test wrong number of families raises"""
        with pytest.raises(ConfigurationError):
            column_variances([PoissonFamily(), PoissonFamily()], np.ones(3))

    def test_variance_is_nonnegative_on_domain(self):
        """Test V ≥ 0 across each domain"""
        grid = np.linspace(0.0, 2.0, 101)
        for family in [PoissonFamily(), BinomialFamily(2), NegativeBinomialFamily(1.0)]:
            assert np.all(family.variance_map(grid) >= 0)
        assert not math.isnan(GaussianFamily(0.0).variance_map(1.0))
