"""Exponential families and their variance maps"""

from .base_family import (
    ExponentialFamily, FamilyName, FamilyRegistry, family_registry,
    parse_family, variance_map, validate_mean, column_variances
)
from .builtin_families import (
    PoissonFamily, GaussianFamily, BinomialFamily, NegativeBinomialFamily
)

__all__ = [
    "ExponentialFamily", "FamilyName", "FamilyRegistry", "family_registry",
    "parse_family", "variance_map", "validate_mean", "column_variances",
    "PoissonFamily", "GaussianFamily", "BinomialFamily", "NegativeBinomialFamily",
]
