"""Base exponential-family interface, registry and family-string parser"""

import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ConfigurationError, FamilyDomainError

ArrayLike = Union[float, np.ndarray]


class FamilyName(str, Enum):
    """Supported exponential families"""
    POISSON = "poisson"
    GAUSSIAN = "gaussian"
    BINOMIAL = "binomial"
    NEGATIVE_BINOMIAL = "negbin"


class ExponentialFamily(ABC):
    """
    One-parameter exponential family with density exp[θy − A(θ)].

    Subclasses supply the variance map V(m) = A''[(A')⁻¹(m)] on the mean
    domain A'(Θ). Instances are immutable values; equality and hashing go
    through the family string.
    """

    name: FamilyName

    @property
    @abstractmethod
    def mean_domain(self) -> Tuple[float, float]:
        """Closed interval (lo, hi) of admissible means; infinite ends allowed"""

    @abstractmethod
    def _variance(self, m: np.ndarray) -> np.ndarray:
        """Variance map on in-domain means"""

    @property
    @abstractmethod
    def parameter(self) -> Optional[float]:
        """Nuisance parameter carried by the family, if any"""

    @property
    def spec(self) -> str:
        """Family string, e.g. ``poisson`` or ``binomial:2``"""
        if self.parameter is None:
            return self.name.value
        value = self.parameter
        text = str(int(value)) if float(value).is_integer() and self.name == FamilyName.BINOMIAL else repr(float(value))
        return f"{self.name.value}:{text}"

    @property
    def is_count(self) -> bool:
        """Count families restrict observations to their mean domain"""
        return self.name != FamilyName.GAUSSIAN

    def validate_mean(self, m: ArrayLike) -> Union[bool, np.ndarray]:
        """True where m lies in the mean domain"""
        lo, hi = self.mean_domain
        values = np.asarray(m, dtype=float)
        inside = (values >= lo) & (values <= hi)
        if values.ndim == 0:
            return bool(inside)
        return inside

    def clamp(self, m: ArrayLike) -> ArrayLike:
        """Clamp means to the nearest point of the mean domain"""
        lo, hi = self.mean_domain
        clipped = np.clip(np.asarray(m, dtype=float), lo, hi)
        return float(clipped) if clipped.ndim == 0 else clipped

    def variance_map(self, m: ArrayLike, clamp: bool = False) -> ArrayLike:
        """
        Evaluate V(m).

        Args:
            m: Mean or array of means
            clamp: Clamp out-of-domain means instead of raising

        Returns:
            Variance with the same shape as ``m``

        Raises:
            FamilyDomainError: if a mean lies outside the domain and clamp is off
        """
        values = np.asarray(m, dtype=float)
        if clamp:
            values = np.asarray(self.clamp(values), dtype=float)
        else:
            inside = np.asarray(self.validate_mean(values))
            if not inside.all():
                bad = values[~inside] if values.ndim else values
                raise FamilyDomainError(self.spec, float(np.ravel(bad)[0]))
        result = self._variance(values)
        return float(result) if result.ndim == 0 else result

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ExponentialFamily) and other.spec == self.spec

    def __hash__(self) -> int:
        return hash(self.spec)

    def __repr__(self) -> str:
        return f"{type(self).__name__}('{self.spec}')"


class FamilyRegistry:
    """Registry of family constructors keyed by family tag"""

    def __init__(self):
        self._factories: Dict[str, Callable[[Optional[float]], ExponentialFamily]] = {}
        self._needs_parameter: Dict[str, bool] = {}

    def register(
        self,
        tag: str,
        factory: Callable[[Optional[float]], ExponentialFamily],
        needs_parameter: bool
    ):
        """Register a family constructor under a tag"""
        self._factories[tag] = factory
        self._needs_parameter[tag] = needs_parameter

    def available(self) -> List[str]:
        """Registered family tags"""
        return sorted(self._factories)

    def parse(self, text: str) -> ExponentialFamily:
        """
        Parse a family string such as ``poisson``, ``binomial:2``, ``gaussian:1.0``.

        Raises:
            ConfigurationError: unknown tag, missing or malformed parameter
        """
        tag, _, raw_param = text.strip().partition(":")
        tag = tag.lower()
        if tag not in self._factories:
            raise ConfigurationError(
                f"Unknown family '{text}'; expected one of {self.available()}"
            )
        param: Optional[float] = None
        if raw_param:
            try:
                param = float(raw_param)
            except ValueError:
                raise ConfigurationError(f"Family parameter in '{text}' is not a number")
            if not math.isfinite(param):
                raise ConfigurationError(f"Family parameter in '{text}' must be finite")
        elif self._needs_parameter[tag]:
            raise ConfigurationError(f"Family '{tag}' needs a parameter, e.g. '{tag}:2'")
        try:
            return self._factories[tag](param)
        except ValueError as e:
            raise ConfigurationError(f"Invalid family '{text}': {e}")


# Global family registry
family_registry = FamilyRegistry()


def parse_family(text: str) -> ExponentialFamily:
    """Parse a family string with the global registry"""
    return family_registry.parse(text)


def variance_map(family: ExponentialFamily, m: ArrayLike, clamp: bool = False) -> ArrayLike:
    """V(m) for a family"""
    return family.variance_map(m, clamp=clamp)


def validate_mean(family: ExponentialFamily, m: float) -> bool:
    """True iff m lies in the family's mean domain"""
    return bool(family.validate_mean(m))


def column_variances(
    families: Sequence[ExponentialFamily],
    means: np.ndarray,
    clamp: bool = False
) -> np.ndarray:
    """
    Per-column noise variances V_j(m_j).

    Args:
        families: One family for every column, or a single shared family
        means: Column means
        clamp: Clamp out-of-domain means instead of raising
    """
    means = np.asarray(means, dtype=float)
    if len(families) == 1:
        return np.asarray(families[0].variance_map(means, clamp=clamp), dtype=float).reshape(means.shape)
    if len(families) != means.shape[0]:
        raise ConfigurationError(
            f"Got {len(families)} families for {means.shape[0]} columns"
        )
    result = np.empty_like(means)
    # Group columns by family so each variance map runs vectorized once
    groups: Dict[ExponentialFamily, List[int]] = {}
    for j, family in enumerate(families):
        groups.setdefault(family, []).append(j)
    for family, columns in groups.items():
        idx = np.asarray(columns)
        result[idx] = family.variance_map(means[idx], clamp=clamp)
    return result
