"""Built-in exponential families: Poisson, Gaussian (known variance), Binomial, Negative Binomial"""

import math
from typing import Optional, Tuple

import numpy as np

from .base_family import ExponentialFamily, FamilyName, family_registry


class PoissonFamily(ExponentialFamily):
    """Poisson counts: V(m) = m on [0, ∞)"""

    name = FamilyName.POISSON

    @property
    def mean_domain(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    @property
    def parameter(self) -> Optional[float]:
        return None

    def _variance(self, m: np.ndarray) -> np.ndarray:
        return m.copy()


class GaussianFamily(ExponentialFamily):
    """Gaussian with known variance σ²: V(m) = σ² on ℝ"""

    name = FamilyName.GAUSSIAN

    def __init__(self, variance: float = 1.0):
        if not variance >= 0 or not math.isfinite(variance):
            raise ValueError(f"variance must be finite and nonnegative, got {variance}")
        self.variance = float(variance)

    @property
    def mean_domain(self) -> Tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def parameter(self) -> Optional[float]:
        return self.variance

    def _variance(self, m: np.ndarray) -> np.ndarray:
        return np.full_like(m, self.variance)


class BinomialFamily(ExponentialFamily):
    """Binomial(k) counts: V(m) = m(1 − m/k) on [0, k]"""

    name = FamilyName.BINOMIAL

    def __init__(self, trials: int):
        if not math.isfinite(trials) or float(trials) != int(trials) or int(trials) < 1:
            raise ValueError(f"trials must be a positive integer, got {trials}")
        self.trials = int(trials)

    @property
    def mean_domain(self) -> Tuple[float, float]:
        return (0.0, float(self.trials))

    @property
    def parameter(self) -> Optional[float]:
        return float(self.trials)

    def _variance(self, m: np.ndarray) -> np.ndarray:
        # For k = 2 this is (2p)(1 − p) with p = m/2, the HWE variance
        return m * (1.0 - m / float(self.trials))


class NegativeBinomialFamily(ExponentialFamily):
    """Negative Binomial with dispersion r: V(m) = m + m²/r on [0, ∞)"""

    name = FamilyName.NEGATIVE_BINOMIAL

    def __init__(self, dispersion: float):
        if not dispersion > 0 or not math.isfinite(dispersion):
            raise ValueError(f"dispersion must be positive, got {dispersion}")
        self.dispersion = float(dispersion)

    @property
    def mean_domain(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    @property
    def parameter(self) -> Optional[float]:
        return self.dispersion

    def _variance(self, m: np.ndarray) -> np.ndarray:
        return m + m * m / self.dispersion


def _gaussian_factory(param: Optional[float]) -> ExponentialFamily:
    return GaussianFamily(1.0 if param is None else param)


family_registry.register(FamilyName.POISSON.value, lambda _: PoissonFamily(), needs_parameter=False)
family_registry.register(FamilyName.GAUSSIAN.value, _gaussian_factory, needs_parameter=False)
family_registry.register(FamilyName.BINOMIAL.value, lambda k: BinomialFamily(k), needs_parameter=True)
family_registry.register(FamilyName.NEGATIVE_BINOMIAL.value, lambda r: NegativeBinomialFamily(r), needs_parameter=True)
