"""Simulation configurations, ground truths and Monte-Carlo trial reports"""

import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SpikedPoissonConfig(BaseModel):
    """Rank-one spiked Poisson model X_i = u + z_i √ℓ v, Y_i ~ Poisson(X_i)"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2, description="Number of samples")
    p: int = Field(..., ge=1, description="Number of features")
    ell: float = Field(..., ge=0.0, description="Spike strength ℓ")
    u_range: Tuple[float, float] = Field((1.0, 3.0), description="Grid range of the mean vector u")
    v_range: Tuple[float, float] = Field((-1.0, 1.0), description="Grid range of v before normalization")
    seed: int = Field(0, ge=0, description="Base seed")

    @field_validator("u_range", "v_range")
    @classmethod
    def validate_range(cls, v):
        lo, hi = v
        if not lo <= hi:
            raise ValueError(f"range lower end {lo} exceeds upper end {hi}")
        return v

    @property
    def gamma(self) -> float:
        return self.p / self.n


class LowRankConfig(BaseModel):
    """
    Low-rank Poisson model X_i = Σ_k a_ik v_k with L1-normalized nonnegative basis.

    The per-sample coefficient total A is ``mean_intensity·p`` when a mean
    intensity is given, else ``signal_strength``, else 25(1+√γ)².
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2)
    p: int = Field(..., ge=1)
    rank: int = Field(..., ge=1)
    signal_strength: Optional[float] = Field(None, gt=0.0, description="Coefficient total A")
    mean_intensity: Optional[float] = Field(None, gt=0.0, description="Average entry of X")
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def validate_rank(self):
        if self.rank > self.p:
            raise ValueError(f"rank {self.rank} exceeds p = {self.p}")
        return self

    @property
    def gamma(self) -> float:
        return self.p / self.n

    @property
    def strength(self) -> float:
        if self.mean_intensity is not None:
            return self.mean_intensity * self.p
        if self.signal_strength is not None:
            return self.signal_strength
        return 25.0 * (1.0 + math.sqrt(self.gamma)) ** 2


class SpikedTruth(BaseModel):
    """Clean signal and population parameters of a spiked draw"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    signal: np.ndarray = Field(..., description="n×p clean means X")
    u: np.ndarray = Field(..., description="Mean vector")
    v: np.ndarray = Field(..., description="Unit spike direction")
    t: float = Field(..., description="Population spike eigenvalue")

    @property
    def mean(self) -> np.ndarray:
        return self.u

    def covariance(self) -> np.ndarray:
        """Σ_x = t·v vᵀ"""
        return self.t * np.outer(self.v, self.v)


class LowRankTruth(BaseModel):
    """Clean signal and closed-form moments of a low-rank draw"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    signal: np.ndarray = Field(..., description="n×p clean means X")
    basis: np.ndarray = Field(..., description="p×r basis, columns with unit L1 norm")
    strength: float = Field(..., description="Coefficient total A")
    mean: np.ndarray = Field(..., description="E[X]")
    coefficient_cov: np.ndarray = Field(..., description="r×r Cov[a]")

    def covariance(self) -> np.ndarray:
        """Σ_x = V Cov[a] Vᵀ"""
        return self.basis @ self.coefficient_cov @ self.basis.T


class TrialReport(BaseModel):
    """Per-trial metric values with across-trial mean and population std"""

    name: str = Field("", description="Experiment name")
    n_trials: int = Field(..., ge=1)
    base_seed: int = Field(..., ge=0)
    parameters: Dict[str, float] = Field(default_factory=dict, description="Experiment parameters")
    metrics: Dict[str, List[float]] = Field(..., description="Metric name → value per trial")
    means: Dict[str, float] = Field(default_factory=dict)
    stds: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_report(self):
        for metric, values in self.metrics.items():
            if len(values) != self.n_trials:
                raise ValueError(f"metric '{metric}' has {len(values)} values for {self.n_trials} trials")
            if not all(math.isfinite(x) for x in values):
                raise ValueError(f"metric '{metric}' has non-finite values")
        if not self.means:
            self.means.update({k: float(np.mean(v)) for k, v in self.metrics.items()})
        if not self.stds:
            self.stds.update({k: float(np.std(v)) for k, v in self.metrics.items()})
        return self

    @property
    def metric_names(self) -> List[str]:
        return list(self.metrics)

    def summary_rows(self) -> List[Tuple[str, float, float]]:
        """(metric, mean, std) rows in metric order"""
        return [(k, self.means[k], self.stds[k]) for k in self.metrics]
