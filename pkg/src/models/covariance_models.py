"""Fitted covariance models, the Marchenko-Pastur law and denoiser configuration"""

import math
from enum import Enum
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class EstimatorKind(str, Enum):
    """Which covariance estimator a model carries"""
    SCALED = "scaled"                 # ePCA S_s
    HETEROGENIZED = "heterogenized"   # S_he
    DEBIASED = "debiased"             # rank-r truncation of S_d
    SAMPLE = "sample"                 # rank-r truncation of S


class CovarianceModel(BaseModel):
    """
    Low-rank covariance estimate in factored form.

    The estimate is Σ α̂_i λ̂_i û_i û_iᵀ over the k spikes that survived
    shrinkage (k ≤ rank). For the ePCA estimator λ̂_i, û_i are eigenpairs of
    S_he and α̂_i the scaling coefficients; baseline estimators carry α̂ = 1.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rank: int = Field(..., ge=0, description="Requested rank r")
    homogenized_spikes: np.ndarray = Field(..., description="ℓ̂_i of kept spikes")
    het_eigvecs: np.ndarray = Field(..., description="p×k orthonormal eigenvectors û_i")
    het_eigvals: np.ndarray = Field(..., description="λ̂_i = ‖v̂_i‖²")
    alphas: np.ndarray = Field(..., description="Scaling coefficients α̂_i")
    taus: np.ndarray = Field(..., description="τ_i = (tr D_n/p)·ℓ̂_i/λ̂_i")
    noise_diag: np.ndarray = Field(..., description="D_n diagonal")
    mean: np.ndarray = Field(..., description="Sample mean Ȳ")
    gamma: float = Field(..., gt=0, description="Aspect ratio p/n")
    n_samples: int = Field(..., ge=2)
    dropped_columns: List[int] = Field(default_factory=list)
    n_features_total: int = Field(..., ge=1)
    families: List[str] = Field(default_factory=list, description="Family strings, shared or per column")
    estimator: EstimatorKind = Field(EstimatorKind.SCALED)

    @field_validator(
        "homogenized_spikes", "het_eigvals", "alphas", "taus", "noise_diag", "mean",
        mode="before"
    )
    @classmethod
    def validate_vectors(cls, v, info):
        array = np.array(v, dtype=float).reshape(-1)
        array.setflags(write=False)
        return array

    @field_validator("het_eigvecs", mode="before")
    @classmethod
    def validate_eigvecs(cls, v):
        array = np.array(v, dtype=float)
        if array.ndim != 2:
            raise ValueError("het_eigvecs must be a p×k matrix")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def validate_model(self):
        p, k = self.het_eigvecs.shape
        if k > self.rank:
            raise ValueError(f"{k} spikes kept but rank is {self.rank}")
        for name in ("homogenized_spikes", "het_eigvals", "alphas", "taus"):
            if getattr(self, name).shape != (k,):
                raise ValueError(f"{name} must have one entry per kept spike")
        if self.noise_diag.shape != (p,) or self.mean.shape != (p,):
            raise ValueError("noise_diag and mean must match the eigenvector dimension")
        if np.any(self.alphas <= 0) or np.any(self.alphas > 1):
            raise ValueError("alphas must lie in (0, 1]")
        if k:
            gram = self.het_eigvecs.T @ self.het_eigvecs
            if np.max(np.abs(gram - np.eye(k))) > 1e-10:
                raise ValueError("het_eigvecs are not orthonormal")
        return self

    @property
    def p(self) -> int:
        return self.het_eigvecs.shape[0]

    @property
    def kept_count(self) -> int:
        return self.het_eigvecs.shape[1]

    @property
    def kept_columns(self) -> np.ndarray:
        """Original indices of the columns the model was fitted on"""
        return np.setdiff1d(np.arange(self.n_features_total), self.dropped_columns)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues α̂_i λ̂_i of the estimate"""
        return self.alphas * self.het_eigvals

    def covariance(self) -> np.ndarray:
        """Dense p×p estimate Σ α̂_i λ̂_i û_i û_iᵀ"""
        U = self.het_eigvecs
        return (U * self.eigenvalues) @ U.T

    def heterogenized_covariance(self) -> np.ndarray:
        """Dense S_he = Σ λ̂_i û_i û_iᵀ, i.e. the estimate before scaling"""
        U = self.het_eigvecs
        return (U * self.het_eigvals) @ U.T


class MpDistribution(BaseModel):
    """Standard Marchenko-Pastur law with aspect ratio γ"""
    model_config = ConfigDict(frozen=True)

    gamma: float = Field(..., gt=0, description="Aspect ratio p/n")

    @property
    def support_lo(self) -> float:
        return (1.0 - math.sqrt(self.gamma)) ** 2

    @property
    def support_hi(self) -> float:
        return (1.0 + math.sqrt(self.gamma)) ** 2

    @property
    def atom_at_zero(self) -> float:
        """Point mass 1 − 1/γ at zero when γ > 1"""
        return 1.0 - 1.0 / self.gamma if self.gamma > 1 else 0.0


class DenoiseMethod(str, Enum):
    """Denoising methods"""
    EBLP = "eblp"
    PROJECTION = "projection"


class Denoiser(BaseModel):
    """BLP denoiser configuration built from a covariance model"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    model: CovarianceModel
    epsilon: float = Field(0.1, ge=0.0, lt=1.0, description="Ridge weight ε")
    method: DenoiseMethod = Field(DenoiseMethod.EBLP)
