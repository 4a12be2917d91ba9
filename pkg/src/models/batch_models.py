"""Observation batches and sample-moment summaries"""

from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..families import ExponentialFamily


def _frozen_array(value, ndim: int, name: str) -> np.ndarray:
    array = np.array(value, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


class DataBatch(BaseModel):
    """
    n×p matrix of observations Y (rows are samples) with per-column families.

    ``families`` holds either one family shared by all columns or exactly
    one family per column.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(..., description="n×p observations, rows are samples")
    families: List[ExponentialFamily] = Field(..., min_length=1, description="Shared or per-column families")

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        array = _frozen_array(v, 2, "values")
        if not np.all(np.isfinite(array)):
            raise ValueError("values must be finite")
        return array

    @model_validator(mode="after")
    def validate_batch(self):
        n, p = self.values.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if len(self.families) not in (1, p):
            raise ValueError(f"got {len(self.families)} families for {p} columns")
        for family, columns in self.family_groups():
            if family.is_count and not np.all(family.validate_mean(self.values[:, columns])):
                raise ValueError(f"entries outside the domain of family '{family.spec}'")
        return self

    @classmethod
    def from_array(cls, values, family) -> "DataBatch":
        """Build a batch from an array and one family or a family per column"""
        families = list(family) if isinstance(family, (list, tuple)) else [family]
        return cls(values=values, families=families)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column_family(self, j: int) -> ExponentialFamily:
        return self.families[0] if len(self.families) == 1 else self.families[j]

    def family_groups(self) -> List[tuple]:
        """(family, column index array) pairs covering all columns"""
        if len(self.families) == 1:
            return [(self.families[0], np.arange(self.p))]
        groups = {}
        for j, family in enumerate(self.families):
            groups.setdefault(family, []).append(j)
        return [(family, np.asarray(cols)) for family, cols in groups.items()]

    def family_specs(self) -> List[str]:
        return [family.spec for family in self.families]

    def select_columns(self, columns: Sequence[int]) -> "DataBatch":
        """Batch restricted to the given columns"""
        idx = np.asarray(columns, dtype=int)
        families = self.families if len(self.families) == 1 else [self.families[j] for j in idx]
        return DataBatch(values=self.values[:, idx], families=list(families))


class MomentSummary(BaseModel):
    """Sample mean Ȳ, sample covariance S (divisor n), noise diagonal V(Ȳ) and γ = p/n"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray = Field(..., description="Sample mean Ȳ")
    sample_cov: np.ndarray = Field(..., description="Sample covariance S with divisor n")
    noise_diag: np.ndarray = Field(..., description="Diagonal of D_n = diag[V(Ȳ)]")
    n_samples: int = Field(..., ge=2, description="Number of samples n")
    kept_columns: Optional[np.ndarray] = Field(None, description="Original indices of the columns summarized")
    n_features_total: Optional[int] = Field(None, description="Column count before any dropping")

    @field_validator("mean", "noise_diag", "kept_columns", mode="before")
    @classmethod
    def validate_vectors(cls, v, info):
        if v is None:
            return v
        if info.field_name == "kept_columns":
            array = np.array(v, dtype=int)
            array.setflags(write=False)
            return array
        return _frozen_array(v, 1, info.field_name)

    @field_validator("sample_cov", mode="before")
    @classmethod
    def validate_cov(cls, v):
        return _frozen_array(v, 2, "sample_cov")

    @model_validator(mode="after")
    def validate_summary(self):
        p = self.mean.shape[0]
        if self.sample_cov.shape != (p, p) or self.noise_diag.shape != (p,):
            raise ValueError("mean, sample_cov and noise_diag dimensions disagree")
        if np.any(self.noise_diag < 0):
            raise ValueError("noise_diag entries must be nonnegative")
        if self.kept_columns is None:
            object.__setattr__(self, "kept_columns", np.arange(p))
            self.kept_columns.setflags(write=False)
        if self.n_features_total is None:
            object.__setattr__(self, "n_features_total", p)
        if self.kept_columns.shape != (p,):
            raise ValueError("kept_columns must index every summarized column")
        return self

    @property
    def p(self) -> int:
        return self.mean.shape[0]

    @property
    def gamma(self) -> float:
        """Aspect ratio γ = p/n"""
        return self.p / self.n_samples

    @property
    def dropped_columns(self) -> List[int]:
        """Original indices of columns removed from the summary"""
        keep = set(int(j) for j in self.kept_columns)
        return [j for j in range(self.n_features_total) if j not in keep]

    def restrict(self, columns: Sequence[int]) -> "MomentSummary":
        """Summary restricted to the given (current) column positions"""
        idx = np.asarray(columns, dtype=int)
        return MomentSummary(
            mean=self.mean[idx],
            sample_cov=self.sample_cov[np.ix_(idx, idx)],
            noise_diag=self.noise_diag[idx],
            n_samples=self.n_samples,
            kept_columns=self.kept_columns[idx],
            n_features_total=self.n_features_total,
        )
