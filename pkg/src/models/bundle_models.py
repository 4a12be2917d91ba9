"""Model bundle metadata and ingested genotype matrices"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .covariance_models import EstimatorKind

FORMAT_VERSION = 1


class BundleMetadata(BaseModel):
    """metadata.json record of a saved model bundle"""
    model_config = ConfigDict(extra="forbid")

    format_version: int = Field(FORMAT_VERSION, description="Bundle layout version")
    families: List[str] = Field(..., min_length=1, description="Family strings, shared or per column")
    rank: int = Field(..., ge=0)
    gamma: float = Field(..., gt=0.0)
    n_samples: int = Field(..., ge=2)
    n_features_total: int = Field(..., ge=1)
    epsilon: float = Field(0.1, ge=0.0, lt=1.0, description="Default ridge weight for denoising")
    dropped_columns: List[int] = Field(default_factory=list)
    seed: Optional[int] = Field(None, description="Seed the input was generated with, if known")
    estimator: EstimatorKind = Field(EstimatorKind.SCALED)

    @field_validator("format_version")
    @classmethod
    def validate_version(cls, v):
        if v != FORMAT_VERSION:
            raise ValueError(f"unsupported bundle format version {v}")
        return v

    @property
    def family(self) -> str:
        """Family string as typed on the command line"""
        return ",".join(self.families)


class GenotypeBatch(BaseModel):
    """Imputed and filtered genotype matrix of minor-allele counts"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(..., description="n×p' allele counts, NA replaced by column means")
    snp_ids: Optional[List[str]] = Field(None, description="Identifiers of the retained columns")
    dropped_columns: List[int] = Field(default_factory=list, description="Original indices of removed SNPs")
    imputed_count: int = Field(0, ge=0, description="Number of NA entries imputed")
    n_features_total: int = Field(..., ge=1)

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        array = np.array(v, dtype=float)
        if array.ndim != 2:
            raise ValueError("values must be a matrix")
        if not np.all(np.isfinite(array)):
            raise ValueError("values must be finite after imputation")
        array.setflags(write=False)
        return array

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]
