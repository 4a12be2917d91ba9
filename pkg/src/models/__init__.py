"""Data models for batches, covariance estimates, simulations and bundles"""

from .batch_models import DataBatch, MomentSummary
from .covariance_models import (
    CovarianceModel, EstimatorKind, MpDistribution, DenoiseMethod, Denoiser
)
from .simulation_models import (
    SpikedPoissonConfig, LowRankConfig, SpikedTruth, LowRankTruth, TrialReport
)
from .bundle_models import FORMAT_VERSION, BundleMetadata, GenotypeBatch

__all__ = [
    "DataBatch", "MomentSummary",
    "CovarianceModel", "EstimatorKind", "MpDistribution", "DenoiseMethod", "Denoiser",
    "SpikedPoissonConfig", "LowRankConfig", "SpikedTruth", "LowRankTruth", "TrialReport",
    "FORMAT_VERSION", "BundleMetadata", "GenotypeBatch",
]
