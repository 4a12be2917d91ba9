"""Save and load fitted covariance models as bundle directories"""

import json
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ..core.exceptions import DataParseError
from ..core.logging import get_logger
from ..core.settings import get_settings
from ..models.bundle_models import BundleMetadata
from ..models.covariance_models import CovarianceModel
from .matrix_storage import read_matrix, read_table, read_vector, write_matrix, write_table

logger = get_logger(__name__)

EIGENVECTORS_FILE = "eigenvectors.epm"
SPECTRUM_FILE = "spectrum.csv"
MEAN_FILE = "mean.epm"
NOISE_FILE = "noise_diag.epm"
METADATA_FILE = "metadata.json"
SPECTRUM_COLUMNS = ["index", "het_eigval", "alpha", "ell_hat", "tau"]


def spectrum_table(model: CovarianceModel) -> np.ndarray:
    """Rows (index, λ̂, α̂, ℓ̂, τ) for every kept spike"""
    k = model.kept_count
    return np.column_stack([
        np.arange(k, dtype=float), model.het_eigvals, model.alphas,
        model.homogenized_spikes, model.taus,
    ]) if k else np.empty((0, len(SPECTRUM_COLUMNS)))


def save_model(
    model: CovarianceModel,
    directory: Union[str, Path],
    epsilon: Optional[float] = None,
    seed: Optional[int] = None
) -> BundleMetadata:
    """Write the bundle files into ``directory``, creating it if needed"""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)

    metadata = BundleMetadata(
        families=model.families or ["unknown"],
        rank=model.rank,
        gamma=model.gamma,
        n_samples=model.n_samples,
        n_features_total=model.n_features_total,
        epsilon=get_settings().default_epsilon if epsilon is None else epsilon,
        dropped_columns=list(model.dropped_columns),
        seed=seed,
        estimator=model.estimator,
    )

    write_matrix(out / EIGENVECTORS_FILE, model.het_eigvecs)
    write_matrix(out / MEAN_FILE, model.mean)
    write_matrix(out / NOISE_FILE, model.noise_diag)
    write_table(
        out / SPECTRUM_FILE,
        spectrum_table(model),
        header=SPECTRUM_COLUMNS,
        comments=[f"rank={model.rank} kept={model.kept_count} gamma={model.gamma!r}"],
    )
    (out / METADATA_FILE).write_text(metadata.model_dump_json(indent=2) + "\n")

    logger.info(f"Saved model bundle to {out}", extra={"rank": model.rank, "kept": model.kept_count})
    return metadata


def load_metadata(directory: Union[str, Path]) -> BundleMetadata:
    """
    Read metadata.json.

    Raises:
        FileNotFoundError: missing bundle file
        DataParseError: malformed metadata
    """
    path = Path(directory) / METADATA_FILE
    text = path.read_text()
    try:
        return BundleMetadata.model_validate(json.loads(text))
    except (json.JSONDecodeError, ValidationError) as e:
        raise DataParseError(str(path), f"invalid bundle metadata: {e}")


def load_model(directory: Union[str, Path]) -> Tuple[CovarianceModel, BundleMetadata]:
    """
    Reload a bundle written by ``save_model``.

    Raises:
        FileNotFoundError: missing bundle file
        DataParseError: malformed or inconsistent bundle
    """
    src = Path(directory)
    metadata = load_metadata(src)
    eigvecs = read_matrix(src / EIGENVECTORS_FILE)
    mean = read_vector(src / MEAN_FILE)
    noise = read_vector(src / NOISE_FILE)
    header, spectrum = read_table(src / SPECTRUM_FILE)
    if header != SPECTRUM_COLUMNS:
        raise DataParseError(str(src / SPECTRUM_FILE), f"expected columns {SPECTRUM_COLUMNS}, got {header}")
    if spectrum.shape[0] != eigvecs.shape[1]:
        raise DataParseError(
            str(src / SPECTRUM_FILE),
            f"{spectrum.shape[0]} spectrum rows for {eigvecs.shape[1]} eigenvectors"
        )

    try:
        model = CovarianceModel(
            rank=metadata.rank,
            homogenized_spikes=spectrum[:, 3],
            het_eigvecs=eigvecs,
            het_eigvals=spectrum[:, 1],
            alphas=spectrum[:, 2],
            taus=spectrum[:, 4],
            noise_diag=noise,
            mean=mean,
            gamma=metadata.gamma,
            n_samples=metadata.n_samples,
            dropped_columns=metadata.dropped_columns,
            n_features_total=metadata.n_features_total,
            families=metadata.families,
            estimator=metadata.estimator,
        )
    except ValidationError as e:
        raise DataParseError(str(src), f"inconsistent bundle: {e}")
    return model, metadata
