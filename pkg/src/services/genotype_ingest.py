"""Genotype ingestion: NA parsing, mean imputation and invariant-SNP filtering"""

from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from ..core.exceptions import DataError, DataParseError
from ..core.logging import get_logger, log_performance
from ..core.settings import get_settings
from ..models.bundle_models import GenotypeBatch
from .matrix_storage import iter_csv_rows

logger = get_logger(__name__)

NA_TOKENS = frozenset({"NA", "", "-1"})
ALLELE_COUNTS = (0.0, 1.0, 2.0)


def _parse_cell(cell: str) -> Optional[float]:
    token = cell.strip()
    if token in NA_TOKENS:
        return None
    value = float(token)
    if value not in ALLELE_COUNTS:
        raise ValueError(token)
    return value


def read_genotype_matrix(path: Union[str, Path]) -> tuple:
    """
    Parse a genotype CSV into a float matrix with NaN for missing entries.

    The first row is taken as SNP ids when some cell is neither an allele
    count nor an NA token.

    Returns:
        (values with NaN, snp_ids or None)

    Raises:
        DataParseError: ragged rows or entries outside {0, 1, 2, NA}
    """
    rows = list(iter_csv_rows(path))
    snp_ids = None
    if rows:
        first = rows[0][1]
        try:
            for cell in first:
                _parse_cell(cell)
        except ValueError:
            snp_ids = [c.strip() for c in first]
            rows = rows[1:]
    if not rows:
        raise DataParseError(str(path), "no genotype rows")

    width = len(snp_ids) if snp_ids is not None else len(rows[0][1])
    values = np.empty((len(rows), width))
    for i, (lineno, cells) in enumerate(rows):
        if len(cells) != width:
            raise DataParseError(str(path), f"ragged row: {len(cells)} cells, expected {width}", line=lineno)
        for j, cell in enumerate(cells):
            try:
                parsed = _parse_cell(cell)
            except ValueError:
                raise DataParseError(
                    str(path), f"genotype '{cell.strip()}' in column {j} is not 0, 1, 2 or NA", line=lineno
                )
            values[i, j] = np.nan if parsed is None else parsed
    return values, snp_ids


def clean_genotypes(
    raw: np.ndarray,
    snp_ids: Optional[Sequence[str]] = None,
    drop_threshold: Optional[float] = None
) -> GenotypeBatch:
    """
    Mean-impute missing genotypes and remove SNPs without variability.

    A column is removed when its variance after imputation is ≤ δ, which
    covers allele frequencies p̂ ∈ {0, 1}.

    Raises:
        DataError: a column has no observed entries
    """
    delta = get_settings().drop_threshold if drop_threshold is None else drop_threshold
    values = np.array(raw, dtype=float, copy=True)
    missing = np.isnan(values)
    observed = (~missing).sum(axis=0)
    empty = np.flatnonzero(observed == 0)
    if empty.size:
        j = int(empty[0])
        label = f"{j} ({snp_ids[j]})" if snp_ids is not None else str(j)
        raise DataError(f"Genotype column {label} has no observed entries")

    means = np.nansum(values, axis=0) / observed
    rows, cols = np.nonzero(missing)
    values[rows, cols] = means[cols]

    p_hat = values.mean(axis=0) / 2.0
    invariant = (values.var(axis=0) <= delta) | (p_hat <= 0.0) | (p_hat >= 1.0)
    dropped: List[int] = [int(j) for j in np.flatnonzero(invariant)]
    keep = np.flatnonzero(~invariant)
    if keep.size == 0:
        raise DataError("Every genotype column is invariant")

    logger.info(
        f"Imputed {int(missing.sum())} genotypes and dropped {len(dropped)} invariant SNPs",
        extra={"n": values.shape[0], "p": values.shape[1], "retained": int(keep.size)}
    )
    return GenotypeBatch(
        values=values[:, keep],
        snp_ids=[snp_ids[j] for j in keep] if snp_ids is not None else None,
        dropped_columns=dropped,
        imputed_count=int(missing.sum()),
        n_features_total=values.shape[1],
    )


@log_performance("ingest_genotypes")
def ingest_genotypes(path: Union[str, Path], drop_threshold: Optional[float] = None) -> GenotypeBatch:
    """Read, impute and filter a genotype CSV"""
    raw, snp_ids = read_genotype_matrix(path)
    return clean_genotypes(raw, snp_ids, drop_threshold)
