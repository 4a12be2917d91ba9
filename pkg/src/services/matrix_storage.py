"""
Matrix file I/O.

Two formats: CSV (``#`` comment lines, optional single header row) and the
epm1 binary layout: magic ``EPM1``, rows and cols as little-endian u64, then
rows×cols little-endian binary64 values in row-major order.
"""

import csv
import io
import struct
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from ..core.exceptions import DataParseError
from ..core.logging import get_logger

logger = get_logger(__name__)

EPM1_MAGIC = b"EPM1"
EPM1_HEADER = struct.Struct("<4sQQ")
EPM1_SUFFIXES = {".epm", ".epm1", ".bin"}

PathLike = Union[str, Path]


class MatrixFormat(str, Enum):
    """On-disk matrix formats"""
    CSV = "csv"
    EPM1 = "epm1"


class MatrixFile(BaseModel):
    """A matrix file on disk"""
    path: str
    format: MatrixFormat
    rows: int = Field(..., ge=0)
    cols: int = Field(..., ge=0)


def sniff_format(path: PathLike) -> MatrixFormat:
    """epm1 when the file starts with the magic bytes, else CSV"""
    with open(path, "rb") as fh:
        head = fh.read(len(EPM1_MAGIC))
    return MatrixFormat.EPM1 if head == EPM1_MAGIC else MatrixFormat.CSV


def format_for_path(path: PathLike) -> MatrixFormat:
    """Output format implied by a file suffix"""
    return MatrixFormat.EPM1 if Path(path).suffix.lower() in EPM1_SUFFIXES else MatrixFormat.CSV


# ----------------------------------------------------------------------------
# epm1
# ----------------------------------------------------------------------------

def _read_epm1(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < EPM1_HEADER.size:
        raise DataParseError(str(path), "truncated epm1 header", offset=len(data))
    magic, rows, cols = EPM1_HEADER.unpack_from(data)
    if magic != EPM1_MAGIC:
        raise DataParseError(str(path), "bad magic bytes", offset=0)
    expected = EPM1_HEADER.size + 8 * rows * cols
    if len(data) < expected:
        raise DataParseError(
            str(path), f"truncated payload: expected {rows}x{cols} values", offset=len(data)
        )
    if len(data) > expected:
        raise DataParseError(str(path), "trailing bytes after payload", offset=expected)
    values = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=EPM1_HEADER.size)
    return values.reshape(rows, cols).astype(float)


def _write_epm1(path: PathLike, values: np.ndarray):
    rows, cols = values.shape
    with open(path, "wb") as fh:
        fh.write(EPM1_HEADER.pack(EPM1_MAGIC, rows, cols))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


# ----------------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------------

def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def iter_csv_rows(path: PathLike):
    """(line number, cells) for every non-comment, non-blank line"""
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, next(csv.reader([stripped]))


def read_csv_cells(path: PathLike) -> Tuple[Optional[List[str]], List[Tuple[int, List[str]]]]:
    """
    Raw CSV cells with header auto-detection.

    The first row is a header when any of its cells is not numeric.

    Returns:
        (header or None, [(line number, cells), ...])
    """
    rows = list(iter_csv_rows(path))
    header = None
    if rows and not all(_is_number(c.strip()) for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    width = len(header) if header is not None else (len(rows[0][1]) if rows else 0)
    for lineno, cells in rows:
        if len(cells) != width:
            raise DataParseError(str(path), f"ragged row: {len(cells)} cells, expected {width}", line=lineno)
    return header, rows


def read_table(path: PathLike) -> Tuple[Optional[List[str]], np.ndarray]:
    """
    Read a numeric CSV table.

    Raises:
        DataParseError: ragged rows or non-numeric / non-finite cells
    """
    header, rows = read_csv_cells(path)
    width = len(header) if header is not None else (len(rows[0][1]) if rows else 0)
    values = np.empty((len(rows), width))
    for i, (lineno, cells) in enumerate(rows):
        for j, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError:
                raise DataParseError(str(path), f"non-numeric cell '{cell.strip()}' in column {j}", line=lineno)
            if not np.isfinite(value):
                raise DataParseError(str(path), f"non-finite cell '{cell.strip()}' in column {j}", line=lineno)
            values[i, j] = value
    return header, values


def format_table(
    values: np.ndarray,
    header: Optional[Sequence[str]] = None,
    comments: Optional[Sequence[str]] = None
) -> str:
    """CSV text with ``#`` comment lines, an optional header and %.17g values"""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    buffer = io.StringIO()
    for comment in comments or []:
        buffer.write(f"# {comment}\n")
    if header is not None:
        buffer.write(",".join(header) + "\n")
    if values.size:
        np.savetxt(buffer, values, fmt="%.17g", delimiter=",")
    return buffer.getvalue()


def write_table(
    path: PathLike,
    values: np.ndarray,
    header: Optional[Sequence[str]] = None,
    comments: Optional[Sequence[str]] = None
):
    """Write ``format_table`` output to a file"""
    with open(path, "w", newline="") as fh:
        fh.write(format_table(values, header, comments))


# ----------------------------------------------------------------------------
# Public API
# ----------------------------------------------------------------------------

def read_matrix(path: PathLike) -> np.ndarray:
    """
    Read a matrix, sniffing epm1 by its magic bytes and falling back to CSV.

    Raises:
        FileNotFoundError: path does not exist
        DataParseError: malformed file, with line (CSV) or byte offset (epm1)
    """
    if sniff_format(path) == MatrixFormat.EPM1:
        values = _read_epm1(path)
    else:
        _, values = read_table(path)
        if values.shape[0] == 0:
            raise DataParseError(str(path), "no data rows")
    logger.debug(f"Read {values.shape[0]}x{values.shape[1]} matrix", extra={"path": str(path)})
    return values


def write_matrix(
    path: PathLike,
    values: np.ndarray,
    fmt: Optional[MatrixFormat] = None,
    header: Optional[Sequence[str]] = None,
    comments: Optional[Sequence[str]] = None
) -> MatrixFile:
    """Write a matrix as epm1 or CSV (format chosen from the suffix when not given)"""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(1, -1)
    fmt = format_for_path(path) if fmt is None else MatrixFormat(fmt)
    if fmt == MatrixFormat.EPM1:
        _write_epm1(path, values)
    else:
        write_table(path, values, header=header, comments=comments)
    return MatrixFile(path=str(path), format=fmt, rows=values.shape[0], cols=values.shape[1])


def read_vector(path: PathLike) -> np.ndarray:
    """Read a 1×p or p×1 matrix file as a vector"""
    values = read_matrix(path)
    if min(values.shape) > 1:
        raise DataParseError(str(path), f"expected a vector, got shape {values.shape}")
    return values.reshape(-1)
