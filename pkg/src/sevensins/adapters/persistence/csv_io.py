"""
CSV readers and writers for return series, covariance matrices and
backtest tables.

Returns file: header ``date,<asset1>,<asset2>,...``, ISO-8601 dates,
fractional returns. Covariance file: headerless n x n numeric grid.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ...core.covariance import ReturnSample
from ...core.domain.errors import DataFormatError, SevenSinsError
from ...core.linalg import SymmetricMatrix

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
DATE_COLUMN = "date"
# relative asymmetry tolerated from decimal round-off in exported files
SYMMETRY_TOLERANCE = 1e-12


def _read_frame(path: PathLike, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, skipinitialspace=True, **kwargs)
    except FileNotFoundError as e:
        raise DataFormatError(f"file not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"{path} is empty") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataFormatError(f"cannot parse {path}: {e}") from e


def _numeric(frame: pd.DataFrame, path: PathLike) -> np.ndarray:
    try:
        values = frame.apply(pd.to_numeric, errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise DataFormatError(f"non-numeric entry in {path}: {e}") from e
    if not np.all(np.isfinite(values)):
        rows = sorted({int(r) for r in np.argwhere(~np.isfinite(values))[:, 0]})
        raise DataFormatError(f"missing or non-finite values in {path}, rows {rows}")
    return values


def read_returns(path: PathLike) -> ReturnSample:
    """
    Read a returns CSV.

    Raises:
        DataFormatError: Missing date column, unparseable dates or numbers,
            ragged rows, or fewer than two periods
    """
    frame = _read_frame(path)
    if frame.shape[1] < 2 or str(frame.columns[0]).strip().lower() != DATE_COLUMN:
        raise DataFormatError(
            f"{path}: expected a header 'date,<asset1>,...', got {list(frame.columns)}"
        )
    try:
        dates = pd.to_datetime(frame.iloc[:, 0], format="ISO8601")
    except (ValueError, TypeError) as e:
        raise DataFormatError(f"{path}: unparseable date: {e}") from e

    values = _numeric(frame.iloc[:, 1:], path)
    assets = tuple(str(c).strip() for c in frame.columns[1:])
    labels = tuple(d.strftime("%Y-%m-%d") for d in dates)
    logger.debug("Read %d periods of %d assets from %s", *values.shape, path)
    try:
        return ReturnSample(values, assets=assets, dates=labels)
    except SevenSinsError as e:
        raise DataFormatError(f"{path}: {e}") from e


def read_covariance(path: PathLike) -> SymmetricMatrix:
    """
    Read a headerless square covariance grid.

    Entries that differ from their transpose by round-off are averaged;
    larger asymmetry is an error.
    """
    values = _numeric(_read_frame(path, header=None), path)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DataFormatError(f"{path}: covariance must be square, got {values.shape}")
    scale = max(float(np.max(np.abs(values))), 1.0)
    if np.max(np.abs(values - values.T)) > SYMMETRY_TOLERANCE * scale:
        raise DataFormatError(f"{path}: covariance matrix is not symmetric")
    logger.debug("Read %dx%d covariance from %s", *values.shape, path)
    return SymmetricMatrix(values, symmetrize=True)


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a table as CSV, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, float_format="%.10g")
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path
