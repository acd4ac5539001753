"""
pytest configuration and shared fixtures for sevensins tests.
"""

from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pytest

from sevensins.core.fixtures import (
    INDEFINITE_COVARIANCE,
    TWO_ASSET_COVARIANCE,
    random_spd,
)
from sevensins.core.linalg import SymmetricMatrix


@pytest.fixture
def pair_q() -> SymmetricMatrix:
    """Two assets with variance 0.2 and covariance 0.1."""
    return SymmetricMatrix(TWO_ASSET_COVARIANCE)


@pytest.fixture
def indefinite_q() -> SymmetricMatrix:
    """Eigenvalues 3 and -1."""
    return SymmetricMatrix(INDEFINITE_COVARIANCE)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def spd_factory(rng) -> Callable[[int], SymmetricMatrix]:
    """Seeded generator of well-conditioned covariance matrices."""

    def make(n: int) -> SymmetricMatrix:
        return random_spd(n, rng)

    return make


@pytest.fixture
def write_returns_csv(tmp_path) -> Callable[..., Path]:
    """Write a returns CSV with a date column and return its path."""

    def write(
        values: np.ndarray,
        assets: Sequence[str] = ("A", "B"),
        name: str = "returns.csv",
        dates: Optional[Sequence[str]] = None,
    ) -> Path:
        values = np.asarray(values, dtype=float)
        if dates is None:
            dates = [
                str(np.datetime64("2021-01-01") + np.timedelta64(i, "D"))
                for i in range(values.shape[0])
            ]
        lines = ["date," + ",".join(assets)]
        for date, row in zip(dates, values):
            lines.append(date + "," + ",".join(repr(float(v)) for v in row))
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return write


@pytest.fixture
def write_covariance_csv(tmp_path) -> Callable[..., Path]:
    """Write a headerless covariance grid and return its path."""

    def write(matrix, name: str = "covariance.csv") -> Path:
        rows = np.asarray(matrix, dtype=float)
        text = "\n".join(",".join(repr(float(v)) for v in row) for row in rows)
        path = tmp_path / name
        path.write_text(text + "\n", encoding="utf-8")
        return path

    return write
