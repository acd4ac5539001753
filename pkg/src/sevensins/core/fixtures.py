"""
Bundled data sets used by the sins report, the CLI and the tests.
"""

from typing import List, Optional

import numpy as np
import pandas as pd

from .covariance import ReturnSample
from .linalg import SymmetricMatrix
from .models import MeanVarianceProblem

TWO_ASSET_COVARIANCE = ((0.2, 0.1), (0.1, 0.2))
INDEFINITE_COVARIANCE = ((1.0, 2.0), (2.0, 1.0))


def two_asset_covariance() -> SymmetricMatrix:
    """Two assets, variance 0.2 each, covariance 0.1."""
    return SymmetricMatrix(TWO_ASSET_COVARIANCE)


def _business_days(periods: int, start: str = "2020-01-01") -> tuple:
    return tuple(pd.bdate_range(start, periods=periods).strftime("%Y-%m-%d"))


def oscillating_correlation_returns(
    periods: int = 200, calm_periods: int = 30
) -> ReturnSample:
    """
    Three assets whose returns alternate in sign every period.

    A volatile stretch (amplitude 0.05, assets 1 and 2 moving together
    against asset 3) is followed by a calm stretch (amplitude 0.001) where
    the correlation between assets 1 and 2 flips. Short halflives on the
    variances and long ones on the covariances then disagree about which
    regime they describe.
    """
    signs = np.where(np.arange(periods) % 2 == 0, 1.0, -1.0)
    volatile = periods - calm_periods
    values = np.empty((periods, 3))
    values[:volatile] = 0.05 * signs[:volatile, None] * np.array([1.0, 1.0, -1.0])
    values[volatile:] = 0.001 * signs[volatile:, None] * np.array([1.0, -1.0, 1.0])
    return ReturnSample(values, ("A", "B", "C"), _business_days(periods))


def mismatched_halflives(
    n: int = 3, diagonal: float = 5.0, off_diagonal: float = 500.0
) -> np.ndarray:
    """Halflife matrix with one rate for variances and another for covariances."""
    halflives = np.full((n, n), off_diagonal)
    np.fill_diagonal(halflives, diagonal)
    return halflives


def noisy_two_asset_returns(periods: int = 300, seed: int = 7) -> ReturnSample:
    """Correlated Gaussian returns with small positive drift."""
    rng = np.random.default_rng(seed)
    drift = np.array([0.02, 0.01])
    volatility = np.array([0.05, 0.04])
    correlation = np.array([[1.0, 0.3], [0.3, 1.0]])
    covariance = correlation * np.outer(volatility, volatility)
    values = rng.multivariate_normal(drift, covariance, size=periods)
    return ReturnSample(values, ("X", "Y"), _business_days(periods))


def random_spd(n: int, rng: np.random.Generator, ridge: float = 0.1) -> SymmetricMatrix:
    """Random well-conditioned covariance B B^T / n + ridge * I."""
    B = rng.standard_normal((n, n))
    return SymmetricMatrix(B @ B.T / n + ridge * np.eye(n), symmetrize=True)


def random_problems(
    count: int,
    n: int,
    seed: int = 0,
    risk_budget: float = 1.0,
    fully_invested: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> List[MeanVarianceProblem]:
    """Random mean-variance instances with a standard normal mu."""
    rng = rng or np.random.default_rng(seed)
    problems = []
    for _ in range(count):
        Q = random_spd(n, rng)
        mu = rng.standard_normal(n)
        problems.append(
            MeanVarianceProblem(mu, Q, risk_budget, fully_invested=fully_invested)
        )
    return problems
