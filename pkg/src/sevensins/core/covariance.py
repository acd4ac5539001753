"""
Covariance estimation, diagnosis and repair.

Two estimators live here: the ordinary sample covariance and a per-entry
exponentially weighted estimator where every entry has its own halflife.
The latter carries no positive-semidefiniteness guarantee and is kept to
reproduce the negative-variance exploit.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg as sla

from .domain.errors import (
    DimensionMismatchError,
    InsufficientDataError,
    KappaOutOfRangeError,
    NonFiniteError,
    NotIndefiniteError,
    ValidationError,
)
from .linalg import ArrayLike, SymmetricMatrix, as_symmetric, eigh

logger = logging.getLogger(__name__)

DEFAULT_NEAR_SINGULAR_THRESHOLD = 1e6


@dataclass(frozen=True, eq=False)
class ReturnSample:
    """
    T x n matrix of per-period fractional returns.

    Attributes:
        values: Returns, one row per period and one column per asset
        assets: Optional asset names, one per column
        dates: Optional period labels, one per row
    """

    values: np.ndarray
    assets: Optional[Tuple[str, ...]] = None
    dates: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise DimensionMismatchError(
                f"return sample must be two-dimensional, got shape {values.shape}"
            )
        if values.shape[0] < 2:
            raise InsufficientDataError(
                f"need at least 2 periods of returns, got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("return sample contains NaN or infinite values")
        if self.assets is not None and len(self.assets) != values.shape[1]:
            raise DimensionMismatchError("asset names do not match the columns")
        if self.dates is not None and len(self.dates) != values.shape[0]:
            raise DimensionMismatchError("period labels do not match the rows")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def periods(self) -> int:
        return self.values.shape[0]

    @property
    def n_assets(self) -> int:
        return self.values.shape[1]

    def window(self, start: int, stop: int) -> "ReturnSample":
        """Rows [start, stop) as a new sample."""
        dates = None if self.dates is None else self.dates[start:stop]
        return ReturnSample(self.values[start:stop], self.assets, dates)


class CovarianceVerdict(str, Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    INDEFINITE = "Indefinite"
    NEAR_SINGULAR = "NearSingular"


@dataclass(frozen=True, eq=False)
class CovarianceDiagnosis:
    """
    Spectral summary of a covariance matrix.

    ``condition_number`` is +inf whenever the smallest eigenvalue is not
    positive. ``offending_eigenvector`` is set only for Indefinite matrices.
    """

    min_eigenvalue: float
    max_eigenvalue: float
    condition_number: float
    verdict: CovarianceVerdict
    offending_eigenvector: Optional[np.ndarray] = None

    @property
    def is_clean(self) -> bool:
        return self.verdict is CovarianceVerdict.POSITIVE_DEFINITE

    def to_dict(self) -> Dict[str, Any]:
        vector = self.offending_eigenvector
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "condition_number": self.condition_number,
            "verdict": self.verdict.value,
            "offending_eigenvector": None if vector is None else vector.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ExploitReport:
    """
    A position that an indefinite covariance estimate rates as having
    negative variance.
    """

    position: np.ndarray
    claimed_variance: float
    expected_return: float
    scale: float
    risk_budget: float

    @property
    def within_budget(self) -> bool:
        return self.claimed_variance <= self.risk_budget

    def to_dict(self) -> Dict[str, Any]:
        return {
            "position": self.position.tolist(),
            "claimed_variance": self.claimed_variance,
            "expected_return": self.expected_return,
            "scale": self.scale,
            "risk_budget": self.risk_budget,
            "within_budget": self.within_budget,
        }


@dataclass(frozen=True, eq=False)
class ConstrainedExploitReport:
    """Fully invested position pushed along a negative-curvature direction."""

    position: np.ndarray
    claimed_variance: float
    expected_return: float
    scale: float
    direction_eigenvalue: float

    @property
    def budget_sum(self) -> float:
        return float(np.sum(self.position))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "position": self.position.tolist(),
            "claimed_variance": self.claimed_variance,
            "expected_return": self.expected_return,
            "scale": self.scale,
            "direction_eigenvalue": self.direction_eigenvalue,
            "budget_sum": self.budget_sum,
        }


def estimate_sample_covariance(samples: ReturnSample) -> SymmetricMatrix:
    """
    Sample covariance with divisor T - 1 after subtracting per-asset means.

    Raises:
        InsufficientDataError: If fewer than two periods are available
    """
    if samples.periods < 2:
        raise InsufficientDataError("sample covariance needs at least 2 periods")
    centered = samples.values - samples.values.mean(axis=0)
    covariance = centered.T @ centered / (samples.periods - 1)
    return SymmetricMatrix(covariance, symmetrize=True)


def ewma_weights(periods: int, halflife: float) -> np.ndarray:
    """
    Normalized weights 2^(-k / halflife), oldest period first.

    Lag k = 0 is the most recent period.
    """
    lags = np.arange(periods - 1, -1, -1, dtype=float)
    weights = np.exp2(-lags / halflife)
    return weights / weights.sum()


def estimate_per_entry_ewma(
    samples: ReturnSample, halflives: Union[float, ArrayLike]
) -> SymmetricMatrix:
    """
    Exponentially weighted covariance where entry (i, j) uses halflife h_ij.

    Each entry is the weighted co-moment of assets i and j around their
    weighted means under its own weights. With all halflives equal this is
    an ordinary EWMA covariance; with mismatched halflives the result need
    not be positive semidefinite.

    Args:
        samples: Return sample
        halflives: Scalar or symmetric n x n matrix of positive halflives

    Raises:
        InsufficientDataError: If fewer than two periods are available
        ValidationError: If halflives are not symmetric and positive
    """
    if samples.periods < 2:
        raise InsufficientDataError("EWMA covariance needs at least 2 periods")
    n = samples.n_assets
    h = np.array(halflives, dtype=float)
    if h.ndim == 0:
        h = np.full((n, n), float(h))
    if h.shape != (n, n):
        raise DimensionMismatchError(
            f"halflives must be {n}x{n}, got shape {h.shape}"
        )
    if not np.array_equal(h, h.T) or not np.all(h > 0.0):
        raise ValidationError("halflives must be symmetric and positive")

    R = samples.values
    covariance = np.empty((n, n))
    weight_cache: Dict[float, np.ndarray] = {}
    for i in range(n):
        for j in range(i, n):
            halflife = float(h[i, j])
            weights = weight_cache.get(halflife)
            if weights is None:
                weights = ewma_weights(samples.periods, halflife)
                weight_cache[halflife] = weights
            dev_i = R[:, i] - weights @ R[:, i]
            dev_j = R[:, j] - weights @ R[:, j]
            covariance[i, j] = covariance[j, i] = float(weights @ (dev_i * dev_j))
    return SymmetricMatrix(covariance, symmetrize=True)


def diagnose(
    Q: Union[SymmetricMatrix, ArrayLike],
    near_singular_threshold: float = DEFAULT_NEAR_SINGULAR_THRESHOLD,
) -> CovarianceDiagnosis:
    """
    Classify a covariance matrix as PositiveDefinite, Indefinite or NearSingular.

    A single negative eigenvalue makes the matrix Indefinite, however small.
    A nonnegative spectrum whose condition number exceeds the threshold is
    NearSingular.
    """
    decomposition = eigh(as_symmetric(Q))
    smallest = decomposition.min_eigenvalue
    largest = decomposition.max_eigenvalue
    condition = largest / smallest if smallest > 0.0 else float("inf")

    offending = None
    if smallest < 0.0:
        verdict = CovarianceVerdict.INDEFINITE
        offending = np.array(decomposition.eigenvectors[:, -1])
    elif condition > near_singular_threshold:
        verdict = CovarianceVerdict.NEAR_SINGULAR
    else:
        verdict = CovarianceVerdict.POSITIVE_DEFINITE

    logger.debug(
        "Covariance diagnosis: min=%.3e max=%.3e cond=%.3e verdict=%s",
        smallest,
        largest,
        condition,
        verdict.value,
    )
    return CovarianceDiagnosis(
        min_eigenvalue=smallest,
        max_eigenvalue=largest,
        condition_number=condition,
        verdict=verdict,
        offending_eigenvector=offending,
    )


def demonstrate_exploit(
    Q: Union[SymmetricMatrix, ArrayLike],
    mu: Sequence[float],
    risk_budget: float,
    tau: float,
) -> ExploitReport:
    """
    Build x = sign(mu^T v) * tau * v along the most negative eigenvector v.

    The expected return tau * |mu^T v| grows linearly in tau while the claimed
    variance tau^2 * lambda stays negative, hence below any risk budget.

    Raises:
        NotIndefiniteError: If Q has no negative eigenvalue
    """
    if tau <= 0.0:
        raise ValidationError(f"scale tau must be positive, got {tau}")
    Q = as_symmetric(Q)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (Q.n,):
        raise DimensionMismatchError(f"mu has shape {mu.shape}, expected ({Q.n},)")

    diagnosis = diagnose(Q)
    if diagnosis.offending_eigenvector is None:
        raise NotIndefiniteError(
            f"smallest eigenvalue {diagnosis.min_eigenvalue:.3e} is not negative"
        )
    v = diagnosis.offending_eigenvector
    alignment = float(mu @ v)
    sign = 1.0 if alignment > 0.0 else -1.0
    x = sign * tau * v
    return ExploitReport(
        position=x,
        claimed_variance=Q.quadratic_form(x),
        expected_return=tau * abs(alignment),
        scale=tau,
        risk_budget=risk_budget,
    )


def demonstrate_fully_invested_exploit(
    Q: Union[SymmetricMatrix, ArrayLike],
    mu: Sequence[float],
    tau: float,
) -> ConstrainedExploitReport:
    """
    Show that the budget constraint e^T x = 1 does not cure an indefinite Q.

    Q is restricted to the hyperplane {w : e^T w = 0}; a negative eigenvalue of
    the restriction gives a direction w that keeps the portfolio fully
    invested while its claimed variance falls without bound.

    Raises:
        NotIndefiniteError: If the restriction has no negative eigenvalue
    """
    if tau <= 0.0:
        raise ValidationError(f"scale tau must be positive, got {tau}")
    Q = as_symmetric(Q)
    mu = np.asarray(mu, dtype=float)
    n = Q.n
    if mu.shape != (n,):
        raise DimensionMismatchError(f"mu has shape {mu.shape}, expected ({n},)")
    if n < 2:
        raise NotIndefiniteError("a single asset leaves no room to trade")

    basis = sla.null_space(np.ones((1, n)))
    restricted = eigh(SymmetricMatrix(basis.T @ Q.entries @ basis, symmetrize=True))
    if restricted.min_eigenvalue >= 0.0:
        raise NotIndefiniteError(
            "covariance is positive semidefinite on fully invested portfolios"
        )
    w = basis @ restricted.eigenvectors[:, -1]
    if mu @ w < 0.0:
        w = -w
    x = np.full(n, 1.0 / n) + tau * w
    return ConstrainedExploitReport(
        position=x,
        claimed_variance=Q.quadratic_form(x),
        expected_return=float(mu @ x),
        scale=tau,
        direction_eigenvalue=restricted.min_eigenvalue,
    )


def shrink(Q: Union[SymmetricMatrix, ArrayLike], kappa: float) -> SymmetricMatrix:
    """
    Shrink towards the identity: kappa * Q + (1 - kappa) * I.

    Eigenvectors are unchanged and every eigenvalue maps to
    (1 - kappa) + kappa * lambda.

    Raises:
        KappaOutOfRangeError: If kappa is outside [0, 1]
    """
    if not 0.0 <= kappa <= 1.0:
        raise KappaOutOfRangeError(f"kappa must lie in [0, 1], got {kappa}")
    Q = as_symmetric(Q)
    return SymmetricMatrix(kappa * Q.entries + (1.0 - kappa) * np.eye(Q.n))


def clip_eigenvalues(
    Q: Union[SymmetricMatrix, ArrayLike], floor: float
) -> SymmetricMatrix:
    """
    Raise every eigenvalue below ``floor`` to ``floor``.

    A matrix whose spectrum already sits at or above the floor is returned
    as is.
    """
    if floor < 0.0:
        raise ValidationError(f"eigenvalue floor must be nonnegative, got {floor}")
    Q = as_symmetric(Q)
    decomposition = eigh(Q)
    if decomposition.min_eigenvalue >= floor:
        return Q
    clipped = np.maximum(decomposition.eigenvalues, floor)
    logger.debug(
        "Clipped %d eigenvalue(s) up to %.3e",
        int(np.sum(decomposition.eigenvalues < floor)),
        floor,
    )
    return SymmetricMatrix(decomposition.reconstruct(clipped), symmetrize=True)
