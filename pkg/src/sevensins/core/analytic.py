"""
Closed-form mean-variance results.

Covers the analytic optimum x* = sigma Q^-1 mu / sqrt(mu^T Q^-1 mu), its
principal-portfolio decomposition, the "intermediate step" heuristic that
ignores correlations, the Sharpe ratio, and the minimum variance of a fully
invested portfolio.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from .domain.errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    ValidationError,
    ZeroMuError,
    ZeroPositionError,
)
from .linalg import ArrayLike, SymmetricMatrix, as_symmetric, eigh, solve_spd

logger = logging.getLogger(__name__)

Vector = Union[np.ndarray, Sequence[float]]


def _inputs(
    mu: Vector, Q: Union[SymmetricMatrix, ArrayLike]
) -> Tuple[np.ndarray, SymmetricMatrix]:
    Q = as_symmetric(Q)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.size != Q.n:
        raise DimensionMismatchError(f"mu has length {mu.size} but Q is {Q.n}x{Q.n}")
    return mu, Q


def _check_budget(risk_budget: float) -> float:
    if not np.isfinite(risk_budget) or risk_budget < 0.0:
        raise ValidationError(f"risk budget must be nonnegative, got {risk_budget}")
    return float(np.sqrt(risk_budget))


def _require_nonzero(mu: np.ndarray) -> None:
    if not np.any(mu):
        raise ZeroMuError("expected returns are all zero; the optimum is undefined")


@dataclass(frozen=True)
class SharpeParams:
    """Sharpe ratio parameters. Only a zero risk-free rate is supported."""

    r_f: float = 0.0

    def __post_init__(self) -> None:
        if self.r_f != 0.0:
            raise ValidationError("only a zero risk-free rate is supported")


@dataclass(frozen=True, eq=False)
class PrincipalTerm:
    """One principal portfolio and its weight (v^T mu) / lambda."""

    eigenvalue: float
    vector: np.ndarray
    coefficient: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigenvalue": self.eigenvalue,
            "vector": self.vector.tolist(),
            "coefficient": self.coefficient,
        }


@dataclass(frozen=True, eq=False)
class PrincipalDecomposition:
    """
    The analytic optimum written as a combination of principal portfolios.

    Terms are sorted by descending eigenvalue. Small eigenvalues carry large
    coefficients, which is where estimation error gets amplified.
    """

    terms: List[PrincipalTerm]
    scale: float

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([term.coefficient for term in self.terms])

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([term.eigenvalue for term in self.terms])

    def reconstruction(self) -> np.ndarray:
        """scale * sum coefficient_i * v_i."""
        total = np.zeros_like(self.terms[0].vector)
        for term in self.terms:
            total = total + term.coefficient * term.vector
        return self.scale * total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self.scale,
            "terms": [term.to_dict() for term in self.terms],
        }


@dataclass(frozen=True, eq=False)
class DirectSharpeResult:
    """Outcome of maximizing the Sharpe ratio as a nonconvex problem."""

    x: np.ndarray
    sharpe: float
    iterations: int
    converged: bool
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x.tolist(),
            "sharpe": self.sharpe,
            "iterations": self.iterations,
            "converged": self.converged,
            "message": self.message,
        }


def solve_unconstrained_mv(
    mu: Vector, Q: Union[SymmetricMatrix, ArrayLike], risk_budget: float
) -> np.ndarray:
    """
    Analytic optimum of max mu^T x s.t. x^T Q x <= risk_budget.

    The budget always binds, so x*^T Q x* equals the budget.

    Raises:
        NotPositiveDefiniteError: If Q cannot be factored
        ZeroMuError: If mu is the zero vector
    """
    mu, Q = _inputs(mu, Q)
    sigma = _check_budget(risk_budget)
    if sigma == 0.0:
        return np.zeros(Q.n)
    _require_nonzero(mu)
    direction = solve_spd(Q, mu)
    return sigma * direction / np.sqrt(mu @ direction)


def principal_decomposition(
    mu: Vector, Q: Union[SymmetricMatrix, ArrayLike], risk_budget: float
) -> PrincipalDecomposition:
    """Decompose the analytic optimum along the eigenvectors of Q."""
    mu, Q = _inputs(mu, Q)
    sigma = _check_budget(risk_budget)
    _require_nonzero(mu)
    decomposition = eigh(Q)
    if decomposition.min_eigenvalue <= 0.0:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue {decomposition.min_eigenvalue:.3e} is not positive"
        )
    projections = decomposition.eigenvectors.T @ mu
    eigenvalues = decomposition.eigenvalues
    terms = [
        PrincipalTerm(
            eigenvalue=float(eigenvalues[i]),
            vector=np.array(decomposition.eigenvectors[:, i]),
            coefficient=float(projections[i] / eigenvalues[i]),
        )
        for i in range(Q.n)
    ]
    # mu^T Q^-1 mu in the eigenbasis
    quadratic = float(np.sum(projections**2 / eigenvalues))
    return PrincipalDecomposition(terms=terms, scale=sigma / np.sqrt(quadratic))


def truncated_principal_solution(
    mu: Vector,
    Q: Union[SymmetricMatrix, ArrayLike],
    risk_budget: float,
    threshold: float,
) -> np.ndarray:
    """
    Analytic optimum keeping only principal portfolios with eigenvalue at
    least ``threshold``.

    The remaining terms are rescaled so the risk budget still binds. This is
    the "ignore small eigenvalues" repair applied directly to the solution.

    Raises:
        ZeroMuError: If no eigenvalue reaches the threshold or mu has no
            component on the kept eigenvectors
        NotPositiveDefiniteError: If a retained eigenvalue is not positive
    """
    mu, Q = _inputs(mu, Q)
    sigma = _check_budget(risk_budget)
    decomposition = eigh(Q)
    keep = decomposition.eigenvalues >= threshold
    if not np.any(keep):
        raise ZeroMuError(
            f"no eigenvalue reaches the truncation threshold {threshold:g}"
        )
    values = decomposition.eigenvalues[keep]
    if values[-1] <= 0.0:
        raise NotPositiveDefiniteError(
            f"retained eigenvalue {values[-1]:.3e} is not positive; raise the threshold"
        )
    vectors = decomposition.eigenvectors[:, keep]
    projections = vectors.T @ mu
    quadratic = float(np.sum(projections**2 / values))
    if quadratic == 0.0:
        raise ZeroMuError("mu has no component on the retained principal portfolios")
    if sigma == 0.0:
        return np.zeros(Q.n)
    logger.debug(
        "Truncated %d of %d principal portfolios below %.3e",
        int(np.sum(~keep)),
        Q.n,
        threshold,
    )
    return sigma * (vectors @ (projections / values)) / np.sqrt(quadratic)


def sinful_intermediate_step(
    mu: Vector, Q: Union[SymmetricMatrix, ArrayLike], risk_budget: float
) -> np.ndarray:
    """
    Heuristic y* = sigma mu / sqrt(mu^T Q mu).

    Takes the position along mu and scales it onto the risk ellipsoid. It
    ignores correlations and so gives up diversification whenever mu is not
    an eigenvector of Q.
    """
    mu, Q = _inputs(mu, Q)
    sigma = _check_budget(risk_budget)
    if sigma == 0.0:
        return np.zeros(Q.n)
    _require_nonzero(mu)
    curvature = Q.quadratic_form(mu)
    if curvature <= 0.0:
        raise NotPositiveDefiniteError("mu^T Q mu is not positive")
    return sigma * mu / np.sqrt(curvature)


def sharpe_ratio(
    x: Vector,
    mu: Vector,
    Q: Union[SymmetricMatrix, ArrayLike],
    params: Optional[SharpeParams] = None,
) -> float:
    """
    S(x) = (mu^T x - r_f) / sqrt(x^T Q x). Invariant under positive scaling of x.

    Raises:
        ZeroPositionError: If x is zero or has no positive variance
    """
    params = params or SharpeParams()
    mu, Q = _inputs(mu, Q)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != Q.n:
        raise DimensionMismatchError(f"x has length {x.size}, expected {Q.n}")
    if not np.any(x):
        raise ZeroPositionError("the Sharpe ratio is not defined for x = 0")
    variance = Q.quadratic_form(x)
    if variance <= 0.0:
        raise ZeroPositionError(f"position variance {variance:.3e} is not positive")
    return float((mu @ x - params.r_f) / np.sqrt(variance))


def solve_sharpe_max(
    mu: Vector, Q: Union[SymmetricMatrix, ArrayLike], risk_budget: float
) -> np.ndarray:
    """
    Maximize the Sharpe ratio through its convex reformulation.

    Every positive rescaling of a Sharpe maximizer is one too; fixing the
    scale by the risk budget turns the nonconvex ratio into the convex
    problem max mu^T x s.t. x^T Q x <= risk_budget, whose solution is the
    analytic optimum.
    """
    return solve_unconstrained_mv(mu, Q, risk_budget)


def maximize_sharpe_directly(
    mu: Vector,
    Q: Union[SymmetricMatrix, ArrayLike],
    start: Vector,
    max_iterations: int = 200,
) -> DirectSharpeResult:
    """
    Maximize S(x) by applying a general-purpose local optimizer to -S.

    This is the nonconvex route: the objective is undefined at x = 0, flat
    along rays and gives no control over the scale of the answer.

    Raises:
        ZeroPositionError: If the start point is zero
    """
    mu, Q = _inputs(mu, Q)
    start = np.asarray(start, dtype=float).reshape(-1)
    if not np.any(start):
        raise ZeroPositionError("cannot start the Sharpe maximization at x = 0")

    def negative_sharpe(x: np.ndarray) -> float:
        variance = float(x @ Q.entries @ x)
        if variance <= 0.0:
            return np.inf
        return -float(mu @ x) / np.sqrt(variance)

    result = optimize.minimize(
        negative_sharpe,
        start,
        method="BFGS",
        options={"maxiter": max_iterations},
    )
    x = np.asarray(result.x, dtype=float)
    sharpe = -float(result.fun) if np.isfinite(result.fun) else float("nan")
    logger.debug(
        "Direct Sharpe maximization: success=%s, nit=%d, S=%.6f",
        result.success,
        result.nit,
        sharpe,
    )
    return DirectSharpeResult(
        x=x,
        sharpe=sharpe,
        iterations=int(result.nit),
        converged=bool(result.success),
        message=str(result.message),
    )


def min_variance_fully_invested(
    Q: Union[SymmetricMatrix, ArrayLike]
) -> Tuple[np.ndarray, float]:
    """
    Minimum-variance fully invested portfolio.

    Returns:
        Tuple of x_mv = Q^-1 e / (e^T Q^-1 e) and its variance 1 / (e^T Q^-1 e)

    Raises:
        NotPositiveDefiniteError: If Q cannot be factored
    """
    Q = as_symmetric(Q)
    ones = np.ones(Q.n)
    direction = solve_spd(Q, ones)
    total = float(ones @ direction)
    return direction / total, 1.0 / total
