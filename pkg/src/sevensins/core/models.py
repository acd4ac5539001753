"""
Problem data model and the lifting of the transaction-cost model.

A MeanVarianceProblem is what users state: maximize mu^T x subject to
x^T Q x <= risk_budget plus optional budget, long-only and L1 cost terms.
``lift`` turns it into a ConicProblem with a linear objective, one
ellipsoidal constraint and linear rows, which is what the solvers consume.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .domain.errors import (
    CostsMissingError,
    DimensionMismatchError,
    NonFiniteError,
    NotPositiveDefiniteError,
    ValidationError,
)
from .domain.results import Finding, FindingKind
from .linalg import SymmetricMatrix, as_symmetric, cholesky

logger = logging.getLogger(__name__)


def _vector(values: Sequence[float], name: str) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"{name} contains NaN or infinite values")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TransactionCosts:
    """
    Linear cost block: p_i per unit of change in position i away from x0_i.
    """

    p: np.ndarray
    x0: np.ndarray

    def __post_init__(self) -> None:
        p = _vector(self.p, "cost rates p")
        x0 = _vector(self.x0, "incumbent position x0")
        if p.shape != x0.shape:
            raise DimensionMismatchError(
                f"cost rates have length {p.size}, incumbent has {x0.size}"
            )
        if not np.all(p > 0.0):
            raise ValidationError(
                "cost rates must be strictly positive; omit the cost block instead"
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True, eq=False)
class MeanVarianceProblem:
    """
    Mean-variance model: maximize mu^T x - sum p_i |x_i - x0_i|
    subject to x^T Q x <= risk_budget and optional e^T x = 1, x >= 0.

    Attributes:
        mu: Expected return per unit position per period
        Q: Covariance of per-period returns
        risk_budget: Variance budget (sigma-bar squared), nonnegative
        fully_invested: Add the budget constraint e^T x = 1
        long_only: Add x >= 0
        costs: Optional transaction-cost block
    """

    mu: np.ndarray
    Q: SymmetricMatrix
    risk_budget: float
    fully_invested: bool = False
    long_only: bool = False
    costs: Optional[TransactionCosts] = None

    def __post_init__(self) -> None:
        mu = _vector(self.mu, "mu")
        Q = as_symmetric(self.Q)
        if Q.n != mu.size:
            raise DimensionMismatchError(
                f"mu has length {mu.size} but Q is {Q.n}x{Q.n}"
            )
        if not np.isfinite(self.risk_budget) or self.risk_budget < 0.0:
            raise ValidationError(
                f"risk budget must be a nonnegative number, got {self.risk_budget}"
            )
        if self.costs is not None and self.costs.p.size != mu.size:
            raise DimensionMismatchError("cost block does not match the asset count")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "risk_budget", float(self.risk_budget))

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def risk_volatility(self) -> float:
        """The budget in volatility units, sqrt(risk_budget)."""
        return float(np.sqrt(self.risk_budget))

    @property
    def has_linear_constraints(self) -> bool:
        return self.fully_invested or self.long_only

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "mu": self.mu.tolist(),
            "Q": self.Q.entries.tolist(),
            "risk_budget": self.risk_budget,
            "fully_invested": self.fully_invested,
            "long_only": self.long_only,
            "costs": None,
        }
        if self.costs is not None:
            data["costs"] = {"p": self.costs.p.tolist(), "x0": self.costs.x0.tolist()}
        return data


def _matrix(values: np.ndarray, columns: int) -> np.ndarray:
    if np.size(values) == 0:
        return np.zeros((0, columns))
    return np.array(values, dtype=float).reshape(-1, columns)


@dataclass(frozen=True, eq=False)
class ConicProblem:
    """
    Canonical form consumed by the solvers:

        maximize    c^T z
        subject to  ||L^T z[risk_rows]||^2 <= risk_budget
                    A z = b
                    G z <= h

    L is the lower-triangular Cholesky factor of the covariance, so the
    quadratic constraint is the ellipsoid z_R^T Q z_R <= risk_budget.
    """

    c: np.ndarray
    L: np.ndarray
    risk_rows: np.ndarray
    risk_budget: float
    A: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    G: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    h: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        c = np.array(self.c, dtype=float).reshape(-1)
        m = c.size
        L = np.array(self.L, dtype=float)
        rows = np.array(self.risk_rows, dtype=int).reshape(-1)
        A = _matrix(self.A, m)
        b = np.array(self.b, dtype=float).reshape(-1)
        G = _matrix(self.G, m)
        h = np.array(self.h, dtype=float).reshape(-1)

        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] != rows.size:
            raise DimensionMismatchError(
                f"risk factor of shape {L.shape} does not match {rows.size} risk rows"
            )
        if rows.size and (rows.min() < 0 or rows.max() >= m):
            raise DimensionMismatchError("risk rows index outside the variable range")
        if np.unique(rows).size != rows.size:
            raise DimensionMismatchError("risk rows must be distinct")
        if not np.allclose(L, np.tril(L)) or not np.all(np.diag(L) > 0.0):
            raise DimensionMismatchError(
                "risk factor must be lower triangular with positive diagonal"
            )
        if A.shape[0] != b.size:
            raise DimensionMismatchError(
                f"equality system has {A.shape[0]} rows but b has {b.size} entries"
            )
        if G.shape[0] != h.size:
            raise DimensionMismatchError(
                f"inequality system has {G.shape[0]} rows but h has {h.size} entries"
            )
        if not np.isfinite(self.risk_budget) or self.risk_budget < 0.0:
            raise ValidationError("risk budget must be a nonnegative number")

        frozen = {"c": c, "L": L, "risk_rows": rows, "A": A, "b": b, "G": G, "h": h}
        for name, value in frozen.items():
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "risk_budget", float(self.risk_budget))

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def n_equalities(self) -> int:
        return self.A.shape[0]

    @property
    def n_inequalities(self) -> int:
        return self.G.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        return self.L @ self.L.T

    def risk(self, z: np.ndarray) -> float:
        """z_R^T Q z_R."""
        y = self.L.T @ np.asarray(z, dtype=float)[self.risk_rows]
        return float(y @ y)

    def objective(self, z: np.ndarray) -> float:
        return float(self.c @ z)

    def max_violation(self, z: np.ndarray) -> float:
        """Largest constraint violation at z (0 when feasible)."""
        z = np.asarray(z, dtype=float)
        violations = [max(self.risk(z) - self.risk_budget, 0.0)]
        if self.n_equalities:
            violations.append(float(np.max(np.abs(self.A @ z - self.b))))
        if self.n_inequalities:
            violations.append(max(float(np.max(self.G @ z - self.h)), 0.0))
        return max(violations)


@dataclass(frozen=True)
class LiftingMap:
    """
    How lifted coordinates relate to positions.

    z[0:n] are the positions x; when costs are present z[n:2n] are the
    auxiliary variables t bounding |x_i - x0_i|.
    """

    original_dim: int
    lifted_dim: int

    @property
    def has_auxiliary(self) -> bool:
        return self.lifted_dim > self.original_dim

    @property
    def recovery(self) -> str:
        n = self.original_dim
        if self.has_auxiliary:
            return f"z[0:{n}] are positions x; z[{n}:{2 * n}] are auxiliary t"
        return f"z[0:{n}] are positions x"

    def positions(self, z: np.ndarray) -> np.ndarray:
        return np.array(z[: self.original_dim], dtype=float)

    def auxiliary(self, z: np.ndarray) -> np.ndarray:
        return np.array(z[self.original_dim : self.lifted_dim], dtype=float)


def lift(problem: MeanVarianceProblem) -> Tuple[ConicProblem, LiftingMap]:
    """
    Rewrite a MeanVarianceProblem in canonical conic form.

    Without costs the variables are the positions x. With costs the
    variables become (x, t) in R^{2n}: the objective is (mu, -p), the risk
    constraint acts on x only, and each |x_i - x0_i| is replaced by t_i
    bounded through x_i - t_i <= x0_i and -x_i - t_i <= -x0_i. At any
    optimum t_i = |x_i - x0_i|.

    Raises:
        NotPositiveDefiniteError: If Q cannot be Cholesky-factored
    """
    n = problem.n
    factor = cholesky(problem.Q)
    eye = np.eye(n)

    if problem.costs is None:
        m = n
        c = problem.mu.copy()
        equality = np.ones((1, n))
        ineq_blocks: List[np.ndarray] = []
        ineq_rhs: List[np.ndarray] = []
        if problem.long_only:
            ineq_blocks.append(-eye)
            ineq_rhs.append(np.zeros(n))
    else:
        m = 2 * n
        p, x0 = problem.costs.p, problem.costs.x0
        c = np.concatenate([problem.mu, -p])
        equality = np.hstack([np.ones((1, n)), np.zeros((1, n))])
        ineq_blocks = [np.hstack([eye, -eye]), np.hstack([-eye, -eye])]
        ineq_rhs = [x0.copy(), -x0]
        if problem.long_only:
            ineq_blocks.append(np.hstack([-eye, np.zeros((n, n))]))
            ineq_rhs.append(np.zeros(n))

    if problem.fully_invested:
        A, b = equality, np.ones(1)
    else:
        A, b = np.zeros((0, m)), np.zeros(0)
    if ineq_blocks:
        G, h = np.vstack(ineq_blocks), np.concatenate(ineq_rhs)
    else:
        G, h = np.zeros((0, m)), np.zeros(0)

    conic = ConicProblem(
        c=c,
        L=factor.L,
        risk_rows=np.arange(n),
        risk_budget=problem.risk_budget,
        A=A,
        b=b,
        G=G,
        h=h,
    )
    logger.debug(
        "Lifted problem: n=%d -> dim=%d, %d equalities, %d inequalities",
        n,
        m,
        conic.n_equalities,
        conic.n_inequalities,
    )
    return conic, LiftingMap(original_dim=n, lifted_dim=m)


def objective_nonsmooth(
    problem: MeanVarianceProblem, x: Union[np.ndarray, Sequence[float]]
) -> float:
    """
    Evaluate mu^T x - sum p_i |x_i - x0_i| directly.

    Raises:
        CostsMissingError: If the problem has no cost block
    """
    if problem.costs is None:
        raise CostsMissingError("problem has no transaction-cost block")
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise DimensionMismatchError(f"x has shape {x.shape}, expected ({problem.n},)")
    trade = np.abs(x - problem.costs.x0)
    return float(problem.mu @ x - problem.costs.p @ trade)


def validate(
    problem: MeanVarianceProblem,
    near_singular_threshold: Optional[float] = None,
) -> List[Finding]:
    """
    Pre-solve checks: covariance verdict and, for fully invested problems,
    whether the risk budget can be met at all.

    Returns an empty list when the problem is clean; never raises for
    problem content.
    """
    # local imports keep models free of a module-level cycle
    from .analytic import min_variance_fully_invested
    from .covariance import DEFAULT_NEAR_SINGULAR_THRESHOLD, CovarianceVerdict, diagnose

    threshold = (
        DEFAULT_NEAR_SINGULAR_THRESHOLD
        if near_singular_threshold is None
        else near_singular_threshold
    )
    findings: List[Finding] = []
    diagnosis = diagnose(problem.Q, threshold)
    if diagnosis.verdict is CovarianceVerdict.INDEFINITE:
        findings.append(
            Finding(
                kind=FindingKind.INDEFINITE,
                message=(
                    "covariance has a negative eigenvalue; some portfolios "
                    "are rated as having negative variance"
                ),
                details={"min_eigenvalue": diagnosis.min_eigenvalue},
            )
        )
    elif diagnosis.verdict is CovarianceVerdict.NEAR_SINGULAR:
        findings.append(
            Finding(
                kind=FindingKind.NEAR_SINGULAR,
                message="covariance is ill-conditioned; consider shrinkage",
                details={"condition_number": diagnosis.condition_number},
            )
        )

    if problem.fully_invested and diagnosis.min_eigenvalue > 0.0:
        try:
            _, min_variance = min_variance_fully_invested(problem.Q)
        except NotPositiveDefiniteError:
            logger.debug("Skipping risk-budget check: Q is numerically singular")
        else:
            if problem.risk_budget < min_variance:
                findings.append(
                    Finding(
                        kind=FindingKind.INFEASIBLE_RISK_BUDGET,
                        message=(
                            f"risk budget {problem.risk_budget:.6g} is below the "
                            f"minimum fully invested variance {min_variance:.6g}"
                        ),
                        details={
                            "risk_budget": problem.risk_budget,
                            "min_variance": min_variance,
                        },
                    )
                )
    return findings
