"""
Result and finding types shared by the solvers, the backtest and the reports.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np


class SolveStatus(str, Enum):
    """Outcome of a solver run."""

    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True, eq=False)
class SolveResult:
    """
    Result of a solver run.

    Attributes:
        status: Solver outcome
        x: Decision vector in the coordinates of the problem that was solved
            (lifted coordinates for a ConicProblem)
        objective: Objective value at ``x`` (maximization)
        gap_estimate: Duality-gap surrogate for Optimal results; the phase-I
            certificate value for Infeasible results
        outer_iterations: Barrier (or temperature) stages performed
        newton_steps_total: Newton steps (or annealing proposals) performed
        solver: Name of the method that produced the result
    """

    status: SolveStatus
    x: Optional[np.ndarray]
    objective: float
    gap_estimate: float
    outer_iterations: int = 0
    newton_steps_total: int = 0
    solver: str = "interior-point"

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def same_as(self, other: "SolveResult") -> bool:
        """Bitwise comparison of two results."""
        if self.x is None or other.x is None:
            same_x = self.x is None and other.x is None
        else:
            same_x = np.array_equal(self.x, other.x)
        return (
            same_x
            and self.status is other.status
            and _same_float(self.objective, other.objective)
            and _same_float(self.gap_estimate, other.gap_estimate)
            and self.outer_iterations == other.outer_iterations
            and self.newton_steps_total == other.newton_steps_total
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "x": None if self.x is None else [float(v) for v in self.x],
            "objective": float(self.objective),
            "gap_estimate": float(self.gap_estimate),
            "outer_iterations": self.outer_iterations,
            "newton_steps_total": self.newton_steps_total,
            "solver": self.solver,
        }


def _same_float(a: float, b: float) -> bool:
    return (np.isnan(a) and np.isnan(b)) or a == b


class FindingKind(str, Enum):
    """Kinds of problem findings produced by validation."""

    INDEFINITE = "Indefinite"
    NEAR_SINGULAR = "NearSingular"
    INFEASIBLE_RISK_BUDGET = "InfeasibleRiskBudget"


@dataclass(frozen=True)
class Finding:
    """A single pre-solve finding about a problem."""

    kind: FindingKind
    message: str
    details: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "message": self.message, **self.details}
