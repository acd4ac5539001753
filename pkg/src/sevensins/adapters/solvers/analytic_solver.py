"""
Closed-form solver for the plain mean-variance model.
"""

import logging

from ...core.analytic import solve_unconstrained_mv
from ...core.domain.errors import ValidationError
from ...core.domain.results import SolveResult, SolveStatus
from ...core.models import MeanVarianceProblem
from ...core.ports.portfolio_solver import PortfolioSolver

logger = logging.getLogger(__name__)


class AnalyticSolver(PortfolioSolver):
    """
    Solves max mu^T x s.t. x^T Q x <= risk_budget in closed form.

    Budget, long-only and cost blocks have no closed form here and are
    rejected.
    """

    @property
    def name(self) -> str:
        return "analytic"

    def solve(self, problem: MeanVarianceProblem) -> SolveResult:
        if problem.has_linear_constraints or problem.costs is not None:
            raise ValidationError(
                "the analytic solver handles only the unconstrained model; "
                "use the interior-point solver"
            )
        x = solve_unconstrained_mv(problem.mu, problem.Q, problem.risk_budget)
        logger.debug("Analytic solution computed for n=%d", problem.n)
        return SolveResult(
            status=SolveStatus.OPTIMAL,
            x=x,
            objective=float(problem.mu @ x),
            gap_estimate=0.0,
            solver=self.name,
        )
