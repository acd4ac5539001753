"""
Interior-point solver adapter: lift, solve, recover positions.
"""

import logging
from dataclasses import replace
from typing import Optional

from ...core.conic_solver import SolverSettings, solve
from ...core.domain.results import SolveResult
from ...core.models import MeanVarianceProblem, lift
from ...core.ports.portfolio_solver import PortfolioSolver

logger = logging.getLogger(__name__)


class InteriorPointSolver(PortfolioSolver):
    """Solves any MeanVarianceProblem through its lifted conic form."""

    def __init__(self, settings: Optional[SolverSettings] = None):
        self.settings = settings or SolverSettings()

    @property
    def name(self) -> str:
        return "interior-point"

    def solve(self, problem: MeanVarianceProblem) -> SolveResult:
        conic, lifting = lift(problem)
        result = solve(conic, self.settings)
        if result.x is None:
            logger.debug("Interior point returned no point: %s", result.status.value)
            return replace(result, solver=self.name)
        return replace(result, x=lifting.positions(result.x), solver=self.name)
