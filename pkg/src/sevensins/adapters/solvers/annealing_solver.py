"""
Simulated-annealing adapter.
"""

from dataclasses import replace
from typing import Optional

from ...core.annealing import AnnealSchedule, anneal
from ...core.domain.results import SolveResult
from ...core.models import MeanVarianceProblem, lift
from ...core.ports.portfolio_solver import PortfolioSolver


class AnnealingSolver(PortfolioSolver):
    """Anneals over the lifted problem with a fixed schedule and seed."""

    def __init__(self, schedule: Optional[AnnealSchedule] = None):
        self.schedule = schedule or AnnealSchedule()

    @property
    def name(self) -> str:
        return "annealing"

    def solve(self, problem: MeanVarianceProblem) -> SolveResult:
        conic, lifting = lift(problem)
        result = anneal(conic, self.schedule)
        return replace(result, x=lifting.positions(result.x))
