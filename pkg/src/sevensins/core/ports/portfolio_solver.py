"""
Interface for portfolio solvers.
"""

from abc import ABC, abstractmethod

from ..domain.results import SolveResult
from ..models import MeanVarianceProblem


class PortfolioSolver(ABC):
    """
    Solves a MeanVarianceProblem and reports positions.

    Implementations return a SolveResult whose ``x`` is in position
    coordinates (length n), whatever internal form they solve.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """Short name used in logs and reports."""
        pass

    @abstractmethod
    def solve(self, problem: MeanVarianceProblem) -> SolveResult:
        """
        Solve the problem.

        Args:
            problem: Mean-variance problem

        Returns:
            Result with positions in ``x`` when a point is available
        """
        pass
