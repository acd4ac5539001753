"""
Application factory for sevensins.
"""

from typing import Optional, Union

from ..adapters.formatters.json_formatter import JsonFormatter
from ..adapters.formatters.table_formatter import TableFormatter
from ..adapters.solvers.analytic_solver import AnalyticSolver
from ..adapters.solvers.annealing_solver import AnnealingSolver
from ..adapters.solvers.interior_point_solver import InteriorPointSolver
from ..core.annealing import AnnealSchedule
from ..core.conic_solver import SolverSettings
from ..core.domain.errors import UsageError
from ..core.ports.portfolio_solver import PortfolioSolver
from ..core.ports.report_formatter import ReportFormatter
from ..core.services.backtest import BacktestConfig, BacktestService, SolverKind
from ..core.services.sins import SinsService


class ApplicationFactory:
    """
    Builds and wires the application components.
    """

    @staticmethod
    def create_solver(
        kind: Union[SolverKind, str] = SolverKind.INTERIOR_POINT,
        settings: Optional[SolverSettings] = None,
        schedule: Optional[AnnealSchedule] = None,
    ) -> PortfolioSolver:
        """
        Create a portfolio solver.

        Args:
            kind: ``analytic``, ``ip`` or ``anneal``
            settings: Interior-point settings
            schedule: Annealing schedule

        Returns:
            Solver instance

        Raises:
            UsageError: On an unknown solver name
        """
        try:
            kind = SolverKind(kind)
        except ValueError as e:
            raise UsageError(f"unknown solver {kind!r}") from e
        if kind is SolverKind.ANALYTIC:
            return AnalyticSolver()
        if kind is SolverKind.ANNEALING:
            return AnnealingSolver(schedule)
        return InteriorPointSolver(settings)

    @staticmethod
    def create_backtest_service(config: BacktestConfig) -> BacktestService:
        """
        Create a backtest service with the solver named in the config.
        """
        solver = ApplicationFactory.create_solver(
            config.solver, config.settings, config.schedule
        )
        return BacktestService(solver=solver)

    @staticmethod
    def create_sins_service(
        settings: Optional[SolverSettings] = None,
    ) -> SinsService:
        return SinsService(settings=settings)

    @staticmethod
    def create_report_formatter(output_format: str = "table") -> ReportFormatter:
        """
        Create a report formatter.

        Args:
            output_format: ``table`` or ``json``

        Raises:
            UsageError: On an unknown format
        """
        if output_format == "json":
            return JsonFormatter()
        if output_format == "table":
            return TableFormatter()
        raise UsageError(f"unknown output format {output_format!r}")
