"""
Application services: the backtest loop and the seven-sins report.
"""

from .backtest import (
    BacktestConfig,
    BacktestReport,
    BacktestService,
    CostSweepPoint,
    Estimator,
    InvalidPolicy,
    PeriodDiagnostics,
    Repair,
    SolverKind,
    TurnoverStats,
    realized_sharpe,
    report_to_frame,
    turnover_stats,
)
from .sins import GridSearchResult, SinsService, grid_maximize_nonsmooth

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "BacktestService",
    "CostSweepPoint",
    "Estimator",
    "InvalidPolicy",
    "PeriodDiagnostics",
    "Repair",
    "SolverKind",
    "TurnoverStats",
    "realized_sharpe",
    "report_to_frame",
    "turnover_stats",
    "GridSearchResult",
    "SinsService",
    "grid_maximize_nonsmooth",
]
