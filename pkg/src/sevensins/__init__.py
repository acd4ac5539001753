"""
sevensins

Mean-variance portfolio optimization with its seven classic mistakes
reproduced next to the correct procedure: indefinite covariance estimates,
ill-conditioning, the intermediate step, nonconvex Sharpe maximization,
heuristic solvers, unlifted transaction costs and infeasible risk budgets.
"""

__version__ = "0.3.0"
__license__ = "Apache-2.0"

from .core.analytic import solve_unconstrained_mv  # noqa: E402
from .core.conic_solver import SolverSettings, solve  # noqa: E402
from .core.covariance import ReturnSample, diagnose  # noqa: E402
from .core.domain.errors import SevenSinsError  # noqa: E402
from .core.models import MeanVarianceProblem, lift  # noqa: E402
from .core.services.backtest import (  # noqa: E402
    BacktestConfig,
    BacktestReport,
    BacktestService,
)
from .cli import main  # noqa: E402

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "BacktestService",
    "MeanVarianceProblem",
    "ReturnSample",
    "SevenSinsError",
    "SolverSettings",
    "diagnose",
    "lift",
    "main",
    "solve",
    "solve_unconstrained_mv",
    "__version__",
]
