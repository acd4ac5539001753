"""
Multi-period backtest: roll an estimation window, diagnose and repair the
covariance estimate, rebalance against the incumbent position and book
realized returns, turnover and transaction costs.
"""

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..annealing import AnnealSchedule
from ..conic_solver import SolverSettings
from ..covariance import (
    DEFAULT_NEAR_SINGULAR_THRESHOLD,
    CovarianceDiagnosis,
    CovarianceVerdict,
    ReturnSample,
    clip_eigenvalues,
    diagnose,
    estimate_per_entry_ewma,
    estimate_sample_covariance,
    shrink,
)
from ..domain.errors import (
    InsufficientDataError,
    NotPositiveDefiniteError,
    ValidationError,
    ZeroMuError,
)
from ..domain.results import SolveStatus
from ..linalg import SymmetricMatrix
from ..models import MeanVarianceProblem, TransactionCosts
from ..ports.portfolio_solver import PortfolioSolver

logger = logging.getLogger(__name__)

DEFAULT_REPAIR_FLOOR = 1e-8


class Estimator(str, Enum):
    SAMPLE = "sample"
    PER_ENTRY_EWMA = "per-entry-ewma"


class Repair(str, Enum):
    NONE = "none"
    SHRINK = "shrink"
    CLIP = "clip"


class InvalidPolicy(str, Enum):
    """What to do with a covariance estimate that is not positive definite."""

    HALT = "halt"
    REPAIR_AND_CONTINUE = "repair-and-continue"
    SKIP_PERIOD = "skip-period"


class SolverKind(str, Enum):
    ANALYTIC = "analytic"
    INTERIOR_POINT = "ip"
    ANNEALING = "anneal"


@dataclass(frozen=True)
class BacktestConfig:
    """
    Backtest configuration.

    Attributes:
        estimation_window: Periods used for each estimate (at least 2)
        rebalance_every: Periods between rebalances (at least 1); estimates
            are refreshed only on rebalance
        risk_budget: Per-period variance budget
        estimator: Covariance estimator
        halflives: Scalar or n x n halflives for the per-entry EWMA estimator
        repair: Repair applied to every estimate
        kappa: Shrinkage weight for the shrink repair
        floor: Eigenvalue floor for the clip repair and for repair-on-invalid
        costs: Optional per-asset cost rates p
        policy_on_invalid: Handling of estimates that are not positive definite
        solver: Solver used for each rebalance
        fully_invested: Add e^T x = 1
        long_only: Add x >= 0
    """

    estimation_window: int = 60
    rebalance_every: int = 1
    risk_budget: float = 1e-3
    estimator: Estimator = Estimator.SAMPLE
    halflives: Optional[Any] = None
    repair: Repair = Repair.NONE
    kappa: float = 0.5
    floor: float = 1e-8
    costs: Optional[Tuple[float, ...]] = None
    policy_on_invalid: InvalidPolicy = InvalidPolicy.REPAIR_AND_CONTINUE
    solver: SolverKind = SolverKind.INTERIOR_POINT
    fully_invested: bool = False
    long_only: bool = False
    near_singular_threshold: float = DEFAULT_NEAR_SINGULAR_THRESHOLD
    settings: SolverSettings = field(default_factory=SolverSettings)
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)

    def __post_init__(self) -> None:
        if self.estimation_window < 2:
            raise ValidationError("estimation_window must be at least 2")
        if self.rebalance_every < 1:
            raise ValidationError("rebalance_every must be at least 1")
        if not np.isfinite(self.risk_budget) or self.risk_budget < 0.0:
            raise ValidationError("risk_budget must be nonnegative")
        if self.estimator is Estimator.PER_ENTRY_EWMA and self.halflives is None:
            raise ValidationError("the per-entry EWMA estimator needs halflives")
        if self.floor < 0.0:
            raise ValidationError("floor must be nonnegative")
        if self.costs is not None:
            rates = tuple(float(p) for p in self.costs)
            if not all(np.isfinite(p) and p > 0.0 for p in rates):
                raise ValidationError(f"cost rates must be positive, got {rates}")
            object.__setattr__(self, "costs", rates)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            item.name: getattr(self, item.name)
            for item in fields(self)
            if item.name not in ("settings", "schedule")
        }
        for key in ("estimator", "repair", "policy_on_invalid", "solver"):
            data[key] = data[key].value
        if data["halflives"] is not None:
            data["halflives"] = np.asarray(data["halflives"]).tolist()
        if data["costs"] is not None:
            data["costs"] = list(data["costs"])
        data["settings"] = self.settings.to_dict()
        data["schedule"] = self.schedule.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BacktestConfig":
        """
        Build a config from a mapping such as a parsed YAML file.

        Unknown keys are rejected. ``settings`` and ``schedule`` may be given
        as nested mappings.
        """
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown backtest settings: {sorted(unknown)}")
        values: Dict[str, Any] = dict(data)
        enums = {
            "estimator": Estimator,
            "repair": Repair,
            "policy_on_invalid": InvalidPolicy,
            "solver": SolverKind,
        }
        try:
            for key, enum_type in enums.items():
                if key in values and not isinstance(values[key], enum_type):
                    values[key] = enum_type(values[key])
        except ValueError as e:
            raise ValidationError(str(e)) from e
        if isinstance(values.get("settings"), Mapping):
            values["settings"] = SolverSettings.from_dict(values["settings"])
        if isinstance(values.get("schedule"), Mapping):
            values["schedule"] = AnnealSchedule.from_dict(values["schedule"])
        return cls(**values)


@dataclass(frozen=True)
class PeriodDiagnostics:
    """Covariance diagnosis and the action taken for one period."""

    period: int
    date: Optional[str]
    verdict: str
    min_eigenvalue: float
    condition_number: float
    action: str


@dataclass(frozen=True, eq=False)
class BacktestReport:
    """
    Per-period backtest record.

    Row k of ``positions`` is the position held over the k-th evaluated
    period; ``gross_returns[k]`` is what it earned and ``costs_paid[k]`` what
    it cost to trade into it.
    """

    positions: np.ndarray
    gross_returns: np.ndarray
    costs_paid: np.ndarray
    net_returns: np.ndarray
    turnover: np.ndarray
    realized_sharpe: float
    diagnostics_log: Tuple[PeriodDiagnostics, ...] = ()
    solver_log: Tuple[str, ...] = ()
    dates: Optional[Tuple[str, ...]] = None
    assets: Optional[Tuple[str, ...]] = None

    @property
    def periods(self) -> int:
        return len(self.gross_returns)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "positions": np.asarray(self.positions).tolist(),
            "gross_returns": np.asarray(self.gross_returns).tolist(),
            "costs_paid": np.asarray(self.costs_paid).tolist(),
            "net_returns": np.asarray(self.net_returns).tolist(),
            "turnover": np.asarray(self.turnover).tolist(),
            "realized_sharpe": self.realized_sharpe,
            "diagnostics_log": [asdict(entry) for entry in self.diagnostics_log],
            "solver_log": list(self.solver_log),
            "dates": None if self.dates is None else list(self.dates),
            "assets": None if self.assets is None else list(self.assets),
        }


@dataclass(frozen=True)
class TurnoverStats:
    total_turnover: float
    mean_turnover: float
    max_turnover: float
    total_costs: float
    cost_share_of_gross: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class CostSweepPoint:
    """Summary of one backtest in a cost sweep."""

    cost_level: float
    total_turnover: float
    total_costs: float
    total_net: float
    realized_sharpe: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def realized_sharpe(net_returns: np.ndarray) -> float:
    """mean / sample standard deviation; NaN when undefined."""
    net_returns = np.asarray(net_returns, dtype=float)
    if net_returns.size < 2:
        return float("nan")
    spread = float(np.std(net_returns, ddof=1))
    if spread == 0.0:
        return float("nan")
    return float(np.mean(net_returns) / spread)


def turnover_stats(report: BacktestReport) -> TurnoverStats:
    """Aggregate turnover and cost figures of a report."""
    turnover = np.asarray(report.turnover, dtype=float)
    total = float(np.sum(turnover))
    costs = float(np.sum(report.costs_paid))
    gross = float(np.sum(report.gross_returns))
    return TurnoverStats(
        total_turnover=total,
        mean_turnover=total / turnover.size if turnover.size else 0.0,
        max_turnover=float(np.max(turnover)) if turnover.size else 0.0,
        total_costs=costs,
        cost_share_of_gross=costs / abs(gross) if gross != 0.0 else 0.0,
    )


def report_to_frame(report: BacktestReport) -> pd.DataFrame:
    """One row per period: positions, returns, costs, turnover and status."""
    positions = np.asarray(report.positions, dtype=float)
    n = positions.shape[1] if positions.ndim == 2 else 0
    assets = report.assets or tuple(f"asset_{i}" for i in range(n))
    frame = pd.DataFrame(positions, columns=[f"x_{name}" for name in assets])
    frame["gross"] = report.gross_returns
    frame["costs"] = report.costs_paid
    frame["net"] = report.net_returns
    frame["turnover"] = report.turnover
    if report.solver_log:
        frame["status"] = list(report.solver_log)
    if report.dates is not None:
        frame.index = pd.Index(report.dates, name="date")
    return frame


class BacktestService:
    """
    Runs the rebalancing loop with an injected solver.

    The position chosen at decision time t uses only returns observed before
    t and earns the return of period t.
    """

    def __init__(self, solver: PortfolioSolver):
        self.solver = solver

    def _estimate(
        self, window: ReturnSample, config: BacktestConfig
    ) -> SymmetricMatrix:
        if config.estimator is Estimator.PER_ENTRY_EWMA:
            return estimate_per_entry_ewma(window, config.halflives)
        return estimate_sample_covariance(window)

    def _apply_repair(
        self, Q: SymmetricMatrix, config: BacktestConfig
    ) -> SymmetricMatrix:
        if config.repair is Repair.SHRINK:
            return shrink(Q, config.kappa)
        if config.repair is Repair.CLIP:
            return clip_eigenvalues(Q, config.floor)
        return Q

    def run(self, returns: ReturnSample, config: BacktestConfig) -> BacktestReport:
        """
        Run the backtest.

        A solve that returns no point or ends in NumericalFailure keeps the
        incumbent. IterationLimit points are feasible and are traded.

        Raises:
            InsufficientDataError: If there are not more periods than the window
            NotPositiveDefiniteError: Under the halt policy, on the first
                estimate that is not positive definite
        """
        window = config.estimation_window
        if returns.periods < window + 1:
            raise InsufficientDataError(
                f"need at least {window + 1} periods for an estimation window of "
                f"{window}, got {returns.periods}"
            )
        n = returns.n_assets
        if config.costs is not None and len(config.costs) != n:
            raise ValidationError(
                f"{len(config.costs)} cost rates given for {n} assets"
            )
        cost_rates = None if config.costs is None else np.array(config.costs)

        evaluated = returns.periods - window
        positions = np.zeros((evaluated, n))
        gross = np.zeros(evaluated)
        costs_paid = np.zeros(evaluated)
        turnover = np.zeros(evaluated)
        diagnostics: List[PeriodDiagnostics] = []
        statuses: List[str] = []

        incumbent = np.zeros(n)
        logger.info(
            "Backtest: %d periods, window %d, solver %s",
            evaluated,
            window,
            self.solver.name,
        )
        for k in range(evaluated):
            t = window + k
            date = None if returns.dates is None else returns.dates[t]
            if k % config.rebalance_every == 0:
                target, status = self._rebalance(
                    returns.window(t - window, t),
                    config,
                    incumbent,
                    cost_rates,
                    k,
                    date,
                    diagnostics,
                )
            else:
                target, status = incumbent, "Held"

            trade = np.abs(target - incumbent)
            turnover[k] = float(np.sum(trade))
            if cost_rates is not None:
                costs_paid[k] = float(cost_rates @ trade)
            positions[k] = target
            gross[k] = float(target @ returns.values[t])
            statuses.append(status)
            incumbent = target

        net = gross - costs_paid
        report = BacktestReport(
            positions=positions,
            gross_returns=gross,
            costs_paid=costs_paid,
            net_returns=net,
            turnover=turnover,
            realized_sharpe=realized_sharpe(net),
            diagnostics_log=tuple(diagnostics),
            solver_log=tuple(statuses),
            dates=None if returns.dates is None else tuple(returns.dates[window:]),
            assets=returns.assets,
        )
        logger.info(
            "Backtest finished: total turnover %.6g, realized Sharpe %.4f",
            float(np.sum(turnover)),
            report.realized_sharpe,
        )
        return report

    def _rebalance(
        self,
        window: ReturnSample,
        config: BacktestConfig,
        incumbent: np.ndarray,
        cost_rates: Optional[np.ndarray],
        period: int,
        date: Optional[str],
        diagnostics: List[PeriodDiagnostics],
    ) -> Tuple[np.ndarray, str]:
        Q = self._apply_repair(self._estimate(window, config), config)
        diagnosis = diagnose(Q, config.near_singular_threshold)
        action = "none"

        if diagnosis.min_eigenvalue <= 0.0:
            where = date or f"period {period}"
            if config.policy_on_invalid is InvalidPolicy.HALT:
                raise NotPositiveDefiniteError(
                    f"covariance estimate at {where} has minimum eigenvalue "
                    f"{diagnosis.min_eigenvalue:.3e}"
                )
            if config.policy_on_invalid is InvalidPolicy.SKIP_PERIOD:
                logger.warning(
                    "Skipping rebalance at %s: estimate is %s (min eigenvalue %.3e)",
                    where,
                    diagnosis.verdict.value,
                    diagnosis.min_eigenvalue,
                )
                diagnostics.append(self._entry(period, date, diagnosis, "skipped"))
                return incumbent, "Skipped"
            logger.warning(
                "Repairing estimate at %s: min eigenvalue %.3e clipped to %.1e",
                where,
                diagnosis.min_eigenvalue,
                config.floor,
            )
            Q = clip_eigenvalues(Q, config.floor or DEFAULT_REPAIR_FLOOR)
            action = "repaired"
        elif diagnosis.verdict is CovarianceVerdict.NEAR_SINGULAR:
            logger.warning(
                "Estimate at %s is ill-conditioned (condition number %.3e)",
                date or f"period {period}",
                diagnosis.condition_number,
            )

        mu = window.values.mean(axis=0)
        if not np.any(mu):
            diagnostics.append(self._entry(period, date, diagnosis, "flat"))
            return np.zeros_like(incumbent), "Flat"

        costs = None
        if cost_rates is not None:
            costs = TransactionCosts(cost_rates, incumbent)
        problem = MeanVarianceProblem(
            mu,
            Q,
            config.risk_budget,
            fully_invested=config.fully_invested,
            long_only=config.long_only,
            costs=costs,
        )
        try:
            result = self.solver.solve(problem)
        except ZeroMuError:
            diagnostics.append(self._entry(period, date, diagnosis, "flat"))
            return np.zeros_like(incumbent), "Flat"

        diagnostics.append(self._entry(period, date, diagnosis, action))
        if result.x is None or result.status is SolveStatus.NUMERICAL_FAILURE:
            logger.warning(
                "Solver %s returned %s at %s; holding the incumbent position",
                self.solver.name,
                result.status.value,
                date or f"period {period}",
            )
            return incumbent, result.status.value
        return np.asarray(result.x, dtype=float), result.status.value

    @staticmethod
    def _entry(
        period: int, date: Optional[str], diagnosis: CovarianceDiagnosis, action: str
    ) -> PeriodDiagnostics:
        return PeriodDiagnostics(
            period=period,
            date=date,
            verdict=diagnosis.verdict.value,
            min_eigenvalue=diagnosis.min_eigenvalue,
            condition_number=diagnosis.condition_number,
            action=action,
        )

    def sweep_costs(
        self,
        returns: ReturnSample,
        config: BacktestConfig,
        cost_levels: Sequence[float],
    ) -> List[CostSweepPoint]:
        """
        Rerun the backtest with a uniform cost rate per level.

        A level of 0 runs without a cost block.
        """
        points = []
        for level in cost_levels:
            if level < 0.0:
                raise ValidationError(f"cost level must be nonnegative, got {level}")
            costs = None if level == 0.0 else (float(level),) * returns.n_assets
            report = self.run(returns, replace(config, costs=costs))
            stats = turnover_stats(report)
            points.append(
                CostSweepPoint(
                    cost_level=float(level),
                    total_turnover=stats.total_turnover,
                    total_costs=stats.total_costs,
                    total_net=float(np.sum(report.net_returns)),
                    realized_sharpe=report.realized_sharpe,
                )
            )
            logger.info(
                "Cost level %.4g: turnover %.6g", level, stats.total_turnover
            )
        return points
