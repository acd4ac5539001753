"""Tests for the backtest loop, its configuration and the cost sweep."""

from dataclasses import replace
from unittest.mock import patch

import numpy as np
import pytest

from sevensins.adapters.solvers import InteriorPointSolver
from sevensins.core.covariance import ReturnSample, clip_eigenvalues
from sevensins.core.domain.errors import (
    InsufficientDataError,
    NotPositiveDefiniteError,
    ValidationError,
)
from sevensins.core.domain.results import SolveResult, SolveStatus
from sevensins.core.fixtures import INDEFINITE_COVARIANCE, noisy_two_asset_returns
from sevensins.core.linalg import SymmetricMatrix
from sevensins.core.ports.portfolio_solver import PortfolioSolver
from sevensins.core.services.backtest import (
    BacktestConfig,
    BacktestService,
    Estimator,
    InvalidPolicy,
    SolverKind,
    realized_sharpe,
    report_to_frame,
    turnover_stats,
)


class RecordingSolver(PortfolioSolver):
    """Returns a fixed position and keeps every problem it was given."""

    def __init__(self, x=(0.5, 0.5), status=SolveStatus.OPTIMAL):
        self.x = None if x is None else np.array(x, dtype=float)
        self.status = status
        self.problems = []

    @property
    def name(self) -> str:
        return "recording"

    def solve(self, problem):
        self.problems.append(problem)
        objective = float("nan") if self.x is None else float(problem.mu @ self.x)
        return SolveResult(self.status, self.x, objective, 0.0, solver=self.name)


@pytest.fixture
def sample(rng) -> ReturnSample:
    values = 0.01 + 0.02 * rng.standard_normal((12, 2))
    dates = tuple(f"2022-01-{day:02d}" for day in range(1, 13))
    return ReturnSample(values, ("A", "B"), dates)


@pytest.fixture
def indefinite_estimate():
    with patch.object(
        BacktestService,
        "_estimate",
        return_value=SymmetricMatrix(INDEFINITE_COVARIANCE),
    ):
        yield


class TestBacktestConfig:
    def test_defaults(self):
        config = BacktestConfig()
        assert config.estimator is Estimator.SAMPLE
        assert config.policy_on_invalid is InvalidPolicy.REPAIR_AND_CONTINUE

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"estimation_window": 1},
            {"rebalance_every": 0},
            {"risk_budget": -1.0},
            {"floor": -1.0},
            {"estimator": Estimator.PER_ENTRY_EWMA},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            BacktestConfig(**kwargs)

    @pytest.mark.parametrize("costs", [(0.0, 0.1), (-0.1, 0.1), (float("nan"), 0.1)])
    def test_rejects_nonpositive_cost_rates(self, costs):
        with pytest.raises(ValidationError):
            BacktestConfig(costs=costs)

    def test_from_dict(self):
        config = BacktestConfig.from_dict(
            {
                "estimation_window": 20,
                "estimator": "per-entry-ewma",
                "halflives": 10.0,
                "policy_on_invalid": "skip-period",
                "solver": "anneal",
                "settings": {"gap_tolerance": 1e-6},
                "schedule": {"seed": 3},
            }
        )
        assert config.estimator is Estimator.PER_ENTRY_EWMA
        assert config.policy_on_invalid is InvalidPolicy.SKIP_PERIOD
        assert config.solver is SolverKind.ANNEALING
        assert config.settings.gap_tolerance == 1e-6
        assert config.schedule.seed == 3

    def test_from_dict_rejects_unknown_key(self):
        with pytest.raises(ValidationError):
            BacktestConfig.from_dict({"window": 20})

    def test_from_dict_rejects_unknown_policy(self):
        with pytest.raises(ValidationError):
            BacktestConfig.from_dict({"policy_on_invalid": "ignore"})

    def test_to_dict_is_plain(self):
        data = BacktestConfig(costs=[0.01, 0.02]).to_dict()
        assert data["costs"] == [0.01, 0.02]
        assert data["estimator"] == "sample"
        assert data["schedule"]["seed"] == 42


class TestRun:
    def test_window_too_large(self, sample):
        service = BacktestService(RecordingSolver())
        with pytest.raises(InsufficientDataError):
            service.run(sample, BacktestConfig(estimation_window=12))

    def test_uses_only_past_returns(self, sample):
        solver = RecordingSolver()
        config = BacktestConfig(estimation_window=4)
        report = BacktestService(solver).run(sample, config)
        assert report.periods == 8
        for k, problem in enumerate(solver.problems):
            np.testing.assert_allclose(
                problem.mu, sample.values[k : k + 4].mean(axis=0), rtol=1e-14
            )
        np.testing.assert_allclose(report.gross_returns, sample.values[4:] @ [0.5, 0.5])
        assert report.dates == sample.dates[4:]

    def test_rebalance_schedule_holds_between_rebalances(self, sample):
        solver = RecordingSolver()
        config = BacktestConfig(estimation_window=4, rebalance_every=3)
        report = BacktestService(solver).run(sample, config)
        assert len(solver.problems) == 3
        expected = ("Optimal", "Held", "Held") * 2 + ("Optimal", "Held")
        assert report.solver_log == expected

    def test_costs_charge_the_first_trade(self, sample):
        solver = RecordingSolver()
        config = BacktestConfig(estimation_window=4, costs=(0.1, 0.2))
        report = BacktestService(solver).run(sample, config)
        np.testing.assert_allclose(report.turnover, [1.0] + [0.0] * 7)
        np.testing.assert_allclose(report.costs_paid, [0.15] + [0.0] * 7)
        np.testing.assert_allclose(
            report.net_returns, report.gross_returns - report.costs_paid
        )
        np.testing.assert_array_equal(solver.problems[0].costs.x0, [0.0, 0.0])
        np.testing.assert_array_equal(solver.problems[1].costs.x0, [0.5, 0.5])

    def test_cost_rates_must_match_assets(self, sample):
        service = BacktestService(RecordingSolver())
        with pytest.raises(ValidationError):
            service.run(sample, BacktestConfig(estimation_window=4, costs=(0.1,)))

    def test_zero_returns_stay_flat(self):
        sample = ReturnSample(np.zeros((10, 2)))
        solver = RecordingSolver()
        config = BacktestConfig(estimation_window=5)
        report = BacktestService(solver).run(sample, config)
        assert set(report.solver_log) == {"Flat"}
        np.testing.assert_array_equal(report.positions, 0.0)
        assert solver.problems == []
        assert np.isnan(report.realized_sharpe)

    def test_solver_without_point_keeps_incumbent(self, sample):
        solver = RecordingSolver(x=None, status=SolveStatus.INFEASIBLE)
        config = BacktestConfig(estimation_window=4)
        report = BacktestService(solver).run(sample, config)
        assert set(report.solver_log) == {"Infeasible"}
        np.testing.assert_array_equal(report.positions, 0.0)

    def test_numerical_failure_keeps_incumbent(self, sample):
        solver = RecordingSolver(status=SolveStatus.NUMERICAL_FAILURE)
        config = BacktestConfig(estimation_window=4)
        report = BacktestService(solver).run(sample, config)
        assert set(report.solver_log) == {"NumericalFailure"}
        np.testing.assert_array_equal(report.positions, 0.0)

    def test_iteration_limit_point_is_traded(self, sample):
        solver = RecordingSolver(status=SolveStatus.ITERATION_LIMIT)
        config = BacktestConfig(estimation_window=4)
        report = BacktestService(solver).run(sample, config)
        assert set(report.solver_log) == {"IterationLimit"}
        np.testing.assert_array_equal(report.positions, 0.5)

    def test_interior_point_end_to_end(self):
        returns = noisy_two_asset_returns(periods=80)
        config = BacktestConfig(estimation_window=60, risk_budget=1e-3)
        report = BacktestService(InteriorPointSolver()).run(returns, config)
        assert report.periods == 20
        assert set(report.solver_log) == {"Optimal"}
        assert np.isfinite(report.realized_sharpe)
    def test_tiny_costs_track_the_costless_run(self):
        returns = noisy_two_asset_returns(periods=80)
        config = BacktestConfig(estimation_window=60, risk_budget=1e-3)
        service = BacktestService(InteriorPointSolver())
        costless = service.run(returns, config)
        costly = service.run(returns, replace(config, costs=(1e-7, 1e-7)))
        assert set(costly.solver_log) == {"Optimal"}
        assert np.max(np.abs(costly.positions)) > 0.1
        np.testing.assert_allclose(costly.positions, costless.positions, atol=1e-3)



class TestInvalidEstimates:
    def test_halt(self, sample, indefinite_estimate):
        config = BacktestConfig(
            estimation_window=4, policy_on_invalid=InvalidPolicy.HALT
        )
        with pytest.raises(NotPositiveDefiniteError, match="2022-01-05"):
            BacktestService(RecordingSolver()).run(sample, config)

    def test_skip_period(self, sample, indefinite_estimate):
        solver = RecordingSolver()
        config = BacktestConfig(
            estimation_window=4, policy_on_invalid=InvalidPolicy.SKIP_PERIOD
        )
        report = BacktestService(solver).run(sample, config)
        assert set(report.solver_log) == {"Skipped"}
        assert solver.problems == []
        assert {entry.action for entry in report.diagnostics_log} == {"skipped"}
        assert report.diagnostics_log[0].verdict == "Indefinite"

    def test_repair_and_continue(self, sample, indefinite_estimate):
        solver = RecordingSolver()
        config = BacktestConfig(estimation_window=4, floor=1e-3)
        report = BacktestService(solver).run(sample, config)
        assert {entry.action for entry in report.diagnostics_log} == {"repaired"}
        expected = clip_eigenvalues(INDEFINITE_COVARIANCE, 1e-3).entries
        np.testing.assert_allclose(solver.problems[0].Q.entries, expected)


class TestSummaries:
    def test_realized_sharpe(self):
        assert realized_sharpe(np.array([1.0, 2.0, 3.0])) == pytest.approx(2.0)
        assert np.isnan(realized_sharpe(np.array([1.0])))
        assert np.isnan(realized_sharpe(np.array([0.5, 0.5, 0.5])))

    def test_turnover_stats(self, sample):
        config = BacktestConfig(estimation_window=4, costs=(0.1, 0.1))
        report = BacktestService(RecordingSolver()).run(sample, config)
        stats = turnover_stats(report)
        assert stats.total_turnover == pytest.approx(1.0)
        assert stats.max_turnover == pytest.approx(1.0)
        assert stats.mean_turnover == pytest.approx(1.0 / 8)
        assert stats.total_costs == pytest.approx(0.1)

    def test_report_to_frame(self, sample):
        report = BacktestService(RecordingSolver()).run(
            sample, BacktestConfig(estimation_window=4)
        )
        frame = report_to_frame(report)
        columns = ["x_A", "x_B", "gross", "costs", "net", "turnover", "status"]
        assert list(frame.columns) == columns
        assert frame.index.name == "date"
        assert len(frame) == 8


class TestCostSweep:
    def test_zero_level_runs_without_costs(self, sample):
        solver = RecordingSolver()
        points = BacktestService(solver).sweep_costs(
            sample, BacktestConfig(estimation_window=4), [0.0, 0.01]
        )
        assert [p.cost_level for p in points] == [0.0, 0.01]
        assert points[0].total_costs == 0.0
        assert points[1].total_costs == pytest.approx(0.01)
        assert solver.problems[0].costs is None
        np.testing.assert_array_equal(solver.problems[-1].costs.p, [0.01, 0.01])

    def test_rejects_negative_level(self, sample):
        service = BacktestService(RecordingSolver())
        with pytest.raises(ValidationError):
            service.sweep_costs(sample, BacktestConfig(estimation_window=4), [-0.1])

    @pytest.mark.slow
    def test_turnover_falls_as_costs_rise(self):
        returns = noisy_two_asset_returns(periods=160)
        config = BacktestConfig(estimation_window=60, risk_budget=1e-3)
        points = BacktestService(InteriorPointSolver()).sweep_costs(
            returns, config, [0.0, 0.001, 0.01, 0.1]
        )
        turnover = np.array([p.total_turnover for p in points])
        assert turnover[1] > 0.0
        assert np.all(np.diff(turnover) <= 1e-6)
        assert turnover[-1] < turnover[0]
