"""Tests for the interior-point solver and its phase-I search."""

import numpy as np
import pytest

from sevensins.core.analytic import solve_unconstrained_mv
from sevensins.core.conic_solver import SolverSettings, phase_one, solve
from sevensins.core.domain.errors import ValidationError
from sevensins.core.domain.results import SolveStatus
from sevensins.core.fixtures import random_problems, random_spd
from sevensins.core.models import MeanVarianceProblem, TransactionCosts, lift
from sevensins.core.services.sins import grid_maximize_nonsmooth

TIGHT = SolverSettings(gap_tolerance=1e-10)


def conic(Q, mu=(1.0, 1.0), risk_budget=1.0, **kwargs):
    problem = MeanVarianceProblem(np.array(mu), Q, risk_budget, **kwargs)
    return lift(problem)


class TestSolverSettings:
    def test_defaults(self):
        settings = SolverSettings()
        assert settings.gap_tolerance == 1e-8
        assert settings.barrier_multiplier == 10.0

    @pytest.mark.parametrize(
        "field, value",
        [
            ("gap_tolerance", 0.0),
            ("barrier_multiplier", 1.0),
            ("line_search_backtrack", 1.5),
            ("line_search_slope", 0.7),
        ],
    )
    def test_rejects_invalid(self, field, value):
        with pytest.raises(ValidationError):
            SolverSettings(**{field: value})

    def test_from_dict_casts_and_ignores_unknown(self):
        settings = SolverSettings.from_dict(
            {"gap_tolerance": "1e-6", "max_outer_iterations": "7", "colour": "red"}
        )
        assert settings.gap_tolerance == 1e-6
        assert settings.max_outer_iterations == 7

    def test_from_dict_rejects_garbage(self):
        with pytest.raises(ValidationError):
            SolverSettings.from_dict({"gap_tolerance": "tight"})


class TestPhaseOne:
    def test_risk_only_witness_is_origin(self, pair_q):
        problem, _ = conic(pair_q)
        start = phase_one(problem)
        assert start.feasible and start.strictly_feasible
        np.testing.assert_array_equal(start.witness, [0.0, 0.0])

    def test_cost_auxiliaries_get_a_bounded_start(self, pair_q):
        costs = TransactionCosts(p=np.array([0.1, 0.1]), x0=np.array([0.3, -0.2]))
        problem, lifting = conic(pair_q, risk_budget=1e-3, costs=costs)
        start = phase_one(problem)
        assert start.feasible and start.strictly_feasible
        assert problem.max_violation(start.witness) <= 0.0
        x = lifting.positions(start.witness)
        np.testing.assert_allclose(
            lifting.auxiliary(start.witness), np.abs(x - costs.x0) + 1.0
        )

    def test_fully_invested_feasible(self, pair_q):
        problem, _ = conic(pair_q, risk_budget=0.2, fully_invested=True)
        start = phase_one(problem)
        assert start.feasible
        assert start.witness.sum() == pytest.approx(1.0)
        assert problem.risk(start.witness) < 0.2

    def test_fully_invested_infeasible(self, pair_q):
        problem, _ = conic(pair_q, risk_budget=0.1, fully_invested=True)
        start = phase_one(problem)
        assert not start.feasible
        assert start.witness is None
        assert start.certificate > 0.0


class TestSolve:
    def test_two_asset_equal_returns(self, pair_q):
        problem, _ = conic(pair_q)
        result = solve(problem, TIGHT)
        assert result.is_optimal
        np.testing.assert_allclose(result.x, [1.29099, 1.29099], atol=1e-5)
        assert result.objective == pytest.approx(2.58199, abs=1e-5)
        assert result.gap_estimate <= 1e-10

    def test_matches_analytic_optimum(self, pair_q):
        problem, _ = conic(pair_q, mu=(1.0, 0.0))
        result = solve(problem, TIGHT)
        np.testing.assert_allclose(
            result.x, solve_unconstrained_mv([1.0, 0.0], pair_q, 1.0), atol=1e-6
        )

    def test_no_equality_problem_with_costs(self, pair_q):
        costs = TransactionCosts(p=np.array([0.2, 0.2]), x0=np.array([0.5, 0.5]))
        problem, lifting = conic(pair_q, mu=(1.0, 0.5), costs=costs)
        assert problem.n_equalities == 0
        result = solve(problem, TIGHT)
        assert result.is_optimal
        x, t = lifting.positions(result.x), lifting.auxiliary(result.x)
        np.testing.assert_allclose(t, np.abs(x - costs.x0), atol=1e-6)
        assert pair_q.quadratic_form(x) <= 1.0 + 1e-9

    def test_costs_at_a_small_budget(self, pair_q):
        costs = TransactionCosts(p=np.full(2, 1e-3), x0=np.zeros(2))
        problem, lifting = conic(pair_q, mu=(1.0, 0.5), risk_budget=1e-3, costs=costs)
        result = solve(problem, TIGHT)
        assert result.is_optimal
        x = lifting.positions(result.x)
        np.testing.assert_allclose(x, [np.sqrt(1e-3 / 0.2), 0.0], atol=1e-6)
        np.testing.assert_allclose(lifting.auxiliary(result.x), np.abs(x), atol=1e-6)
        assert result.objective == pytest.approx(0.999 * np.sqrt(1e-3 / 0.2), rel=1e-6)

    def test_tiny_costs_recover_the_costless_optimum(self, pair_q):
        costless, _ = conic(pair_q, mu=(1.0, 0.5), risk_budget=1e-3)
        costs = TransactionCosts(p=np.full(2, 1e-7), x0=np.zeros(2))
        problem, lifting = conic(pair_q, mu=(1.0, 0.5), risk_budget=1e-3, costs=costs)
        result = solve(problem, TIGHT)
        assert result.is_optimal
        np.testing.assert_allclose(
            lifting.positions(result.x), solve(costless, TIGHT).x, atol=1e-6
        )

    def test_fully_invested_below_min_variance_is_infeasible(self, pair_q):
        problem, _ = conic(pair_q, risk_budget=0.1, fully_invested=True)
        result = solve(problem)
        assert result.status is SolveStatus.INFEASIBLE
        assert result.x is None

    def test_fully_invested_at_min_variance(self, pair_q):
        problem, _ = conic(pair_q, risk_budget=0.15, fully_invested=True)
        result = solve(problem)
        assert result.is_optimal
        np.testing.assert_allclose(result.x, [0.5, 0.5], atol=1e-3)

    def test_long_only_zeroes_negative_return_asset(self, pair_q):
        problem, _ = conic(pair_q, mu=(1.0, -1.0), long_only=True)
        result = solve(problem, TIGHT)
        assert result.is_optimal
        np.testing.assert_allclose(result.x, [np.sqrt(5.0), 0.0], atol=1e-5)

    def test_zero_budget_without_costs(self, pair_q):
        problem, _ = conic(pair_q, risk_budget=0.0)
        result = solve(problem)
        assert result.is_optimal
        np.testing.assert_array_equal(result.x, [0.0, 0.0])
        assert result.objective == 0.0

    def test_zero_budget_pays_to_unwind(self, pair_q):
        costs = TransactionCosts(p=np.array([0.1, 0.2]), x0=np.array([0.5, -1.0]))
        problem, lifting = conic(pair_q, risk_budget=0.0, costs=costs)
        result = solve(problem)
        assert result.is_optimal
        np.testing.assert_allclose(lifting.positions(result.x), 0.0)
        np.testing.assert_allclose(lifting.auxiliary(result.x), [0.5, 1.0], atol=1e-9)
        assert result.objective == pytest.approx(-0.25)

    def test_zero_budget_fully_invested_is_infeasible(self, pair_q):
        problem, _ = conic(pair_q, risk_budget=0.0, fully_invested=True)
        assert solve(problem).status is SolveStatus.INFEASIBLE

    def test_outer_iteration_limit(self, pair_q):
        problem, _ = conic(pair_q)
        result = solve(problem, SolverSettings(max_outer_iterations=2))
        assert result.status is SolveStatus.ITERATION_LIMIT

    def test_exhausted_newton_steps_are_an_iteration_limit(self, pair_q):
        problem, _ = conic(pair_q)
        result = solve(problem, SolverSettings(max_newton_iterations=1))
        assert result.status is SolveStatus.ITERATION_LIMIT
        assert result.x is not None

    def test_stalled_line_search_is_a_numerical_failure(self, pair_q, mocker):
        mocker.patch("sevensins.core.conic_solver._line_search", return_value=0.0)
        problem, _ = conic(pair_q)
        result = solve(problem)
        assert result.status is SolveStatus.NUMERICAL_FAILURE
        assert not result.is_optimal

    def test_stall_in_phase_one_is_a_numerical_failure(self, pair_q, mocker):
        mocker.patch("sevensins.core.conic_solver._line_search", return_value=0.0)
        problem, _ = conic(pair_q, risk_budget=0.15, fully_invested=True)
        result = solve(problem)
        assert result.status is SolveStatus.NUMERICAL_FAILURE
        assert result.x is None

    def test_repeat_runs_are_bitwise_identical(self, spd_factory, rng):
        Q = spd_factory(5)
        costs = TransactionCosts(p=np.full(5, 0.01), x0=rng.standard_normal(5))
        problem, _ = conic(
            Q, mu=rng.standard_normal(5), costs=costs, fully_invested=True
        )
        first, second = solve(problem), solve(problem)
        assert first.is_optimal
        assert first.same_as(second)

    def test_solver_name(self, pair_q):
        problem, _ = conic(pair_q)
        assert solve(problem).solver == "interior-point"


@pytest.mark.slow
@pytest.mark.parametrize("n", [3, 8, 20])
def test_random_unconstrained_instances_match_closed_form(n):
    for index, problem in enumerate(random_problems(5, n, seed=n)):
        conic_problem, _ = lift(problem)
        result = solve(conic_problem, TIGHT)
        expected = solve_unconstrained_mv(problem.mu, problem.Q, problem.risk_budget)
        assert result.is_optimal, f"instance {index}"
        assert result.objective == pytest.approx(problem.mu @ expected, rel=1e-7)
        np.testing.assert_allclose(result.x, expected, atol=1e-5)


@pytest.mark.slow
def test_two_hundred_unconstrained_instances():
    checked = 0
    for n in (2, 5, 10, 20, 30):
        for index, problem in enumerate(random_problems(40, n, seed=n)):
            conic_problem, _ = lift(problem)
            result = solve(conic_problem, TIGHT)
            expected = solve_unconstrained_mv(
                problem.mu, problem.Q, problem.risk_budget
            )
            assert result.is_optimal, f"n={n} instance {index}"
            assert result.objective == pytest.approx(problem.mu @ expected, rel=1e-6)
            np.testing.assert_allclose(result.x, expected, rtol=1e-6, atol=1e-7)
            checked += 1
    assert checked == 200


@pytest.mark.slow
def test_two_asset_cost_instances_match_grid_search():
    rng = np.random.default_rng(11)
    for index in range(20):
        costs = TransactionCosts(
            p=rng.uniform(0.01, 0.3, size=2), x0=0.5 * rng.standard_normal(2)
        )
        problem = MeanVarianceProblem(
            rng.standard_normal(2), random_spd(2, rng), 1.0, costs=costs
        )
        conic_problem, lifting = lift(problem)
        result = solve(conic_problem, TIGHT)
        reference = grid_maximize_nonsmooth(problem)
        assert result.is_optimal, f"instance {index}"
        assert result.objective >= reference.objective - 1e-6
        assert result.objective == pytest.approx(reference.objective, abs=1e-3)
        x = lifting.positions(result.x)
        np.testing.assert_allclose(
            lifting.auxiliary(result.x), np.abs(x - costs.x0), atol=1e-6
        )
