"""
Side-by-side demonstrations of seven common portfolio-optimization mistakes.

Every section runs the flawed procedure and the sound one on a bundled
fixture and records both in a report section. All inputs and seeds are
fixed, so the report is identical from run to run.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from ..analytic import (
    maximize_sharpe_directly,
    min_variance_fully_invested,
    principal_decomposition,
    sharpe_ratio,
    sinful_intermediate_step,
    solve_sharpe_max,
    solve_unconstrained_mv,
    truncated_principal_solution,
)
from ..annealing import AnnealSchedule, compare_solvers
from ..conic_solver import SolverSettings, phase_one, solve
from ..covariance import (
    clip_eigenvalues,
    demonstrate_exploit,
    demonstrate_fully_invested_exploit,
    diagnose,
    estimate_per_entry_ewma,
    estimate_sample_covariance,
    shrink,
)
from ..domain.errors import NotIndefiniteError
from ..domain.report import Report, ReportSection
from ..fixtures import (
    mismatched_halflives,
    oscillating_correlation_returns,
    random_problems,
    two_asset_covariance,
)
from ..linalg import SymmetricMatrix, eigh
from ..models import MeanVarianceProblem, TransactionCosts, lift, objective_nonsmooth

logger = logging.getLogger(__name__)

EXPLOIT_SCALES = (1.0, 10.0, 100.0)
SHARPE_BUDGETS = (0.5, 1.0, 2.0)
FEASIBILITY_BUDGETS = (0.10, 0.14, 0.149, 0.151, 0.16, 0.20)
# annealing budget for the report section
REPORT_SCHEDULE = AnnealSchedule(
    initial_temperature=1.0,
    cooling_factor=0.9,
    steps_per_temperature=50,
    step_scale=0.25,
    min_temperature=1e-3,
)
REPORT_SEEDS = (1, 2, 3, 4, 5)


@dataclass(frozen=True, eq=False)
class GridSearchResult:
    x: np.ndarray
    objective: float
    evaluations: int


def grid_maximize_nonsmooth(
    problem: MeanVarianceProblem,
    step: float = 1e-2,
    refine_step: float = 1e-4,
) -> GridSearchResult:
    """
    Maximize mu^T x - sum p_i |x_i - x0_i| over the risk ellipsoid without
    lifting.

    A grid with spacing ``step`` covers the bounding box of the ellipsoid;
    a second grid with spacing ``refine_step`` covers one coarse cell around
    the best point. The grid winner is then polished on every sign pattern
    of x - x0, where the objective is linear and SLSQP sees a smooth
    problem. Meant for two or three assets.
    """
    Q = problem.Q.entries
    inverse_diag = np.diag(np.linalg.inv(Q))
    half_widths = np.sqrt(problem.risk_budget * inverse_diag)

    def best_on(centers: np.ndarray, widths: np.ndarray, spacing: float):
        axes = [
            np.arange(c - w, c + w + spacing / 2, spacing)
            for c, w in zip(centers, widths)
        ]
        points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(
            -1, problem.n
        )
        risk = np.einsum("ij,jk,ik->i", points, Q, points)
        points = points[risk <= problem.risk_budget]
        values = _nonsmooth_values(problem, points)
        best = int(np.argmax(values))
        return points[best], float(values[best]), len(points)

    coarse_x, _, coarse_count = best_on(np.zeros(problem.n), half_widths, step)
    best_x, best_value, fine_count = best_on(
        coarse_x, np.full(problem.n, step), refine_step
    )
    evaluations = coarse_count + fine_count
    for candidate in _polish_by_sign_pattern(problem, best_x):
        evaluations += 1
        value = float(_nonsmooth_values(problem, candidate[np.newaxis, :])[0])
        if value > best_value:
            best_x, best_value = candidate, value
    return GridSearchResult(best_x, best_value, evaluations)


def _nonsmooth_values(problem: MeanVarianceProblem, points: np.ndarray) -> np.ndarray:
    values = points @ problem.mu
    if problem.costs is not None:
        values = values - np.abs(points - problem.costs.x0) @ problem.costs.p
    return values


def _polish_by_sign_pattern(
    problem: MeanVarianceProblem, start: np.ndarray
) -> List[np.ndarray]:
    """Feasible SLSQP optima of the linear pieces of the objective."""
    Q = problem.Q.entries
    budget = problem.risk_budget
    risk = {
        "type": "ineq",
        "fun": lambda x: budget - x @ Q @ x,
        "jac": lambda x: -2.0 * (Q @ x),
    }
    patterns: List[Optional[np.ndarray]] = [None]
    x0 = rates = np.zeros(problem.n)
    if problem.costs is not None:
        patterns = [
            np.array(signs)
            for signs in itertools.product((1.0, -1.0), repeat=problem.n)
        ]
        x0, rates = problem.costs.x0, problem.costs.p

    candidates = []
    for signs in patterns:
        gradient = problem.mu.copy()
        constraints = [risk]
        begin = start
        if signs is not None:
            gradient = gradient - signs * rates
            constraints.append(
                {
                    "type": "ineq",
                    "fun": lambda x, s=signs: s * (x - x0),
                    "jac": lambda x, s=signs: np.diag(s),
                }
            )
            begin = x0 + signs * np.abs(start - x0)
        outcome = optimize.minimize(
            lambda x, g=gradient: -(g @ x),
            begin,
            jac=lambda x, g=gradient: -g,
            method="SLSQP",
            constraints=constraints,
            options={"ftol": 1e-14, "maxiter": 500},
        )
        x = np.asarray(outcome.x, dtype=float)
        if not np.all(np.isfinite(x)):
            continue
        variance = float(x @ Q @ x)
        if variance > budget:
            x = x * np.sqrt(budget / variance)
        candidates.append(x)
    return candidates


class SinsService:
    """Builds the seven-section report."""

    def __init__(
        self,
        settings: Optional[SolverSettings] = None,
        schedule: AnnealSchedule = REPORT_SCHEDULE,
        seeds: Sequence[int] = REPORT_SEEDS,
    ):
        self.settings = settings or SolverSettings()
        self.schedule = schedule
        self.seeds = tuple(seeds)

    def build_report(self) -> Report:
        report = Report(command="sins")
        builders: List[Callable[[Report], None]] = [
            self.negative_eigenvalues,
            self.ill_conditioning,
            self.intermediate_step,
            self.convexity,
            self.wrong_solver,
            self.ignoring_the_lift,
            self.solving_the_impossible,
        ]
        for number, builder in enumerate(builders, start=1):
            logger.info("Running section %d: %s", number, builder.__name__)
            builder(report)
        return report

    def negative_eigenvalues(self, report: Report) -> ReportSection:
        returns = oscillating_correlation_returns()
        halflives = mismatched_halflives()
        per_entry = estimate_per_entry_ewma(returns, halflives)
        sample = estimate_sample_covariance(returns)
        mu = np.array([0.01, 0.005, 0.002])
        risk_budget = 1e-4

        bad = diagnose(per_entry)
        good = diagnose(sample)
        repaired = diagnose(clip_eigenvalues(per_entry, 1e-8))
        section = report.section(
            "1. Negative eigenvalues in the covariance matrix",
            risk_budget=risk_budget,
            per_entry_verdict=bad.verdict.value,
            per_entry_min_eigenvalue=bad.min_eigenvalue,
            sample_verdict=good.verdict.value,
            sample_min_eigenvalue=good.min_eigenvalue,
            clipped_min_eigenvalue=repaired.min_eigenvalue,
        )
        table = section.table(
            "Exploit along the negative eigenvector (per-entry EWMA estimate)",
            ["scale", "claimed_variance", "expected_return", "within_budget"],
        )
        try:
            for tau in EXPLOIT_SCALES:
                exploit = demonstrate_exploit(per_entry, mu, risk_budget, tau)
                table.add_row(
                    tau,
                    exploit.claimed_variance,
                    exploit.expected_return,
                    exploit.within_budget,
                )
        except NotIndefiniteError:
            section.values["exploit"] = "estimate is not indefinite"
        try:
            invested = demonstrate_fully_invested_exploit(per_entry, mu, 10.0)
            section.values.update(
                fully_invested_claimed_variance=invested.claimed_variance,
                fully_invested_budget_sum=invested.budget_sum,
            )
        except NotIndefiniteError:
            section.values["fully_invested_exploit"] = "no negative direction"
        return section

    def ill_conditioning(self, report: Report) -> ReportSection:
        Q = SymmetricMatrix([[1.0, 1.0 - 1e-7], [1.0 - 1e-7, 1.0]])
        mu = np.array([1.0, 0.9])
        kappa = 0.5
        shrunk = shrink(Q, kappa)

        before = diagnose(Q)
        after = diagnose(shrunk)
        section = report.section(
            "2. Being unaware of ill-conditioning",
            verdict_before=before.verdict.value,
            condition_before=before.condition_number,
            verdict_after=after.verdict.value,
            condition_after=after.condition_number,
            kappa=kappa,
        )
        spectrum = section.table(
            "Eigenvalues before and after shrinkage",
            ["index", "before", "after", "expected (1-k)+k*lambda"],
        )
        pairs = zip(eigh(Q).eigenvalues, eigh(shrunk).eigenvalues)
        for i, (lam, lam_shrunk) in enumerate(pairs):
            spectrum.add_row(i + 1, lam, lam_shrunk, (1.0 - kappa) + kappa * lam)

        coefficients = section.table(
            "Principal-portfolio coefficients (v^T mu) / lambda",
            ["index", "raw", "shrunk"],
        )
        raw = principal_decomposition(mu, Q, 1.0)
        repaired = principal_decomposition(mu, shrunk, 1.0)
        for i, (a, b) in enumerate(zip(raw.coefficients, repaired.coefficients)):
            coefficients.add_row(i + 1, a, b)

        truncated = truncated_principal_solution(mu, Q, 1.0, threshold=1e-4)
        section.values.update(
            raw_solution=solve_unconstrained_mv(mu, Q, 1.0).tolist(),
            shrunk_solution=solve_unconstrained_mv(mu, shrunk, 1.0).tolist(),
            truncated_solution=truncated.tolist(),
        )
        return section

    def intermediate_step(self, report: Report) -> ReportSection:
        Q = two_asset_covariance()
        mu = np.array([1.0, 0.0])
        y = sinful_intermediate_step(mu, Q, 1.0)
        x = solve_unconstrained_mv(mu, Q, 1.0)
        section = report.section("3. Going the intermediate step", risk_budget=1.0)
        table = section.table(
            "Position along mu versus the analytic optimum",
            ["procedure", "x1", "x2", "variance", "sharpe"],
        )
        for label, position in (("intermediate step", y), ("analytic optimum", x)):
            table.add_row(
                label,
                position[0],
                position[1],
                Q.quadratic_form(position),
                sharpe_ratio(position, mu, Q),
            )
        return section

    def convexity(self, report: Report) -> ReportSection:
        Q = two_asset_covariance()
        mu = np.array([1.0, 0.0])
        section = report.section(
            "4. Failing to recognize convexity",
            sharpe_bound=float(np.sqrt(mu @ np.linalg.solve(Q.entries, mu))),
        )
        table = section.table(
            "Convex reformulation for several risk budgets",
            ["risk_budget", "sharpe", "variance / budget"],
        )
        for budget in SHARPE_BUDGETS:
            x = solve_sharpe_max(mu, Q, budget)
            table.add_row(budget, sharpe_ratio(x, mu, Q), Q.quadratic_form(x) / budget)

        direct = maximize_sharpe_directly(mu, Q, start=np.array([1.0, 1.0]))
        section.values["direct_sharpe"] = direct.sharpe
        section.values["direct_converged"] = direct.converged
        section.values["direct_iterations"] = direct.iterations
        section.values["direct_variance"] = Q.quadratic_form(direct.x)
        return section

    def wrong_solver(self, report: Report) -> ReportSection:
        problems = random_problems(count=3, n=4, seed=0)
        instances = [lift(problem)[0] for problem in problems]
        comparison = compare_solvers(
            instances, self.schedule, self.seeds, self.settings
        )
        section = report.section(
            "5. Using the wrong solver",
            instances=comparison.instances,
            seeds=list(comparison.seeds),
            ip_deterministic=comparison.ip_deterministic,
            annealing_mean_gap=comparison.annealing_mean_gap,
            annealing_gap_stddev=comparison.annealing_gap_stddev_across_seeds,
        )
        table = section.table(
            "Annealing objective per instance and seed",
            ["instance", "seed", "interior_point", "annealing", "relative_gap"],
        )
        for run in comparison.runs:
            table.add_row(
                run.instance,
                run.seed,
                comparison.ip_objectives[run.instance],
                run.objective,
                run.relative_gap,
            )
        return section

    def ignoring_the_lift(self, report: Report) -> ReportSection:
        problem = MeanVarianceProblem(
            mu=np.array([1.0, 0.5]),
            Q=two_asset_covariance(),
            risk_budget=1.0,
            costs=TransactionCosts(p=np.array([0.2, 0.2]), x0=np.array([0.5, 0.5])),
        )
        conic, lifting = lift(problem)
        result = solve(conic, self.settings)
        x = lifting.positions(result.x)
        t = lifting.auxiliary(result.x)
        oracle = grid_maximize_nonsmooth(problem)
        smooth, message = self._smooth_solver_on_kinks(problem)

        section = report.section(
            "6. Ignoring the lift",
            lifted_status=result.status.value,
            lifted_objective=result.objective,
            nonsmooth_objective_at_lifted_x=objective_nonsmooth(problem, x),
            grid_objective=oracle.objective,
            max_t_error=float(np.max(np.abs(t - np.abs(x - problem.costs.x0)))),
            smooth_solver_objective=objective_nonsmooth(problem, smooth),
            smooth_solver_message=message,
        )
        table = section.table("Positions", ["procedure", "x1", "x2"])
        table.add_row("lifted interior point", x[0], x[1])
        table.add_row("grid search", oracle.x[0], oracle.x[1])
        table.add_row("smooth solver on the kinked objective", smooth[0], smooth[1])
        return section

    def _smooth_solver_on_kinks(
        self, problem: MeanVarianceProblem
    ) -> Tuple[np.ndarray, str]:
        Q = problem.Q.entries
        outcome = optimize.minimize(
            lambda x: -objective_nonsmooth(problem, x),
            problem.costs.x0,
            method="SLSQP",
            constraints=[
                {"type": "ineq", "fun": lambda x: problem.risk_budget - x @ Q @ x}
            ],
        )
        return np.asarray(outcome.x, dtype=float), str(outcome.message)

    def solving_the_impossible(self, report: Report) -> ReportSection:
        Q = two_asset_covariance()
        mu = np.array([1.0, 1.0])
        x_mv, min_variance = min_variance_fully_invested(Q)
        section = report.section(
            "7. Solving the impossible",
            min_variance=min_variance,
            min_variance_portfolio=x_mv.tolist(),
        )
        table = section.table(
            "Fully invested problem across risk budgets",
            ["risk_budget", "phase_one", "status", "certificate", "generic_solver"],
        )
        for budget in FEASIBILITY_BUDGETS:
            problem = MeanVarianceProblem(mu, Q, budget, fully_invested=True)
            conic, _ = lift(problem)
            start = phase_one(conic, self.settings)
            result = solve(conic, self.settings)
            table.add_row(
                budget,
                "feasible" if start.feasible else "infeasible",
                result.status.value,
                start.certificate,
                self._generic_solver_message(problem),
            )
        return section

    @staticmethod
    def _generic_solver_message(problem: MeanVarianceProblem) -> str:
        Q = problem.Q.entries
        outcome = optimize.minimize(
            lambda x: -(problem.mu @ x),
            np.zeros(problem.n),
            method="SLSQP",
            constraints=[
                {"type": "ineq", "fun": lambda x: problem.risk_budget - x @ Q @ x},
                {"type": "eq", "fun": lambda x: np.sum(x) - 1.0},
            ],
        )
        return "success" if outcome.success else str(outcome.message)
