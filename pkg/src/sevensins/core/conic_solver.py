"""
Primal log-barrier interior-point solver for ConicProblem.

The solver minimizes tau * f^T w - sum log(slack_i) for a growing barrier
parameter tau, using Newton steps on the KKT system with the equality
constraints kept explicit. A phase-I problem that minimizes a common slack s
over the relaxed constraints supplies a strictly feasible start or shows that
there is none.

Everything here is plain numpy/scipy with a fixed operation order, so
identical inputs give bitwise-identical results on the same platform.
"""

import logging
import warnings
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .domain.errors import (
    IterationLimitError,
    NoConvergenceError,
    ValidationError,
)
from .domain.results import SolveResult, SolveStatus
from .models import ConicProblem

logger = logging.getLogger(__name__)

_MIN_STEP = 1e-14
# relaxation applied to a feasible set with empty interior, in units of the margin
_RELAX_FACTOR = 5.0
_EQUALITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SolverSettings:
    """
    Interior-point solver settings.

    Attributes:
        gap_tolerance: Stop when (number of barrier terms) / tau falls below this
        max_outer_iterations: Maximum barrier-parameter increases
        max_newton_iterations: Maximum Newton steps per centering
        barrier_multiplier: Factor applied to tau after each centering
        initial_barrier: Starting tau
        line_search_backtrack: Step shrink factor in the line search
        line_search_slope: Armijo sufficient-decrease constant
        infeasibility_margin: Phase-I slack below which a problem counts as feasible
        newton_tolerance: Stop centering when half the squared Newton decrement
            drops below this
    """

    gap_tolerance: float = 1e-8
    max_outer_iterations: int = 100
    max_newton_iterations: int = 50
    barrier_multiplier: float = 10.0
    initial_barrier: float = 1.0
    line_search_backtrack: float = 0.5
    line_search_slope: float = 0.01
    infeasibility_margin: float = 1e-9
    newton_tolerance: float = 1e-10

    def __post_init__(self) -> None:
        for item in fields(self):
            value = getattr(self, item.name)
            if not value > 0:
                raise ValidationError(
                    f"solver setting {item.name} must be positive, got {value}"
                )
        if self.barrier_multiplier <= 1.0:
            raise ValidationError("barrier_multiplier must exceed 1")
        if not 0.0 < self.line_search_backtrack < 1.0:
            raise ValidationError("line_search_backtrack must lie in (0, 1)")
        if not 0.0 < self.line_search_slope < 0.5:
            raise ValidationError("line_search_slope must lie in (0, 0.5)")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SolverSettings":
        """Build settings from a mapping, ignoring unknown keys."""
        known = {item.name for item in fields(cls)}
        values = {}
        for key, value in data.items():
            if key not in known:
                continue
            caster = int if key.startswith("max_") else float
            try:
                values[key] = caster(value)
            except (TypeError, ValueError) as e:
                raise ValidationError(f"invalid value for {key}: {value!r}") from e
        return cls(**values)


@dataclass(frozen=True, eq=False)
class PhaseOneResult:
    """
    Outcome of the phase-I feasibility search.

    Attributes:
        feasible: Whether the feasible set is nonempty (up to the margin)
        witness: A feasible point when ``feasible``; strictly feasible when
            ``strictly_feasible`` is also set
        certificate: Final phase-I slack; for infeasible problems a positive
            lower bound on the smallest achievable violation
        strictly_feasible: Whether the witness has positive slack in every
            inequality
    """

    feasible: bool
    witness: Optional[np.ndarray]
    certificate: float
    strictly_feasible: bool
    outer_iterations: int = 0
    newton_steps: int = 0


@dataclass(frozen=True, eq=False)
class _BarrierProgram:
    """
    minimize f^T w  s.t.  w_R^T Q w_R + d^T w <= r,  G w <= h,  A w = b
    """

    f: np.ndarray
    Q: np.ndarray
    rows: np.ndarray
    d: np.ndarray
    r: float
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray

    @classmethod
    def from_conic(cls, problem: ConicProblem) -> "_BarrierProgram":
        return cls(
            f=-problem.c,
            Q=problem.covariance,
            rows=problem.risk_rows,
            d=np.zeros(problem.dim),
            r=problem.risk_budget,
            A=problem.A,
            b=problem.b,
            G=problem.G,
            h=problem.h,
        )

    @classmethod
    def phase_one(cls, problem: ConicProblem) -> "_BarrierProgram":
        """Variables (z, s): minimize s with every inequality relaxed by s."""
        m = problem.dim
        f = np.zeros(m + 1)
        f[-1] = 1.0
        d = np.zeros(m + 1)
        d[-1] = -1.0
        return cls(
            f=f,
            Q=problem.covariance,
            rows=problem.risk_rows,
            d=d,
            r=problem.risk_budget,
            A=np.hstack([problem.A, np.zeros((problem.n_equalities, 1))]),
            b=problem.b,
            G=np.hstack([problem.G, -np.ones((problem.n_inequalities, 1))]),
            h=problem.h,
        )

    def relaxed(self, delta: float) -> "_BarrierProgram":
        return _BarrierProgram(
            f=self.f,
            Q=self.Q,
            rows=self.rows,
            d=self.d,
            r=self.r + delta,
            A=self.A,
            b=self.b,
            G=self.G,
            h=self.h + delta,
        )

    @property
    def n_terms(self) -> int:
        return 1 + self.G.shape[0]

    def quadratic_value(self, w: np.ndarray) -> float:
        w_r = w[self.rows]
        return float(w_r @ self.Q @ w_r + self.d @ w)

    def slacks(self, w: np.ndarray) -> Tuple[float, np.ndarray]:
        return self.r - self.quadratic_value(w), self.h - self.G @ w

    def max_constraint(self, w: np.ndarray) -> float:
        """Largest inequality residual g_i(w) (negative when strictly feasible)."""
        quad_slack, lin_slack = self.slacks(w)
        worst = -quad_slack
        if lin_slack.size:
            worst = max(worst, float(np.max(-lin_slack)))
        return worst

    def derivatives(
        self, w: np.ndarray, tau: float, quad_slack: float, lin_slack: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        m = w.size
        quad_grad = self.d.copy()
        quad_grad[self.rows] += 2.0 * (self.Q @ w[self.rows])
        quad_hess = np.zeros((m, m))
        quad_hess[np.ix_(self.rows, self.rows)] = 2.0 * self.Q

        inv_lin = 1.0 / lin_slack
        grad = tau * self.f + quad_grad / quad_slack + self.G.T @ inv_lin
        hess = (
            quad_hess / quad_slack
            + np.outer(quad_grad, quad_grad) / quad_slack**2
            + (self.G.T * inv_lin**2) @ self.G
        )
        return grad, hess


class _RunOutcome(str, Enum):
    CONVERGED = "converged"
    STOPPED = "stopped"
    LIMIT = "limit"
    FAILED = "failed"


@dataclass(frozen=True, eq=False)
class _BarrierRun:
    w: np.ndarray
    tau: float
    outer_iterations: int
    newton_steps: int
    outcome: _RunOutcome


# monitor(w, tau, centered) -> True to stop early
Monitor = Callable[[np.ndarray, float, bool], bool]


def _newton_direction(
    program: _BarrierProgram, w: np.ndarray, grad: np.ndarray, hess: np.ndarray
) -> Optional[np.ndarray]:
    m = w.size
    p = program.A.shape[0]
    if p:
        kkt = np.zeros((m + p, m + p))
        kkt[:m, :m] = hess
        kkt[:m, m:] = program.A.T
        kkt[m:, :m] = program.A
        rhs = np.concatenate([-grad, program.b - program.A @ w])
    else:
        kkt, rhs = hess, -grad
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            solution = sla.solve(kkt, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.debug("KKT solve failed: %s", e)
        return None
    step = solution[:m]
    if not np.all(np.isfinite(step)):
        return None
    return step


def _line_search(
    program: _BarrierProgram,
    w: np.ndarray,
    step: np.ndarray,
    tau: float,
    slope: float,
    quad_slack: float,
    lin_slack: np.ndarray,
    settings: SolverSettings,
) -> float:
    """Backtrack until the step stays interior and satisfies Armijo."""
    w_r, step_r = w[program.rows], step[program.rows]
    quad_rate = float(2.0 * (w_r @ program.Q @ step_r) + program.d @ step)
    quad_curve = float(step_r @ program.Q @ step_r)
    lin_rate = program.G @ step
    objective_rate = float(program.f @ step)

    s = 1.0
    while True:
        new_quad = quad_slack - s * (quad_rate + s * quad_curve)
        new_lin = lin_slack - s * lin_rate
        if new_quad > 0.0 and np.all(new_lin > 0.0):
            # barrier change evaluated through slack ratios
            change = (
                tau * s * objective_rate
                - np.log(new_quad / quad_slack)
                - float(np.sum(np.log(new_lin / lin_slack)))
            )
            if change <= settings.line_search_slope * s * slope:
                return s
        s *= settings.line_search_backtrack
        if s < _MIN_STEP:
            return 0.0


def _center(
    program: _BarrierProgram,
    w: np.ndarray,
    tau: float,
    settings: SolverSettings,
    monitor: Optional[Monitor],
) -> Tuple[np.ndarray, int, _RunOutcome]:
    steps = 0
    for _ in range(settings.max_newton_iterations):
        quad_slack, lin_slack = program.slacks(w)
        grad, hess = program.derivatives(w, tau, quad_slack, lin_slack)
        step = _newton_direction(program, w, grad, hess)
        if step is None:
            return w, steps, _RunOutcome.FAILED
        slope = float(grad @ step)
        if -slope / 2.0 <= settings.newton_tolerance:
            return w, steps, _RunOutcome.CONVERGED
        length = _line_search(
            program, w, step, tau, slope, quad_slack, lin_slack, settings
        )
        if length == 0.0:
            logger.debug("Line search stalled at tau=%.3e", tau)
            return w, steps, _RunOutcome.FAILED
        w = w + length * step
        steps += 1
        if monitor is not None and monitor(w, tau, False):
            return w, steps, _RunOutcome.STOPPED
    logger.debug(
        "Centering used all %d Newton steps at tau=%.3e",
        settings.max_newton_iterations,
        tau,
    )
    return w, steps, _RunOutcome.LIMIT


def _barrier(
    program: _BarrierProgram,
    w: np.ndarray,
    settings: SolverSettings,
    gap_tolerance: float,
    monitor: Optional[Monitor] = None,
) -> _BarrierRun:
    tau = settings.initial_barrier
    newton_total = 0
    for outer in range(1, settings.max_outer_iterations + 1):
        w, steps, outcome = _center(program, w, tau, settings, monitor)
        newton_total += steps
        if outcome is not _RunOutcome.CONVERGED:
            return _BarrierRun(w, tau, outer, newton_total, outcome)
        gap = program.n_terms / tau
        logger.debug(
            "Barrier stage %d: tau=%.3e gap=%.3e newton=%d", outer, tau, gap, steps
        )
        if monitor is not None and monitor(w, tau, True):
            return _BarrierRun(w, tau, outer, newton_total, _RunOutcome.STOPPED)
        if gap <= gap_tolerance:
            return _BarrierRun(w, tau, outer, newton_total, _RunOutcome.CONVERGED)
        tau *= settings.barrier_multiplier
    return _BarrierRun(
        w, tau, settings.max_outer_iterations, newton_total, _RunOutcome.LIMIT
    )


def _equality_start(problem: ConicProblem) -> Tuple[np.ndarray, float]:
    """Least-norm solution of A z = b and its largest residual."""
    if problem.n_equalities == 0:
        return np.zeros(problem.dim), 0.0
    z, *_ = np.linalg.lstsq(problem.A, problem.b, rcond=None)
    return z, float(np.max(np.abs(problem.A @ z - problem.b)))


def _auxiliary_columns(problem: ConicProblem) -> np.ndarray:
    """
    Variables outside the risk rows and the equalities whose growth only
    loosens inequalities, such as the cost auxiliaries t of ``lift``.
    """
    candidates = np.setdiff1d(np.arange(problem.dim), problem.risk_rows)
    if problem.n_equalities:
        candidates = candidates[np.all(problem.A[:, candidates] == 0.0, axis=0)]
    return candidates[np.all(problem.G[:, candidates] <= 0.0, axis=0)]


@dataclass(frozen=True, eq=False)
class _Reduction:
    """A problem with its auxiliary variables and the rows they touch removed."""

    problem: ConicProblem
    keep: np.ndarray
    auxiliary: np.ndarray
    touched: np.ndarray

    @classmethod
    def of(cls, problem: ConicProblem, auxiliary: np.ndarray) -> "_Reduction":
        keep = np.setdiff1d(np.arange(problem.dim), auxiliary)
        touched = np.any(problem.G[:, auxiliary] < 0.0, axis=1)
        reduced = ConicProblem(
            c=problem.c[keep],
            L=problem.L,
            risk_rows=np.searchsorted(keep, problem.risk_rows),
            risk_budget=problem.risk_budget,
            A=problem.A[:, keep],
            b=problem.b,
            G=problem.G[np.ix_(~touched, keep)],
            h=problem.h[~touched],
        )
        return cls(reduced, keep, auxiliary, touched)

    def extend(self, original: ConicProblem, partial: np.ndarray) -> np.ndarray:
        """
        Complete a point of the reduced problem so every dropped row has slack
        at least one. Auxiliaries are nonnegative, so each row only needs its
        own most negative coefficient to cover the residual.
        """
        z = np.zeros(original.dim)
        z[self.keep] = partial
        rows = np.flatnonzero(self.touched)
        residual = original.G[np.ix_(rows, self.keep)] @ partial - original.h[rows]
        for j in self.auxiliary:
            coefficients = original.G[rows, j]
            active = coefficients < 0.0
            if np.any(active):
                need = (residual[active] + 1.0) / -coefficients[active]
                z[j] = max(1.0, float(np.max(need)))
        return z


def phase_one(
    problem: ConicProblem, settings: Optional[SolverSettings] = None
) -> PhaseOneResult:
    """
    Find a strictly feasible point or show the feasible set is empty.

    Minimizes s subject to z_R^T Q z_R - risk_budget <= s, G z - h <= s and
    A z = b. The problem is feasible when the optimal s is at most the
    infeasibility margin; it stops early as soon as s drops below minus the
    margin, or as soon as the duality bound proves s stays above the margin.

    Variables that enter only inequality rows, all with nonpositive
    coefficients, would let the barrier run off to infinity. They are left
    out of the search and set afterwards from the witness.

    Raises:
        IterationLimitError: If the barrier loop runs out of iterations
        NoConvergenceError: If a Newton system cannot be solved or the line
            search stalls
    """
    settings = settings or SolverSettings()
    auxiliary = _auxiliary_columns(problem)
    if auxiliary.size == 0:
        return _search(problem, settings)

    reduction = _Reduction.of(problem, auxiliary)
    logger.debug(
        "Phase I: %d auxiliary variables and %d rows set aside",
        auxiliary.size,
        int(np.count_nonzero(reduction.touched)),
    )
    start = _search(reduction.problem, settings)
    if start.witness is None:
        return start
    return replace(start, witness=reduction.extend(problem, start.witness))


def _search(problem: ConicProblem, settings: SolverSettings) -> PhaseOneResult:
    margin = settings.infeasibility_margin

    z0, residual = _equality_start(problem)
    scale = max(1.0, float(np.max(np.abs(problem.b), initial=0.0)))
    if residual > _EQUALITY_TOLERANCE * scale:
        logger.debug("Phase I: equality system is inconsistent")
        return PhaseOneResult(False, None, residual, False)

    program = _BarrierProgram.phase_one(problem)
    worst = program.max_constraint(np.append(z0, 0.0))
    if worst < -margin:
        logger.debug("Phase I: start point is strictly feasible (slack %.3e)", -worst)
        return PhaseOneResult(True, z0, worst, True)

    w0 = np.append(z0, worst + 1.0)

    def monitor(w: np.ndarray, tau: float, centered: bool) -> bool:
        if w[-1] < -margin:
            return True
        return centered and w[-1] - program.n_terms / tau > margin

    target = min(settings.gap_tolerance, margin)
    run = _barrier(program, w0, settings, target, monitor)
    if run.outcome is _RunOutcome.LIMIT:
        raise IterationLimitError(
            f"phase I did not settle within {settings.max_outer_iterations} outer "
            f"and {settings.max_newton_iterations} Newton iterations per stage"
        )
    if run.outcome is _RunOutcome.FAILED:
        raise NoConvergenceError(
            "phase I Newton step failed or its line search stalled"
        )

    z, s = run.w[:-1], float(run.w[-1])
    lower_bound = s - program.n_terms / run.tau
    logger.debug(
        "Phase I finished: s=%.3e lower bound=%.3e after %d stages",
        s,
        lower_bound,
        run.outer_iterations,
    )
    if s < -margin:
        return PhaseOneResult(True, z, s, True, run.outer_iterations, run.newton_steps)
    if lower_bound > margin:
        return PhaseOneResult(
            False, None, lower_bound, False, run.outer_iterations, run.newton_steps
        )
    return PhaseOneResult(True, z, s, False, run.outer_iterations, run.newton_steps)


def _failed(status: SolveStatus) -> SolveResult:
    return SolveResult(status, None, float("nan"), float("nan"))


def _solve_zero_budget(problem: ConicProblem) -> SolveResult:
    # x^T Q x <= 0 with Q positive definite pins the risk rows at zero
    free = np.setdiff1d(np.arange(problem.dim), problem.risk_rows)
    z = np.zeros(problem.dim)
    if free.size:
        outcome = optimize.linprog(
            -problem.c[free],
            A_ub=problem.G[:, free] if problem.n_inequalities else None,
            b_ub=problem.h if problem.n_inequalities else None,
            A_eq=problem.A[:, free] if problem.n_equalities else None,
            b_eq=problem.b if problem.n_equalities else None,
            bounds=[(None, None)] * free.size,
            method="highs",
        )
        if outcome.status == 0:
            z[free] = outcome.x
        elif outcome.status == 2:
            return SolveResult(
                SolveStatus.INFEASIBLE, None, float("nan"), problem.max_violation(z)
            )
        else:
            logger.warning("Zero-budget presolve LP ended with: %s", outcome.message)
            return _failed(SolveStatus.NUMERICAL_FAILURE)
    violation = problem.max_violation(z)
    if violation > _EQUALITY_TOLERANCE:
        return SolveResult(SolveStatus.INFEASIBLE, None, float("nan"), violation)
    return SolveResult(SolveStatus.OPTIMAL, z, problem.objective(z), 0.0)


def solve(
    problem: ConicProblem, settings: Optional[SolverSettings] = None
) -> SolveResult:
    """
    Maximize c^T z over a ConicProblem.

    Outcomes are reported through the result status; nothing is raised for
    problem content. A stalled line search is a NumericalFailure and a
    centering that exhausts its Newton steps is an IterationLimit; only a
    run that reaches the gap tolerance is Optimal.

    Args:
        problem: Canonical problem, usually produced by ``lift``
        settings: Solver settings, defaults when omitted

    Returns:
        SolveResult in the problem's own (possibly lifted) coordinates
    """
    settings = settings or SolverSettings()
    if problem.risk_budget == 0.0:
        return _solve_zero_budget(problem)

    try:
        start = phase_one(problem, settings)
    except IterationLimitError as e:
        logger.debug("Phase I hit its iteration limit: %s", e)
        return _failed(SolveStatus.ITERATION_LIMIT)
    except NoConvergenceError as e:
        logger.debug("Phase I failed: %s", e)
        return _failed(SolveStatus.NUMERICAL_FAILURE)

    if not start.feasible:
        logger.debug("Problem is infeasible, certificate %.3e", start.certificate)
        return SolveResult(
            SolveStatus.INFEASIBLE,
            None,
            float("nan"),
            start.certificate,
            start.outer_iterations,
            start.newton_steps,
        )

    program = _BarrierProgram.from_conic(problem)
    if not start.strictly_feasible:
        # feasible set has (numerically) empty interior: widen it slightly
        delta = (
            max(start.certificate, 0.0)
            + _RELAX_FACTOR * settings.infeasibility_margin
        )
        logger.debug("Relaxing constraints by %.3e around a thin feasible set", delta)
        program = program.relaxed(delta)

    run = _barrier(program, start.witness, settings, settings.gap_tolerance)
    outer = start.outer_iterations + run.outer_iterations
    newton = start.newton_steps + run.newton_steps
    z = run.w
    objective = problem.objective(z)
    if run.outcome is _RunOutcome.FAILED:
        return SolveResult(
            SolveStatus.NUMERICAL_FAILURE, z, objective, float("nan"), outer, newton
        )
    gap = program.n_terms / run.tau
    if run.outcome is _RunOutcome.CONVERGED:
        status = SolveStatus.OPTIMAL
    else:
        status = SolveStatus.ITERATION_LIMIT
    logger.debug(
        "Interior point finished: status=%s objective=%.10g gap=%.3e",
        status.value,
        objective,
        gap,
    )
    return SolveResult(status, z, objective, gap, outer, newton)
