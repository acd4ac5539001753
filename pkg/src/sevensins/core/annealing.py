"""
Simulated annealing for ConicProblem, kept as a baseline to compare the
interior-point solver against.
"""

import logging
import time
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from .conic_solver import SolverSettings, phase_one, solve
from .domain.errors import (
    InfeasibleStartError,
    IterationLimitError,
    NoConvergenceError,
    ValidationError,
)
from .domain.results import SolveResult, SolveStatus
from .models import ConicProblem
from .rng import SplitMix64

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42
# witnesses from a thin feasible set may sit this far outside it
_START_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AnnealSchedule:
    """
    Geometric cooling schedule.

    Attributes:
        initial_temperature: Starting temperature
        cooling_factor: Temperature multiplier per level, in (0, 1)
        steps_per_temperature: Proposals per temperature level
        step_scale: Proposal standard deviation per unit temperature
        min_temperature: Stop once the temperature drops below this
        seed: Unsigned 64-bit generator seed
    """

    initial_temperature: float = 1.0
    cooling_factor: float = 0.95
    steps_per_temperature: int = 200
    step_scale: float = 0.25
    min_temperature: float = 1e-4
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        for item in fields(self):
            if item.name == "seed":
                continue
            value = getattr(self, item.name)
            if not value > 0:
                raise ValidationError(
                    f"schedule field {item.name} must be positive, got {value}"
                )
        if self.cooling_factor >= 1.0:
            raise ValidationError("cooling_factor must be below 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @property
    def levels(self) -> int:
        """Number of temperature levels the schedule visits."""
        if self.min_temperature > self.initial_temperature:
            return 0
        ratio = np.log(self.min_temperature / self.initial_temperature)
        return int(np.floor(ratio / np.log(self.cooling_factor))) + 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AnnealSchedule":
        """Build a schedule from a mapping, ignoring unknown keys."""
        integer_fields = {"steps_per_temperature", "seed"}
        values: Dict[str, Any] = {}
        for item in fields(cls):
            if item.name not in data:
                continue
            caster = int if item.name in integer_fields else float
            try:
                values[item.name] = caster(data[item.name])
            except (TypeError, ValueError) as e:
                raise ValidationError(
                    f"invalid value for {item.name}: {data[item.name]!r}"
                ) from e
        return cls(**values)


@dataclass(frozen=True)
class AnnealingRun:
    """One annealing run in a solver comparison."""

    instance: int
    seed: int
    objective: float
    relative_gap: float
    seconds: float


@dataclass(frozen=True)
class SolverComparison:
    """
    Interior point against annealing over a set of instances and seeds.

    Gaps are relative shortfalls (ip - annealing) / |ip| of the objective.
    """

    instances: int
    seeds: Tuple[int, ...]
    annealing_mean_gap: float
    annealing_gap_stddev_across_seeds: float
    ip_deterministic: bool
    wall_time_ratio: float
    ip_objectives: Tuple[float, ...] = ()
    runs: Tuple[AnnealingRun, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instances": self.instances,
            "seeds": list(self.seeds),
            "annealing_mean_gap": self.annealing_mean_gap,
            "annealing_gap_stddev_across_seeds": self.annealing_gap_stddev_across_seeds,
            "ip_deterministic": self.ip_deterministic,
            "wall_time_ratio": self.wall_time_ratio,
            "ip_objectives": list(self.ip_objectives),
            "runs": [asdict(run) for run in self.runs],
        }


def _feasible(problem: ConicProblem, z: np.ndarray) -> bool:
    if problem.risk(z) > problem.risk_budget:
        return False
    return not problem.n_inequalities or bool(np.all(problem.G @ z <= problem.h))


def _start_point(problem: ConicProblem) -> np.ndarray:
    try:
        start = phase_one(problem)
    except (IterationLimitError, NoConvergenceError) as e:
        raise InfeasibleStartError(f"could not find a feasible start: {e}") from e
    if not start.feasible or start.witness is None:
        raise InfeasibleStartError(
            f"problem is infeasible (phase-I certificate {start.certificate:.3e})"
        )
    if problem.max_violation(start.witness) > _START_TOLERANCE:
        raise InfeasibleStartError("phase-I witness violates the constraints")
    return np.array(start.witness, dtype=float)


def anneal(
    problem: ConicProblem, schedule: Optional[AnnealSchedule] = None
) -> SolveResult:
    """
    Maximize c^T z by simulated annealing.

    Proposals are Gaussian steps of standard deviation step_scale * T taken
    inside the null space of the equality constraints; proposals that leave
    the feasible set are rejected and uphill moves are accepted with the
    Metropolis rule exp(-dE / T), energy being the negated objective. The
    best point seen is returned with status IterationLimit because nothing
    certifies it as optimal.

    Raises:
        InfeasibleStartError: If no feasible starting point exists
    """
    schedule = schedule or AnnealSchedule()
    generator = SplitMix64(schedule.seed)

    if problem.n_equalities:
        basis = sla.null_space(problem.A)
    else:
        basis = np.eye(problem.dim)
    directions = basis.shape[1]

    current = _start_point(problem)
    current_objective = problem.objective(current)
    best, best_objective = current.copy(), current_objective

    temperature = schedule.initial_temperature
    levels = proposals = accepted = 0
    while temperature >= schedule.min_temperature and directions:
        levels += 1
        steps = schedule.steps_per_temperature
        draws = generator.normal(steps * directions).reshape(steps, directions)
        thresholds = generator.uniform(steps)
        scale = schedule.step_scale * temperature
        for draw, threshold in zip(draws, thresholds):
            proposals += 1
            candidate = current + scale * (basis @ draw)
            if not _feasible(problem, candidate):
                continue
            objective = problem.objective(candidate)
            gain = objective - current_objective
            if gain >= 0.0 or threshold < np.exp(gain / temperature):
                current, current_objective = candidate, objective
                accepted += 1
                if objective > best_objective:
                    best, best_objective = candidate.copy(), objective
        temperature *= schedule.cooling_factor

    logger.debug(
        "Annealing seed=%d: %d levels, %d/%d accepted, best=%.10g",
        schedule.seed,
        levels,
        accepted,
        proposals,
        best_objective,
    )
    return SolveResult(
        status=SolveStatus.ITERATION_LIMIT,
        x=best,
        objective=best_objective,
        gap_estimate=float("nan"),
        outer_iterations=levels,
        newton_steps_total=proposals,
        solver="annealing",
    )


def _relative_gap(reference: float, value: float) -> float:
    return (reference - value) / max(abs(reference), 1e-12)


def compare_solvers(
    instances: Sequence[ConicProblem],
    schedule: Optional[AnnealSchedule] = None,
    seeds: Sequence[int] = (DEFAULT_SEED,),
    settings: Optional[SolverSettings] = None,
) -> SolverComparison:
    """
    Run the interior-point solver and annealing on the same instances.

    The interior-point solver runs twice per instance and the two results are
    compared bitwise; annealing runs once per seed. Runs are reported in
    instance order, then seed order.

    Raises:
        ValidationError: If an instance is not solved to optimality
    """
    schedule = schedule or AnnealSchedule()
    settings = settings or SolverSettings()
    if not instances:
        raise ValidationError("need at least one instance to compare")
    if not seeds:
        raise ValidationError("need at least one annealing seed")

    deterministic = True
    ip_seconds = anneal_seconds = 0.0
    ip_objectives: List[float] = []
    runs: List[AnnealingRun] = []
    spreads: List[float] = []
    for index, problem in enumerate(instances):
        started = time.perf_counter()
        first = solve(problem, settings)
        ip_seconds += time.perf_counter() - started
        second = solve(problem, settings)
        if not first.is_optimal:
            raise ValidationError(
                f"instance {index} was not solved to optimality: {first.status.value}"
            )
        if not first.same_as(second):
            logger.warning("Interior-point runs differ on instance %d", index)
            deterministic = False
        ip_objectives.append(first.objective)

        gaps = []
        for seed in seeds:
            started = time.perf_counter()
            result = anneal(problem, replace(schedule, seed=int(seed)))
            elapsed = time.perf_counter() - started
            anneal_seconds += elapsed
            gap = _relative_gap(first.objective, result.objective)
            gaps.append(gap)
            runs.append(AnnealingRun(index, int(seed), result.objective, gap, elapsed))
        spreads.append(float(np.std(gaps)))

    all_gaps = np.array([run.relative_gap for run in runs])
    ratio = anneal_seconds / ip_seconds if ip_seconds > 0.0 else float("inf")
    comparison = SolverComparison(
        instances=len(instances),
        seeds=tuple(int(seed) for seed in seeds),
        annealing_mean_gap=float(np.mean(all_gaps)),
        annealing_gap_stddev_across_seeds=float(np.mean(spreads)),
        ip_deterministic=deterministic,
        wall_time_ratio=ratio,
        ip_objectives=tuple(ip_objectives),
        runs=tuple(runs),
    )
    logger.info(
        "Compared solvers on %d instances: mean gap %.3e, time ratio %.1f",
        comparison.instances,
        comparison.annealing_mean_gap,
        comparison.wall_time_ratio,
    )
    return comparison
