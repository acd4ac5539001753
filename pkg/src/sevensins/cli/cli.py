"""
Command-line interface for sevensins.

Exit codes: 0 ok, 2 indefinite covariance, 3 near-singular covariance,
4 infeasible problem, 64 usage, 65 data format, 70 internal error.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import yaml

from .. import __version__
from ..adapters.persistence.csv_io import read_covariance, read_returns, write_frame
from ..application.factory import ApplicationFactory
from ..core.analytic import min_variance_fully_invested, sharpe_ratio
from ..core.annealing import AnnealSchedule, compare_solvers
from ..core.covariance import (
    DEFAULT_NEAR_SINGULAR_THRESHOLD,
    CovarianceVerdict,
    ReturnSample,
    clip_eigenvalues,
    diagnose,
    estimate_sample_covariance,
    shrink,
)
from ..core.domain.errors import (
    DataFormatError,
    NotPositiveDefiniteError,
    SevenSinsError,
    UsageError,
    ZeroPositionError,
)
from ..core.domain.report import Report
from ..core.domain.results import SolveStatus
from ..core.fixtures import random_problems
from ..core.linalg import SymmetricMatrix
from ..core.models import MeanVarianceProblem, TransactionCosts, lift, validate
from ..core.services.backtest import BacktestConfig, report_to_frame, turnover_stats
from ..utils.logging_utils import resolve_level, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INDEFINITE = 2
EXIT_NEAR_SINGULAR = 3
EXIT_INFEASIBLE = 4
EXIT_USAGE = 64
EXIT_INTERNAL = 70

DEFAULT_COST_SWEEP = "0,0.001,0.01,0.1"
VERDICT_EXIT_CODES = {
    CovarianceVerdict.POSITIVE_DEFINITE: EXIT_OK,
    CovarianceVerdict.INDEFINITE: EXIT_INDEFINITE,
    CovarianceVerdict.NEAR_SINGULAR: EXIT_NEAR_SINGULAR,
}


class SevenSinsGroup(click.Group):
    """Click group that maps errors onto the documented exit codes."""

    def parse_args(self, ctx: click.Context, args: List[str]) -> List[str]:
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as e:
            e.show()
            ctx.exit(EXIT_USAGE)

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.exceptions.Abort):
            raise
        except click.UsageError as e:
            e.show()
            ctx.exit(EXIT_USAGE)
        except click.ClickException as e:
            e.show()
            ctx.exit(EXIT_USAGE)
        except SevenSinsError as e:
            logger.debug("Command failed", exc_info=True)
            click.echo(f"Error: {e}", err=True)
            ctx.exit(e.exit_code)
        except Exception as e:
            logger.debug("Unhandled error", exc_info=True)
            click.echo(f"Internal error: {e}", err=True)
            ctx.exit(EXIT_INTERNAL)


def parse_vector(text: Optional[str], name: str) -> Optional[np.ndarray]:
    """Parse a comma-separated list of floats."""
    if text is None:
        return None
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated numbers: {e}") from e
    if not values:
        raise click.BadParameter("expected at least one number", param_hint=name)
    return np.array(values)


def _broadcast(values: np.ndarray, n: int, name: str) -> np.ndarray:
    if values.size == 1:
        return np.full(n, float(values[0]))
    if values.size != n:
        raise UsageError(f"{name} has {values.size} entries for {n} assets")
    return values


def _asset_names(sample: Optional[ReturnSample], n: int) -> Tuple[str, ...]:
    if sample is not None and sample.assets is not None:
        return sample.assets
    return tuple(f"asset_{i + 1}" for i in range(n))


def _load_covariance(
    input_path: Optional[Path], covariance_path: Optional[Path]
) -> Tuple[SymmetricMatrix, Optional[ReturnSample]]:
    if (input_path is None) == (covariance_path is None):
        raise UsageError("give exactly one of --input and --covariance")
    if covariance_path is not None:
        return read_covariance(covariance_path), None
    sample = read_returns(input_path)
    return estimate_sample_covariance(sample), sample


def _repair(
    Q: SymmetricMatrix, repair: str, kappa: float, floor: float
) -> SymmetricMatrix:
    if repair == "shrink":
        return shrink(Q, kappa)
    if repair == "clip":
        return clip_eigenvalues(Q, floor)
    return Q


def _emit(ctx: click.Context, report: Report) -> None:
    """Render a report to stdout or --output and exit with its code."""
    params = ctx.find_root().obj
    formatter = ApplicationFactory.create_report_formatter(params["format"])
    content = formatter.format_report(report)
    if params["output"] is not None:
        path = formatter.write_report(content, params["output"])
        logger.info("Report written to %s", path)
    else:
        click.echo(content, nl=False)
    if report.message and report.exit_code != EXIT_OK:
        click.echo(report.message, err=True)
    ctx.exit(report.exit_code)


@click.group(cls=SevenSinsGroup)
@click.version_option(__version__, prog_name="sevensins")
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging")
@click.option("--quiet", "-q", is_flag=True, help="Log errors only")
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["table", "json"]),
    default="table",
    show_default=True,
    help="Report format",
)
@click.option(
    "--output",
    "-o",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Write the report to a file instead of stdout",
)
@click.pass_context
def cli(
    ctx: click.Context,
    verbose: bool,
    quiet: bool,
    output_format: str,
    output: Optional[Path],
) -> None:
    """Mean-variance portfolio optimization and its seven classic mistakes."""
    if verbose and quiet:
        raise click.UsageError("cannot use --quiet and --verbose together")
    setup_logging(resolve_level(verbose, quiet))
    ctx.obj = {"format": output_format, "output": output}


def _data_options(func):
    func = click.option(
        "--covariance",
        type=click.Path(dir_okay=False, path_type=Path),
        help="Headerless n x n covariance CSV",
    )(func)
    func = click.option(
        "--input",
        "input_path",
        type=click.Path(dir_okay=False, path_type=Path),
        help="Returns CSV with a 'date,<asset>,...' header",
    )(func)
    return func


@cli.command("diagnose")
@_data_options
@click.option(
    "--threshold",
    type=float,
    default=DEFAULT_NEAR_SINGULAR_THRESHOLD,
    show_default=True,
    help="Condition number above which the matrix is near-singular",
)
@click.pass_context
def diagnose_command(
    ctx: click.Context,
    input_path: Optional[Path],
    covariance: Optional[Path],
    threshold: float,
) -> None:
    """Classify a covariance matrix by its spectrum."""
    Q, _ = _load_covariance(input_path, covariance)
    diagnosis = diagnose(Q, threshold)
    report = Report(command="diagnose", exit_code=VERDICT_EXIT_CODES[diagnosis.verdict])
    values = diagnosis.to_dict()
    if values["offending_eigenvector"] is None:
        del values["offending_eigenvector"]
    report.section("Covariance diagnosis", n=Q.n, threshold=threshold, **values)
    if report.exit_code != EXIT_OK:
        report.message = f"covariance verdict: {diagnosis.verdict.value}"
    _emit(ctx, report)


@cli.command("solve")
@_data_options
@click.option("--mu", help="Expected returns, comma separated (default: sample mean)")
@click.option("--risk-budget", type=float, required=True, help="Variance budget")
@click.option("--fully-invested", is_flag=True, help="Require positions to sum to 1")
@click.option("--long-only", is_flag=True, help="Require nonnegative positions")
@click.option("--costs", help="Cost rate per unit traded, one value or one per asset")
@click.option("--x0", help="Incumbent position, comma separated (default: zeros)")
@click.option(
    "--solver",
    type=click.Choice(["analytic", "ip", "anneal"]),
    default="ip",
    show_default=True,
)
@click.option(
    "--repair",
    type=click.Choice(["none", "shrink", "clip"]),
    default="none",
    show_default=True,
    help="Covariance repair applied before solving",
)
@click.option("--kappa", type=float, default=0.5, show_default=True)
@click.option("--floor", type=float, default=1e-8, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True, help="Annealing seed")
@click.pass_context
def solve_command(
    ctx: click.Context,
    input_path: Optional[Path],
    covariance: Optional[Path],
    mu: Optional[str],
    risk_budget: float,
    fully_invested: bool,
    long_only: bool,
    costs: Optional[str],
    x0: Optional[str],
    solver: str,
    repair: str,
    kappa: float,
    floor: float,
    seed: int,
) -> None:
    """Solve one mean-variance problem."""
    Q, sample = _load_covariance(input_path, covariance)
    Q = _repair(Q, repair, kappa, floor)
    expected = parse_vector(mu, "--mu")
    if expected is None:
        if sample is None:
            raise UsageError("--mu is required with --covariance")
        expected = sample.values.mean(axis=0)

    cost_block = None
    if costs is not None:
        rates = _broadcast(parse_vector(costs, "--costs"), Q.n, "--costs")
        incumbent = parse_vector(x0, "--x0")
        if incumbent is None:
            incumbent = np.zeros(Q.n)
        cost_block = TransactionCosts(rates, incumbent)
    elif x0 is not None:
        raise UsageError("--x0 only applies together with --costs")

    problem = MeanVarianceProblem(
        expected,
        Q,
        risk_budget,
        fully_invested=fully_invested,
        long_only=long_only,
        costs=cost_block,
    )
    findings = validate(problem)
    engine = ApplicationFactory.create_solver(
        solver, schedule=AnnealSchedule(seed=seed)
    )
    result = engine.solve(problem)

    report = Report(command="solve")
    setup = report.section(
        "Problem",
        n=problem.n,
        risk_budget=risk_budget,
        fully_invested=fully_invested,
        long_only=long_only,
        costs=None if cost_block is None else cost_block.p.tolist(),
        repair=repair,
        solver=engine.name,
    )
    if findings:
        table = setup.table("Findings", ["kind", "message"])
        for finding in findings:
            table.add_row(finding.kind.value, finding.message)

    outcome = report.section(
        "Solution",
        status=result.status.value,
        objective=result.objective if result.x is not None else None,
        gap_estimate=result.gap_estimate,
        outer_iterations=result.outer_iterations,
        newton_steps=result.newton_steps_total,
    )
    if result.x is not None:
        x = np.asarray(result.x, dtype=float)
        variance = Q.quadratic_form(x)
        try:
            sharpe: Optional[float] = sharpe_ratio(x, expected, Q)
        except ZeroPositionError:
            sharpe = None
        outcome.values.update(
            variance=variance,
            budget_binding=bool(
                np.isclose(variance, risk_budget, rtol=1e-6, atol=1e-12)
            ),
            sharpe=sharpe,
        )
        positions = outcome.table("Positions", ["asset", "x"])
        for name, value in zip(_asset_names(sample, problem.n), x):
            positions.add_row(name, float(value))

    if result.status is SolveStatus.INFEASIBLE:
        report.exit_code = EXIT_INFEASIBLE
        report.message = "problem is infeasible"
        if fully_invested:
            try:
                _, min_variance = min_variance_fully_invested(Q)
            except NotPositiveDefiniteError:
                logger.debug("Minimum variance undefined for this covariance")
            else:
                outcome.values["min_variance"] = min_variance
                report.message = (
                    f"no solution: risk budget {risk_budget:.6g} is below the minimum "
                    f"fully invested variance {min_variance:.6g}"
                )
    elif result.status is SolveStatus.NUMERICAL_FAILURE:
        report.exit_code = EXIT_INTERNAL
        report.message = "solver reported a numerical failure"
    _emit(ctx, report)


def _load_config_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise DataFormatError(f"cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise DataFormatError(f"invalid YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise DataFormatError(f"{path}: expected a mapping of backtest settings")
    if "halflife" in data:
        data["halflives"] = data.pop("halflife")
    if "seed" in data:
        schedule = dict(data.get("schedule") or {})
        schedule["seed"] = data.pop("seed")
        data["schedule"] = schedule
    return data


def _parse_levels(text: str) -> Sequence[float]:
    levels = parse_vector(text, "--cost-sweep")
    return [] if levels is None else [float(v) for v in levels]


@cli.command("backtest")
@click.option(
    "--input",
    "input_path",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="Returns CSV with a 'date,<asset>,...' header",
)
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="YAML file with backtest settings; flags override it",
)
@click.option("--window", "estimation_window", type=int, help="Estimation window")
@click.option("--rebalance-every", type=int, help="Periods between rebalances")
@click.option("--risk-budget", type=float, help="Per-period variance budget")
@click.option("--estimator", type=click.Choice(["sample", "per-entry-ewma"]))
@click.option("--halflife", type=float, help="Halflife for the EWMA estimator")
@click.option("--repair", type=click.Choice(["none", "shrink", "clip"]))
@click.option("--kappa", type=float)
@click.option("--floor", type=float)
@click.option("--costs", help="Cost rate per unit traded, one value or one per asset")
@click.option(
    "--policy",
    "policy_on_invalid",
    type=click.Choice(["halt", "repair-and-continue", "skip-period"]),
    help="Handling of estimates that are not positive definite",
)
@click.option("--solver", type=click.Choice(["analytic", "ip", "anneal"]))
@click.option("--fully-invested", is_flag=True, default=None)
@click.option("--long-only", is_flag=True, default=None)
@click.option("--seed", type=int, help="Annealing seed")
@click.option(
    "--cost-sweep",
    is_flag=False,
    flag_value=DEFAULT_COST_SWEEP,
    default=None,
    help=f"Rerun for each cost level (default levels {DEFAULT_COST_SWEEP})",
)
@click.option(
    "--periods-csv",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Write the per-period table to a CSV file",
)
@click.pass_context
def backtest_command(
    ctx: click.Context,
    input_path: Path,
    config_path: Optional[Path],
    costs: Optional[str],
    halflife: Optional[float],
    seed: Optional[int],
    cost_sweep: Optional[str],
    periods_csv: Optional[Path],
    **overrides: Any,
) -> None:
    """Run a rolling-window rebalancing backtest."""
    data = _load_config_file(config_path) if config_path else {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    returns = read_returns(input_path)
    if halflife is not None:
        data["halflives"] = halflife
    if costs is not None:
        rates = _broadcast(parse_vector(costs, "--costs"), returns.n_assets, "--costs")
        data["costs"] = tuple(rates)
    if seed is not None:
        schedule = data.get("schedule")
        if isinstance(schedule, AnnealSchedule):
            schedule = schedule.to_dict()
        data["schedule"] = {**(schedule or {}), "seed": seed}
    config = BacktestConfig.from_dict(data)

    service = ApplicationFactory.create_backtest_service(config)
    result = service.run(returns, config)
    stats = turnover_stats(result)

    report = Report(command="backtest")
    summary = report.section(
        "Backtest",
        periods=result.periods,
        estimation_window=config.estimation_window,
        rebalance_every=config.rebalance_every,
        risk_budget=config.risk_budget,
        solver=service.solver.name,
        realized_sharpe=result.realized_sharpe,
        **stats.to_dict(),
    )
    periods = summary.table(
        "Periods", ["date", "status", "turnover", "gross", "costs", "net"]
    )
    dates = result.dates or tuple(str(k) for k in range(result.periods))
    for k in range(result.periods):
        periods.add_row(
            dates[k],
            result.solver_log[k],
            float(result.turnover[k]),
            float(result.gross_returns[k]),
            float(result.costs_paid[k]),
            float(result.net_returns[k]),
        )

    flagged = [
        entry
        for entry in result.diagnostics_log
        if entry.verdict != CovarianceVerdict.POSITIVE_DEFINITE.value
        or entry.action != "none"
    ]
    if flagged:
        section = report.section("Covariance diagnostics", flagged_periods=len(flagged))
        table = section.table(
            "Flagged estimates",
            ["date", "verdict", "min_eigenvalue", "condition_number", "action"],
        )
        for entry in flagged:
            table.add_row(
                entry.date or str(entry.period),
                entry.verdict,
                entry.min_eigenvalue,
                entry.condition_number,
                entry.action,
            )

    if cost_sweep is not None:
        points = service.sweep_costs(returns, config, _parse_levels(cost_sweep))
        sweep = report.section("Cost sweep").table(
            "Turnover against cost level",
            [
                "cost_level",
                "total_turnover",
                "total_costs",
                "total_net",
                "realized_sharpe",
            ],
        )
        for point in points:
            sweep.add_row(*point.to_dict().values())

    if periods_csv is not None:
        write_frame(report_to_frame(result), periods_csv)
    _emit(ctx, report)


@cli.command("sins")
@click.pass_context
def sins_command(ctx: click.Context) -> None:
    """Run all seven demonstrations on the bundled fixtures."""
    service = ApplicationFactory.create_sins_service()
    _emit(ctx, service.build_report())


@cli.command("compare-solvers")
@click.option("--instances", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--assets", type=click.IntRange(min=1), default=4, show_default=True)
@click.option(
    "--seeds",
    type=click.IntRange(min=1),
    default=5,
    show_default=True,
    help="Number of annealing seeds",
)
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    default=42,
    show_default=True,
    help="Seed of the instances and first annealing seed",
)
@click.option("--risk-budget", type=float, default=1.0, show_default=True)
@click.pass_context
def compare_solvers_command(
    ctx: click.Context,
    instances: int,
    assets: int,
    seeds: int,
    seed: int,
    risk_budget: float,
) -> None:
    """Interior point against simulated annealing on random instances."""
    problems = random_problems(instances, assets, seed=seed, risk_budget=risk_budget)
    conics = [lift(problem)[0] for problem in problems]
    comparison = compare_solvers(conics, seeds=range(seed, seed + seeds))

    report = Report(command="compare-solvers")
    values = comparison.to_dict()
    runs = values.pop("runs")
    values.pop("ip_objectives")
    section = report.section("Solver comparison", assets=assets, **values)
    table = section.table(
        "Annealing runs",
        ["instance", "seed", "interior_point", "annealing", "relative_gap", "seconds"],
    )
    for run in runs:
        table.add_row(
            run["instance"],
            run["seed"],
            comparison.ip_objectives[run["instance"]],
            run["objective"],
            run["relative_gap"],
            run["seconds"],
        )
    _emit(ctx, report)


def main() -> None:
    """Console-script entry point."""
    cli(prog_name="sevensins")
