"""Parameter sweeps over the new-call rate, written as deterministic CSV.

A sweep evaluates a list of policies at each point of an inclusive linear
lambda_n grid, either at the self-consistent handoff rate (flow balance)
or at an externally fixed one, optionally cross-checked by simulation.
Points are independent pure evaluations, so they may run concurrently;
assembly is single-writer and row order is fixed by the request
(lambda_n outer, policies in listed order), never by completion order.

CSV cells are rendered with repr(), the shortest digit string that
round-trips the double exactly, so equal results are equal bytes and
parsing a row back recovers the in-memory values bit for bit. Failed
points keep their row with an error status instead of aborting the run.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CellcacError, ParameterError
from .policies import (
    ALPHA_TIE_TOLERANCE,
    AcceptanceGuard,
    PerformanceMetrics,
    Policy,
    evaluate,
    evaluate_with_flow_balance,
    policy_alpha,
)
from .sim import ClosedLoopWraparound, OpenLoop, SimConfig, SimReport, simulate
from .traffic import TrafficParams

_BASE_HEADER = ("lambda_n", "policy", "alpha", "lambda_h", "p_block", "p_drop", "fp_iterations")
_SIM_HEADER = ("sim_p_block", "sim_p_drop", "sim_ci_block", "sim_ci_drop")
_STATUS_OK = "ok"
_MAX_WORKERS = 8


@dataclass(frozen=True)
class SweepRange:
    """Inclusive linear grid over the new-call arrival rate."""

    start: float
    stop: float
    steps: int

    def __post_init__(self) -> None:
        if not (isinstance(self.start, (int, float)) and math.isfinite(self.start)):
            raise ParameterError(f"start must be a finite number, got {self.start!r}")
        if not (isinstance(self.stop, (int, float)) and math.isfinite(self.stop)):
            raise ParameterError(f"stop must be a finite number, got {self.stop!r}")
        if self.start <= 0:
            raise ParameterError(f"start must be > 0, got {self.start}")
        if self.stop < self.start:
            raise ParameterError(f"stop ({self.stop}) must be >= start ({self.start})")
        if not isinstance(self.steps, int) or isinstance(self.steps, bool) or self.steps < 1:
            raise ParameterError(f"steps must be an integer >= 1, got {self.steps!r}")

    def values(self) -> tuple[float, ...]:
        return tuple(float(v) for v in np.linspace(self.start, self.stop, self.steps))


@dataclass(frozen=True)
class SimTemplate:
    """Per-point simulation settings for cross-validation columns."""

    seed: int
    target_arrivals: int
    warmup_arrivals: int | None = None


@dataclass(frozen=True)
class SweepSpec:
    """Everything a sweep run needs.

    mu_a/eta describe the traffic at every point; lambda_range supplies
    the new-call rates. With flow_balance the handoff rate is solved per
    point; without it lambda_h is held at the given fixed value.
    release_rate overrides the analytic channel release rate (the
    simulator always uses mu_a + eta). simulate attaches empirical
    columns, seeded per row from its base seed.
    """

    mu_a: float
    eta: float
    lambda_range: SweepRange
    policies: tuple[Policy, ...]
    flow_balance: bool = True
    lambda_h: float = 0.0
    release_rate: float | None = None
    simulate: SimTemplate | None = None

    def __post_init__(self) -> None:
        if not self.policies:
            raise ParameterError("policies must not be empty")
        if self.lambda_h < 0 or not math.isfinite(self.lambda_h):
            raise ParameterError(f"lambda_h must be a finite number >= 0, got {self.lambda_h!r}")


@dataclass(frozen=True)
class SweepPoint:
    """One evaluated (lambda_n, policy) cell of a sweep."""

    lambda_n: float
    policy: Policy
    metrics: PerformanceMetrics | None
    report: SimReport | None
    status: str


@dataclass(frozen=True)
class SweepResult:
    path: Path
    header: tuple[str, ...]
    points: tuple[SweepPoint, ...]
    failures: int

    @property
    def ok(self) -> bool:
        return self.failures == 0


def derive_point_seed(base_seed: int, index: int) -> int:
    """Stable per-row seed: independent streams, reproducible layout."""
    state = np.random.SeedSequence(base_seed, spawn_key=(index,)).generate_state(1, np.uint64)
    return int(state[0])


def _format_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(
    path: Path,
    header: Sequence[str],
    rows: Sequence[Sequence[object]],
    trailing_comments: Sequence[str] = (),
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])
        for comment in trailing_comments:
            handle.write(f"# {comment}\n")


def _evaluate_point(
    spec: SweepSpec, lambda_n: float, policy: Policy, row_index: int
) -> SweepPoint:
    params = TrafficParams(lambda_n=lambda_n, mu_a=spec.mu_a, eta=spec.eta)
    metrics = None
    report = None
    try:
        if spec.flow_balance:
            metrics = evaluate_with_flow_balance(policy, params, mu=spec.release_rate)
        else:
            mu = spec.release_rate if spec.release_rate is not None else spec.mu_a + spec.eta
            metrics = evaluate(policy, lambda_n, spec.lambda_h, mu)
        if spec.simulate is not None:
            mode = ClosedLoopWraparound() if spec.flow_balance else OpenLoop(spec.lambda_h)
            config = SimConfig(
                policy=policy,
                params=params,
                mode=mode,
                seed=derive_point_seed(spec.simulate.seed, row_index),
                target_arrivals=spec.simulate.target_arrivals,
                warmup_arrivals=spec.simulate.warmup_arrivals,
            )
            report = simulate(config)
    except CellcacError as err:
        return SweepPoint(
            lambda_n=lambda_n,
            policy=policy,
            metrics=metrics,
            report=report,
            status=f"error:{type(err).__name__}",
        )
    return SweepPoint(
        lambda_n=lambda_n, policy=policy, metrics=metrics, report=report, status=_STATUS_OK
    )


def _point_row(point: SweepPoint, with_sim: bool) -> list[object]:
    metrics = point.metrics
    row: list[object] = [
        point.lambda_n,
        point.policy.label,
        policy_alpha(point.policy),
        metrics.lambda_h if metrics else None,
        metrics.p_block if metrics else None,
        metrics.p_drop if metrics else None,
        metrics.fp_iterations if metrics else None,
    ]
    if with_sim:
        report = point.report
        row += [
            report.p_block_hat if report else None,
            report.p_drop_hat if report else None,
            report.ci95_block if report else None,
            report.ci95_drop if report else None,
        ]
    row.append(point.status)
    return row


def sweep_header(with_sim: bool) -> tuple[str, ...]:
    base = _BASE_HEADER + (_SIM_HEADER if with_sim else ())
    return base + ("status",)


def run_sweep(spec: SweepSpec, output: Path | str) -> SweepResult:
    """Evaluate the grid and write one CSV; returns the points and path.

    Rows are ordered by (lambda_n, policy list order). Identical specs
    (and seeds) produce byte-identical files. A point that fails keeps
    its row, with whatever fields were computed and an error status.
    """
    output = Path(output)
    lambdas = spec.lambda_range.values()
    cells = [
        (lambda_n, policy) for lambda_n in lambdas for policy in spec.policies
    ]
    with ThreadPoolExecutor(max_workers=min(_MAX_WORKERS, len(cells))) as pool:
        points = list(
            pool.map(
                lambda item: _evaluate_point(spec, item[1][0], item[1][1], item[0]),
                enumerate(cells),
            )
        )
    with_sim = spec.simulate is not None
    rows = [_point_row(point, with_sim) for point in points]
    _write_csv(output, sweep_header(with_sim), rows)
    failures = sum(1 for point in points if point.status != _STATUS_OK)
    return SweepResult(
        path=output, header=sweep_header(with_sim), points=tuple(points), failures=failures
    )


@dataclass(frozen=True)
class AlphaOptimum:
    """Best acceptance factor at one sweep point.

    tied means every grid alpha produced the same blocking within the
    tie tolerance (blocking negligible at every alpha), so alpha_star is
    the tie-break choice rather than a strict winner.
    """

    lambda_n: float
    alpha_star: float
    p_block: float
    tied: bool


@dataclass(frozen=True)
class AlphaScanResult:
    path: Path
    points: tuple[SweepPoint, ...]
    optima: tuple[AlphaOptimum, ...]
    crossover_lambda_n: float | None
    failures: int

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def summary_lines(self) -> list[str]:
        """The optimum block appended to the CSV and echoed to stdout."""
        lines = []
        for opt in self.optima:
            line = (
                f"alpha_star lambda_n={opt.lambda_n!r} alpha={opt.alpha_star!r} "
                f"p_block={opt.p_block!r}"
            )
            if opt.tied:
                line += " tied=true"
            lines.append(line)
        if self.crossover_lambda_n is None:
            lines.append("crossover none")
        else:
            lines.append(f"crossover lambda_n={self.crossover_lambda_n!r}")
        return lines


def run_alpha_scan(
    spec: SweepSpec, alpha_grid: Sequence[float], output: Path | str
) -> AlphaScanResult:
    """Scan the acceptance factor at every sweep point and name each optimum.

    The policy list contributes only the geometry of its first
    AcceptanceGuard; each point then evaluates one AcceptanceGuard per
    grid alpha, under flow balance or at the fixed lambda_h exactly as
    run_sweep would. The optimum per point is the
    smallest alpha minimising p_block (ties within the shared tolerance
    resolve to the smaller alpha, matching optimal_alpha). The crossover
    is the smallest lambda_n with a strict interior optimum: alpha_star
    below the top of the grid where the grid alphas are not all tied, so
    an indifference plateau at negligible blocking does not read as a
    regime change. Summary lines are appended to the CSV as '#' comments
    and carried in the result.
    """
    output = Path(output)
    alphas = [float(a) for a in alpha_grid]
    if not alphas:
        raise ParameterError("alpha_grid must not be empty")
    guard = None
    for policy in spec.policies:
        if isinstance(policy, AcceptanceGuard):
            guard = policy
            break
    if guard is None:
        raise ParameterError("alpha scan needs an AcceptanceGuard in SweepSpec.policies")
    policies = tuple(
        AcceptanceGuard(
            channels=guard.channels,
            new_call_limit=guard.new_call_limit,
            cutoff=guard.cutoff,
            alpha=alpha,
        )
        for alpha in alphas
    )
    scan_spec = SweepSpec(
        mu_a=spec.mu_a,
        eta=spec.eta,
        lambda_range=spec.lambda_range,
        policies=policies,
        flow_balance=spec.flow_balance,
        lambda_h=spec.lambda_h,
        release_rate=spec.release_rate,
        simulate=spec.simulate,
    )
    lambdas = scan_spec.lambda_range.values()
    cells = [(lambda_n, policy) for lambda_n in lambdas for policy in policies]
    with ThreadPoolExecutor(max_workers=min(_MAX_WORKERS, len(cells))) as pool:
        points = list(
            pool.map(
                lambda item: _evaluate_point(scan_spec, item[1][0], item[1][1], item[0]),
                enumerate(cells),
            )
        )

    optima = []
    top_alpha = max(alphas)
    crossover = None
    for i, lambda_n in enumerate(lambdas):
        group = points[i * len(policies) : (i + 1) * len(policies)]
        scored = [
            (policy_alpha(point.policy), point.metrics.p_block)
            for point in group
            if point.status == _STATUS_OK and point.metrics is not None
        ]
        if not scored:
            continue
        best_block = min(block for _, block in scored)
        worst_block = max(block for _, block in scored)
        alpha_star, block_star = min(
            (pair for pair in scored if pair[1] <= best_block + ALPHA_TIE_TOLERANCE),
            key=lambda pair: pair[0],
        )
        tied = worst_block - best_block <= ALPHA_TIE_TOLERANCE
        optima.append(
            AlphaOptimum(lambda_n=lambda_n, alpha_star=alpha_star, p_block=block_star, tied=tied)
        )
        if crossover is None and not tied and alpha_star < top_alpha:
            crossover = lambda_n

    with_sim = scan_spec.simulate is not None
    rows = [_point_row(point, with_sim) for point in points]
    failures = sum(1 for point in points if point.status != _STATUS_OK)
    result = AlphaScanResult(
        path=output,
        points=tuple(points),
        optima=tuple(optima),
        crossover_lambda_n=crossover,
        failures=failures,
    )
    _write_csv(output, sweep_header(with_sim), rows, trailing_comments=result.summary_lines())
    return result


def run_solve(
    policy: Policy,
    params: TrafficParams,
    flow_balance: bool = True,
    lambda_h: float = 0.0,
    release_rate: float | None = None,
) -> dict:
    """One-point evaluation as a plain record for structured printing.

    Field values are the PerformanceMetrics entries; the record carries
    no policy identity, so parameterisations that coincide produce
    identical records.
    """
    if flow_balance:
        metrics = evaluate_with_flow_balance(policy, params, mu=release_rate)
    else:
        mu = release_rate if release_rate is not None else params.mu_a + params.eta
        metrics = evaluate(policy, params.lambda_n, lambda_h, mu)
    return {
        "p_block": metrics.p_block,
        "p_drop": metrics.p_drop,
        "lambda_h": metrics.lambda_h,
        "fp_iterations": metrics.fp_iterations,
        "fp_residual": metrics.fp_residual,
    }
