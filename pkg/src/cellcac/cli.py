"""Command-line interface.

Subcommands:

    solve       one-point evaluation, JSON record on stdout
    sweep       lambda_n sweep over policies, CSV (optionally + chart)
    alpha-scan  acceptance-factor grid per sweep point, CSV + optimum block
    simulate    sweep with simulation cross-check columns
    chart       render series from an existing sweep CSV

Scenario files are TOML (see cellcac.config); `--config` takes a path or
a preset name, and the CELLCAC_CONFIG_DIR environment variable adds a
directory of named scenarios. Exit codes: 0 all points solved and files
written, 1 runtime failure (non-convergence, failed points, render
error), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .charts import render_chart
from .config import ScenarioConfig, load_config
from .errors import (
    CellcacError,
    ConfigError,
    ConvergenceError,
    ParameterError,
)
from .policies import AcceptanceGuard, NewCallBounding, NonPriority, Policy
from .sweep import (
    SimTemplate,
    SweepRange,
    SweepSpec,
    run_alpha_scan,
    run_solve,
    run_sweep,
)
from .traffic import TrafficParams

_POLICY_NAMES = ("non-priority", "bounding", "guard")
_DEFAULT_SIM_TARGET = 200_000


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _parse_alpha_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("alpha list must not be empty")
    return values


def _parse_lambda_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            value = float(parts[0])
            return (value, value, 1)
        if len(parts) == 3:
            return (float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(
        f"expected 'start:stop:steps' or a single number, got {text!r}"
    )


def _build_policies(
    names: list[str], scenario: ScenarioConfig, alphas: list[float]
) -> list[Policy]:
    policies: list[Policy] = []
    for name in names:
        if name == "non-priority":
            policies.append(NonPriority(channels=scenario.channels))
        elif name == "bounding":
            policies.append(
                NewCallBounding(
                    channels=scenario.channels, new_call_limit=scenario.new_call_limit
                )
            )
        elif name == "guard":
            policies.extend(
                AcceptanceGuard(
                    channels=scenario.channels,
                    new_call_limit=scenario.new_call_limit,
                    cutoff=scenario.cutoff,
                    alpha=alpha,
                )
                for alpha in alphas
            )
        else:
            raise ParameterError(
                f"unknown policy {name!r}; expected one of {', '.join(_POLICY_NAMES)}"
            )
    return policies


def _scenario_range(args: argparse.Namespace, scenario: ScenarioConfig) -> SweepRange:
    if args.lambda_n is not None:
        start, stop, steps = args.lambda_n
        return SweepRange(start=start, stop=stop, steps=steps)
    return SweepRange(
        start=scenario.sweep_start, stop=scenario.sweep_stop, steps=scenario.sweep_steps
    )


def _release_rate(args: argparse.Namespace, scenario: ScenarioConfig) -> float | None:
    return args.mu if args.mu is not None else scenario.release_rate


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default="paper",
        help="scenario file path or preset name (default: paper)",
    )
    parser.add_argument(
        "--mu",
        type=float,
        default=None,
        help="override the channel release rate used by analytic solves",
    )
    parser.add_argument(
        "--flow-balance",
        type=_parse_bool,
        default=True,
        metavar="BOOL",
        help="solve the handoff rate self-consistently (default: true)",
    )
    parser.add_argument(
        "--lambda-h",
        type=float,
        default=0.0,
        help="fixed handoff arrival rate used when --flow-balance is false",
    )


def _add_grid_options(parser: argparse.ArgumentParser, default_out: str) -> None:
    parser.add_argument(
        "--lambda-n",
        type=_parse_lambda_range,
        default=None,
        metavar="START:STOP:STEPS",
        help="new-call rate grid (single value allowed); default from scenario",
    )
    parser.add_argument(
        "--alpha",
        type=_parse_alpha_list,
        default=None,
        metavar="LIST",
        help="comma-separated acceptance factors (default: 0.5; scan: scenario grid)",
    )
    parser.add_argument("--out", default=default_out, help=f"CSV path (default: {default_out})")
    parser.add_argument(
        "--chart", default=None, metavar="PATH", help="also render a chart to this vector file"
    )


def _json_ready(record: dict) -> dict:
    return {
        key: (None if isinstance(value, float) and math.isnan(value) else value)
        for key, value in record.items()
    }


def _cmd_solve(args: argparse.Namespace) -> int:
    scenario = load_config(args.config)
    alphas = args.alpha if args.alpha is not None else [0.5]
    policies = _build_policies([args.policy], scenario, alphas[:1])
    params = TrafficParams(lambda_n=args.lambda_n, mu_a=scenario.mu_a, eta=scenario.eta)
    record = run_solve(
        policies[0],
        params,
        flow_balance=args.flow_balance,
        lambda_h=args.lambda_h,
        release_rate=_release_rate(args, scenario),
    )
    print(json.dumps(_json_ready(record)))
    return 0


def _render_or_report(csv_path: str, chart_path: str | None) -> int:
    if chart_path is None:
        return 0
    try:
        written = render_chart(csv_path, chart_path)
    except CellcacError as err:
        print(f"error: chart rendering failed: {err}", file=sys.stderr)
        return 1
    print(f"wrote {written}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    scenario = load_config(args.config)
    alphas = args.alpha if args.alpha is not None else [0.5]
    policies = _build_policies(args.policies.split(","), scenario, alphas)
    spec = SweepSpec(
        mu_a=scenario.mu_a,
        eta=scenario.eta,
        lambda_range=_scenario_range(args, scenario),
        policies=tuple(policies),
        flow_balance=args.flow_balance,
        lambda_h=args.lambda_h,
        release_rate=_release_rate(args, scenario),
        simulate=_sim_template(args),
    )
    result = run_sweep(spec, args.out)
    print(f"wrote {result.path} ({len(result.points)} rows, {result.failures} failed)")
    chart_rc = _render_or_report(args.out, args.chart)
    return chart_rc if result.ok else 1


def _sim_template(args: argparse.Namespace) -> SimTemplate | None:
    if getattr(args, "command", "") != "simulate":
        return None
    return SimTemplate(
        seed=args.seed,
        target_arrivals=args.target_arrivals,
        warmup_arrivals=args.warmup,
    )


def _cmd_alpha_scan(args: argparse.Namespace) -> int:
    scenario = load_config(args.config)
    grid = args.alpha if args.alpha is not None else list(scenario.alpha_grid)
    policies = _build_policies(["guard"], scenario, grid[:1])
    spec = SweepSpec(
        mu_a=scenario.mu_a,
        eta=scenario.eta,
        lambda_range=_scenario_range(args, scenario),
        policies=tuple(policies),
        flow_balance=args.flow_balance,
        lambda_h=args.lambda_h,
        release_rate=_release_rate(args, scenario),
    )
    result = run_alpha_scan(spec, grid, args.out)
    for line in result.summary_lines():
        print(line)
    print(f"wrote {result.path} ({len(result.points)} rows, {result.failures} failed)")
    chart_rc = _render_or_report(args.out, args.chart)
    return chart_rc if result.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellcac",
        description="Blocking and dropping analysis of cellular call admission policies.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="evaluate one operating point")
    _add_common_options(solve)
    solve.add_argument(
        "--policy", choices=_POLICY_NAMES, default="guard", help="policy to evaluate"
    )
    solve.add_argument(
        "--alpha", type=_parse_alpha_list, default=None, help="acceptance factor (first value)"
    )
    solve.add_argument(
        "--lambda-n", type=float, default=1.0, help="new-call arrival rate (default: 1.0)"
    )
    solve.set_defaults(func=_cmd_solve)

    sweep = commands.add_parser("sweep", help="sweep lambda_n and write a CSV")
    _add_common_options(sweep)
    _add_grid_options(sweep, "sweep.csv")
    sweep.add_argument(
        "--policies",
        default="non-priority,bounding,guard",
        help="comma-separated subset of non-priority,bounding,guard",
    )
    sweep.set_defaults(func=_cmd_sweep)

    scan = commands.add_parser(
        "alpha-scan", help="scan the acceptance factor at every sweep point"
    )
    _add_common_options(scan)
    _add_grid_options(scan, "alpha_scan.csv")
    scan.set_defaults(func=_cmd_alpha_scan)

    simulate = commands.add_parser(
        "simulate", help="sweep with simulation cross-check columns"
    )
    _add_common_options(simulate)
    _add_grid_options(simulate, "simulate.csv")
    simulate.add_argument(
        "--policies",
        default="non-priority,bounding,guard",
        help="comma-separated subset of non-priority,bounding,guard",
    )
    simulate.add_argument("--seed", type=int, default=0, help="base seed (default: 0)")
    simulate.add_argument(
        "--target-arrivals",
        type=int,
        default=_DEFAULT_SIM_TARGET,
        help=f"measured arrivals per point (default: {_DEFAULT_SIM_TARGET})",
    )
    simulate.add_argument(
        "--warmup",
        type=int,
        default=None,
        help="discarded arrivals per point (default: 10%% of target, at least 10000)",
    )
    simulate.set_defaults(func=_cmd_sweep)

    chart = commands.add_parser("chart", help="render series from a sweep CSV")
    chart.add_argument("csv", help="sweep CSV to read")
    chart.add_argument("--out", default=None, help="output file (default: CSV name with .svg)")
    chart.add_argument(
        "--series",
        action="append",
        default=None,
        metavar="LABEL[@ALPHA]:METRIC",
        help="series to draw; repeatable (default: every policy's p_block)",
    )
    chart.add_argument("--log-y", action="store_true", help="logarithmic probability axis")
    chart.set_defaults(func=_cmd_chart)

    return parser


def _cmd_chart(args: argparse.Namespace) -> int:
    out = args.out if args.out is not None else str(Path(args.csv).with_suffix(".svg"))
    written = render_chart(args.csv, out, series=args.series, log_y=args.log_y)
    print(f"wrote {written}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ConvergenceError as err:
        print(
            f"error: {err} (last lambda_h={err.lambda_h!r}, residual={err.residual!r})",
            file=sys.stderr,
        )
        return 1
    except CellcacError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
