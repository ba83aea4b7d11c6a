"""Scenario configuration: TOML files describing a cell and its workload.

A scenario file has up to four tables. `[cell]` is the channel layout,
`[traffic]` the rates, `[alpha]` the acceptance-factor grid, and
`[sweep]` the default new-call-rate range:

    [cell]
    channels = 130
    new_call_limit = 100
    cutoff = 110

    [traffic]
    call_mean_s = 120.0    # or call_rate = 0.008333...
    dwell_mean_s = 360.0   # or dwell_rate
    # release_rate = ...   # optional channel-release override

    [alpha]
    grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

    [sweep]
    lambda_n_start = 0.2
    lambda_n_stop = 3.0
    lambda_n_steps = 30

Rates are per second. Mean-time fields are the reciprocal convenience
spelling; each quantity must be given exactly one way. The optional
release_rate overrides the derived channel release rate mu_a + eta for
analytical evaluations (simulation always uses the derived rate).

Named scenarios resolve against the directory in the CELLCAC_CONFIG_DIR
environment variable, then against the presets shipped with the package
(`paper` is the built-in default scenario).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import ConfigError

CONFIG_DIR_ENV = "CELLCAC_CONFIG_DIR"

_DEFAULT_ALPHA_GRID = tuple(round(0.1 * k, 10) for k in range(1, 10))
_DEFAULT_SWEEP = (0.2, 3.0, 30)


@dataclass(frozen=True)
class ScenarioConfig:
    """A parsed scenario: cell layout, rates, and default grids."""

    channels: int
    new_call_limit: int
    cutoff: int
    mu_a: float
    eta: float
    release_rate: float | None
    alpha_grid: tuple[float, ...]
    sweep_start: float
    sweep_stop: float
    sweep_steps: int


def _require_int(table: dict, section: str, key: str, minimum: int) -> int:
    if key not in table:
        raise ConfigError(f"missing required field {section}.{key}")
    value = table[key]
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{section}.{key} must be an integer >= {minimum}, got {value!r}")
    return value


def _positive_number(value: object, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{path} must be finite and > 0, got {value}")
    return value


def _rate_from(table: dict, section: str, rate_key: str, mean_key: str) -> float:
    has_rate = rate_key in table
    has_mean = mean_key in table
    if has_rate and has_mean:
        raise ConfigError(f"{section}.{rate_key} and {section}.{mean_key} are mutually exclusive")
    if has_rate:
        return _positive_number(table[rate_key], f"{section}.{rate_key}")
    if has_mean:
        return 1.0 / _positive_number(table[mean_key], f"{section}.{mean_key}")
    raise ConfigError(f"one of {section}.{rate_key} or {section}.{mean_key} is required")


def parse_scenario(data: dict, source: str = "<config>") -> ScenarioConfig:
    """Validate a decoded TOML document into a ScenarioConfig."""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a table")
    cell = data.get("cell")
    if not isinstance(cell, dict):
        raise ConfigError(f"{source}: missing required table [cell]")
    channels = _require_int(cell, "cell", "channels", 1)
    new_call_limit = _require_int(cell, "cell", "new_call_limit", 0)
    cutoff = _require_int(cell, "cell", "cutoff", 0)
    if not new_call_limit <= cutoff <= channels:
        raise ConfigError(
            "cell.new_call_limit <= cell.cutoff <= cell.channels required, got "
            f"{new_call_limit}, {cutoff}, {channels}"
        )

    traffic = data.get("traffic")
    if not isinstance(traffic, dict):
        raise ConfigError(f"{source}: missing required table [traffic]")
    mu_a = _rate_from(traffic, "traffic", "call_rate", "call_mean_s")
    eta = _rate_from(traffic, "traffic", "dwell_rate", "dwell_mean_s")
    release_rate = None
    if "release_rate" in traffic:
        release_rate = _positive_number(traffic["release_rate"], "traffic.release_rate")

    alpha_grid = _DEFAULT_ALPHA_GRID
    alpha = data.get("alpha", {})
    if not isinstance(alpha, dict):
        raise ConfigError(f"{source}: [alpha] must be a table")
    if "grid" in alpha:
        grid = alpha["grid"]
        if not isinstance(grid, list) or not grid:
            raise ConfigError("alpha.grid must be a non-empty list")
        parsed = []
        for k, item in enumerate(grid):
            if not isinstance(item, (int, float)) or isinstance(item, bool):
                raise ConfigError(f"alpha.grid[{k}] must be a number, got {item!r}")
            item = float(item)
            if not 0.0 <= item <= 1.0:
                raise ConfigError(f"alpha.grid[{k}] must be in [0, 1], got {item}")
            parsed.append(item)
        alpha_grid = tuple(parsed)

    start, stop, steps = _DEFAULT_SWEEP
    sweep = data.get("sweep", {})
    if not isinstance(sweep, dict):
        raise ConfigError(f"{source}: [sweep] must be a table")
    if "lambda_n_start" in sweep:
        start = _positive_number(sweep["lambda_n_start"], "sweep.lambda_n_start")
    if "lambda_n_stop" in sweep:
        stop = _positive_number(sweep["lambda_n_stop"], "sweep.lambda_n_stop")
    if "lambda_n_steps" in sweep:
        steps = _require_int(sweep, "sweep", "lambda_n_steps", 1)
    if stop < start:
        raise ConfigError(f"sweep.lambda_n_stop ({stop}) must be >= lambda_n_start ({start})")

    return ScenarioConfig(
        channels=channels,
        new_call_limit=new_call_limit,
        cutoff=cutoff,
        mu_a=mu_a,
        eta=eta,
        release_rate=release_rate,
        alpha_grid=alpha_grid,
        sweep_start=start,
        sweep_stop=stop,
        sweep_steps=steps,
    )


def _preset_path(name: str) -> Path | None:
    candidate = resources.files("cellcac").joinpath("presets", f"{name}.toml")
    try:
        if candidate.is_file():
            return Path(str(candidate))
    except (OSError, AttributeError):
        pass
    return None


def resolve_config_path(name_or_path: str) -> Path:
    """Find a scenario file: literal path, then config dir, then presets."""
    literal = Path(name_or_path)
    if literal.is_file():
        return literal
    candidates = []
    config_dir = os.environ.get(CONFIG_DIR_ENV)
    if config_dir:
        for stem in (name_or_path, f"{name_or_path}.toml"):
            candidates.append(Path(config_dir) / stem)
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    preset = _preset_path(name_or_path)
    if preset is not None:
        return preset
    searched = [str(literal)] + [str(c) for c in candidates] + ["built-in presets"]
    raise ConfigError(f"config {name_or_path!r} not found (searched: {', '.join(searched)})")


def load_config(name_or_path: str) -> ScenarioConfig:
    """Load and validate a scenario by path or preset name."""
    path = resolve_config_path(name_or_path)
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: invalid TOML: {err}") from None
    except OSError as err:
        raise ConfigError(f"{path}: {err}") from None
    return parse_scenario(data, source=str(path))
