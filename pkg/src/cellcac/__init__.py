"""Blocking and dropping analysis for cellular call admission control.

The package splits into a small analytic core and a verification layer:

* traffic:    arrival/holding rates and the handoff flow-balance map
* birthdeath: stationary distributions of the occupancy chain
* policies:   the admission policies, their metrics, and the fixed point
* sim:        discrete-event simulator for empirical cross-checks
* sweep:      deterministic CSV parameter sweeps and grid scans
* charts:     line charts rendered from sweep CSVs
* config:     TOML scenario files and presets
* cli:        the `cellcac` command
"""

from .birthdeath import (
    BirthRateProfile,
    StationaryDistribution,
    stationary_distribution,
    stationary_distribution_dense_oracle,
    tail_mass,
)
from .charts import render_chart
from .config import ScenarioConfig, load_config, parse_scenario, resolve_config_path
from .errors import (
    BatchError,
    CellcacError,
    ConfigError,
    ConvergenceError,
    DegenerateRunError,
    ParameterError,
    UnsupportedSizeError,
)
from .policies import (
    AcceptanceGuard,
    AlphaSearchResult,
    NewCallBounding,
    NonPriority,
    PerformanceMetrics,
    Policy,
    admission_probability,
    admission_vector,
    birth_profile,
    evaluate,
    evaluate_with_flow_balance,
    optimal_alpha,
    policy_alpha,
)
from .sim import (
    ClosedLoopWraparound,
    OpenLoop,
    SimConfig,
    SimReport,
    batch_simulate,
    simulate,
)
from .sweep import (
    AlphaOptimum,
    AlphaScanResult,
    SimTemplate,
    SweepPoint,
    SweepRange,
    SweepResult,
    SweepSpec,
    derive_point_seed,
    run_alpha_scan,
    run_solve,
    run_sweep,
    sweep_header,
)
from .traffic import DerivedRates, TrafficParams, derive_rates, handoff_balance_rhs

__version__ = "0.1.0"

__all__ = [
    "AcceptanceGuard",
    "AlphaOptimum",
    "AlphaScanResult",
    "AlphaSearchResult",
    "BatchError",
    "BirthRateProfile",
    "CellcacError",
    "ClosedLoopWraparound",
    "ConfigError",
    "ConvergenceError",
    "DegenerateRunError",
    "DerivedRates",
    "NewCallBounding",
    "NonPriority",
    "OpenLoop",
    "ParameterError",
    "PerformanceMetrics",
    "Policy",
    "ScenarioConfig",
    "SimConfig",
    "SimReport",
    "SimTemplate",
    "StationaryDistribution",
    "SweepPoint",
    "SweepRange",
    "SweepResult",
    "SweepSpec",
    "TrafficParams",
    "UnsupportedSizeError",
    "admission_probability",
    "admission_vector",
    "batch_simulate",
    "birth_profile",
    "derive_point_seed",
    "derive_rates",
    "evaluate",
    "evaluate_with_flow_balance",
    "handoff_balance_rhs",
    "load_config",
    "optimal_alpha",
    "parse_scenario",
    "policy_alpha",
    "render_chart",
    "resolve_config_path",
    "run_alpha_scan",
    "run_solve",
    "run_sweep",
    "simulate",
    "stationary_distribution",
    "stationary_distribution_dense_oracle",
    "sweep_header",
    "tail_mass",
]
