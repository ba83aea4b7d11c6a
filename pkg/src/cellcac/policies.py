"""Admission policies for a single cell and their loss metrics.

A cell has a fixed pool of channels shared by new calls and handoffs.
Handoff calls are admitted whenever a channel is free under every policy
here; the policies differ only in when they admit a *new* call, as a
per-occupancy admission probability a(i):

* NonPriority: a(i) = 1 below capacity. New calls and handoffs compete on
  equal terms.
* NewCallBounding: a(i) = 1 while occupancy is below a limit m, else 0.
  The channels above m are reserved for handoffs.
* AcceptanceGuard: a(i) = 1 below m, a fixed alpha in the band m..n-1,
  and 0 from n up. Bounding with a softened edge; alpha trades new-call
  blocking against handoff dropping.

With Poisson arrivals the occupancy seen by an arriving call is the
time-stationary distribution, so new-call blocking is the admission-
weighted rejection mass sum_i P(i) * (1 - a(i)) and handoff dropping is
P(c), the probability the cell is full.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .birthdeath import BirthRateProfile, stationary_distribution
from .errors import ConvergenceError, ParameterError
from .traffic import TrafficParams, derive_rates, handoff_balance_rhs

# Fixed-point controls for evaluate_with_flow_balance. Damping 0.5 halves
# each correction, which keeps the iteration contractive even where the
# loss probabilities respond steeply to lambda_h.
_FP_DAMPING = 0.5
_FP_MAX_ITERATIONS = 10_000
_FP_TOLERANCE_SCALE = 1e-10

# Two alphas whose blocking differs by less than this are treated as tied;
# grid searches then prefer the smaller alpha, independent of scan order.
ALPHA_TIE_TOLERANCE = 1e-15


def _check_channels(channels: int) -> None:
    if not isinstance(channels, int) or isinstance(channels, bool) or channels < 1:
        raise ParameterError(f"channels must be an integer >= 1, got {channels!r}")


def _check_limit(name: str, value: int, upper: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= upper:
        raise ParameterError(f"{name} must be an integer in 0..{upper}, got {value!r}")


@dataclass(frozen=True)
class NonPriority:
    """Admit any call while a channel is free."""

    channels: int

    def __post_init__(self) -> None:
        _check_channels(self.channels)

    def admission_probability(self, occupancy: int) -> float:
        _check_occupancy(occupancy, self.channels)
        return 1.0 if occupancy < self.channels else 0.0

    @property
    def label(self) -> str:
        return f"non-priority({self.channels})"


@dataclass(frozen=True)
class NewCallBounding:
    """Admit new calls only while occupancy is below new_call_limit."""

    channels: int
    new_call_limit: int

    def __post_init__(self) -> None:
        _check_channels(self.channels)
        _check_limit("new_call_limit", self.new_call_limit, self.channels)

    def admission_probability(self, occupancy: int) -> float:
        _check_occupancy(occupancy, self.channels)
        return 1.0 if occupancy < self.new_call_limit else 0.0

    @property
    def guard_channels(self) -> int:
        """Channels reserved exclusively for handoffs."""
        return self.channels - self.new_call_limit

    @property
    def label(self) -> str:
        return f"new-call-bounding({self.channels},{self.new_call_limit})"


@dataclass(frozen=True)
class AcceptanceGuard:
    """Admit new calls with probability alpha between the limit and cutoff.

    Below new_call_limit every new call is admitted; from new_call_limit
    up to (excluding) cutoff a new call is admitted with probability
    alpha; at cutoff and above none are. alpha = 0 collapses to
    NewCallBounding at the limit, alpha = 1 to NewCallBounding at the
    cutoff.
    """

    channels: int
    new_call_limit: int
    cutoff: int
    alpha: float

    def __post_init__(self) -> None:
        _check_channels(self.channels)
        _check_limit("new_call_limit", self.new_call_limit, self.channels)
        _check_limit("cutoff", self.cutoff, self.channels)
        if self.new_call_limit > self.cutoff:
            raise ParameterError(
                f"new_call_limit ({self.new_call_limit}) must not exceed cutoff ({self.cutoff})"
            )
        if (
            not isinstance(self.alpha, (int, float))
            or not math.isfinite(self.alpha)
            or not 0.0 <= self.alpha <= 1.0
        ):
            raise ParameterError(f"alpha must be in [0, 1], got {self.alpha!r}")

    def admission_probability(self, occupancy: int) -> float:
        _check_occupancy(occupancy, self.channels)
        if occupancy < self.new_call_limit:
            return 1.0
        if occupancy < self.cutoff:
            return float(self.alpha)
        return 0.0

    @property
    def label(self) -> str:
        return f"acceptance-guard({self.channels},{self.new_call_limit},{self.cutoff})"


Policy = Union[NonPriority, NewCallBounding, AcceptanceGuard]


def _check_occupancy(occupancy: int, channels: int) -> None:
    if not isinstance(occupancy, (int, np.integer)) or not 0 <= occupancy <= channels:
        raise ParameterError(f"occupancy must be an integer in 0..{channels}, got {occupancy!r}")


def policy_alpha(policy: Policy) -> float | None:
    """The acceptance factor of a policy, or None if it has none."""
    return float(policy.alpha) if isinstance(policy, AcceptanceGuard) else None


def admission_probability(policy: Policy, occupancy: int) -> float:
    """Probability a new call arriving at the given occupancy is admitted."""
    return policy.admission_probability(occupancy)


def admission_vector(policy: Policy) -> np.ndarray:
    """a(0..c) as an array; the new-call admission probability per state.

    Built with slice assignments of the same constants the policies are
    defined by, so policies that coincide (for example a guard with
    alpha = 0 and a bounding policy at the same limit) produce bitwise
    identical vectors.
    """
    c = policy.channels
    vec = np.zeros(c + 1)
    if isinstance(policy, NonPriority):
        vec[:c] = 1.0
    elif isinstance(policy, NewCallBounding):
        vec[: policy.new_call_limit] = 1.0
    elif isinstance(policy, AcceptanceGuard):
        vec[: policy.new_call_limit] = 1.0
        vec[policy.new_call_limit : policy.cutoff] = float(policy.alpha)
    else:
        raise ParameterError(f"unknown policy type: {type(policy).__name__}")
    return vec


def birth_profile(policy: Policy, lambda_n: float, lambda_h: float) -> BirthRateProfile:
    """Birth rates of the occupancy chain under a policy.

    In state i new calls are accepted at rate lambda_n * a(i) and handoffs
    at rate lambda_h (while i < c), so b(i) = lambda_n * a(i) + lambda_h.
    """
    for name, value in (("lambda_n", lambda_n), ("lambda_h", lambda_h)):
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
            raise ParameterError(f"{name} must be a finite number >= 0, got {value!r}")
    accept = admission_vector(policy)[: policy.channels]
    return BirthRateProfile(rates=lambda_n * accept + lambda_h)


@dataclass(frozen=True)
class PerformanceMetrics:
    """Loss metrics of a policy at a given operating point.

    p_block:       new-call blocking probability
    p_drop:        handoff dropping probability
    lambda_h:      handoff arrival rate the metrics were computed at
    fp_iterations: fixed-point iterations spent finding lambda_h
                   (0 when lambda_h was supplied externally)
    fp_residual:   absolute flow-balance residual at lambda_h
                   (NaN when lambda_h was supplied externally)
    """

    p_block: float
    p_drop: float
    lambda_h: float
    fp_iterations: int
    fp_residual: float


def evaluate(policy: Policy, lambda_n: float, lambda_h: float, mu: float) -> PerformanceMetrics:
    """Loss metrics with the handoff arrival rate given explicitly.

    Solves the occupancy chain for the policy's birth profile, then reads
    off p_block = sum_i P(i) * (1 - a(i)) and p_drop = P(c): with Poisson
    arrivals, an arriving call sees the time-stationary occupancy.
    """
    dist = stationary_distribution(birth_profile(policy, lambda_n, lambda_h), mu)
    accept = admission_vector(policy)
    p_block = float(np.dot(dist.probs, 1.0 - accept))
    # Summation round-off can land 1 ulp above 1 at extreme loads.
    if p_block > 1.0:
        p_block = 1.0
    p_drop = float(dist.probs[-1])
    return PerformanceMetrics(
        p_block=p_block,
        p_drop=p_drop,
        lambda_h=float(lambda_h),
        fp_iterations=0,
        fp_residual=float("nan"),
    )


def evaluate_with_flow_balance(
    policy: Policy,
    params: TrafficParams,
    mu: float | None = None,
    damping: float = _FP_DAMPING,
    max_iterations: int = _FP_MAX_ITERATIONS,
) -> PerformanceMetrics:
    """Loss metrics at the self-consistent handoff rate.

    Iterates lambda_h <- lambda_h + damping * (rhs(lambda_h) - lambda_h)
    from the no-loss starting point lambda_n * p_h until the flow-balance
    residual falls below 1e-10 * max(lambda_n, 1). The channel release
    rate defaults to mu_a + eta; pass mu to override it while keeping the
    handover probability from params.
    """
    if not 0.0 < damping <= 1.0:
        raise ParameterError(f"damping must be in (0, 1], got {damping!r}")
    if max_iterations < 1:
        raise ParameterError(f"max_iterations must be >= 1, got {max_iterations!r}")
    rates = derive_rates(params)
    effective_mu = rates.mu if mu is None else mu
    tolerance = _FP_TOLERANCE_SCALE * max(params.lambda_n, 1.0)
    lambda_h = params.lambda_n * rates.p_h
    metrics = None
    residual = math.inf
    for iteration in range(1, max_iterations + 1):
        metrics = evaluate(policy, params.lambda_n, lambda_h, effective_mu)
        target = handoff_balance_rhs(params, rates, metrics.p_block, metrics.p_drop)
        residual = target - lambda_h
        if abs(residual) <= tolerance:
            return replace(
                metrics, fp_iterations=iteration, fp_residual=abs(residual)
            )
        lambda_h += damping * residual
    raise ConvergenceError(
        f"flow balance did not converge within {max_iterations} iterations "
        f"(last lambda_h={lambda_h!r}, residual={abs(residual)!r})",
        lambda_h=lambda_h,
        residual=abs(residual),
        iterations=max_iterations,
    )


@dataclass(frozen=True)
class AlphaSearchResult:
    """Outcome of a grid search over the acceptance factor.

    alpha_star: smallest alpha attaining the minimum new-call blocking
    metrics:    metrics at alpha_star
    grid:       every (alpha, metrics) pair evaluated, in grid order
    """

    alpha_star: float
    metrics: PerformanceMetrics
    grid: tuple[tuple[float, PerformanceMetrics], ...]


def optimal_alpha(
    new_call_limit: int,
    cutoff: int,
    channels: int,
    params: TrafficParams,
    alpha_grid: Sequence[float],
    mu: float | None = None,
    tie_tolerance: float = ALPHA_TIE_TOLERANCE,
) -> AlphaSearchResult:
    """Grid-search the acceptance factor minimising new-call blocking.

    Evaluates an AcceptanceGuard at each alpha under flow balance and
    returns the smallest alpha whose p_block is within tie_tolerance of
    the minimum, so plateau ties resolve deterministically.
    """
    alphas = [float(a) for a in alpha_grid]
    if not alphas:
        raise ParameterError("alpha_grid must not be empty")
    grid = []
    for alpha in alphas:
        policy = AcceptanceGuard(
            channels=channels, new_call_limit=new_call_limit, cutoff=cutoff, alpha=alpha
        )
        try:
            grid.append((alpha, evaluate_with_flow_balance(policy, params, mu=mu)))
        except ConvergenceError as err:
            raise ConvergenceError(
                f"alpha={alpha!r}: {err}",
                lambda_h=err.lambda_h,
                residual=err.residual,
                iterations=err.iterations,
            ) from err
    best_block = min(metrics.p_block for _, metrics in grid)
    alpha_star, metrics_star = min(
        (pair for pair in grid if pair[1].p_block <= best_block + tie_tolerance),
        key=lambda pair: pair[0],
    )
    return AlphaSearchResult(alpha_star=alpha_star, metrics=metrics_star, grid=tuple(grid))
