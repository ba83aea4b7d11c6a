"""Stationary analysis of finite birth-death chains with linear death rates.

State i is the number of busy channels in a cell with c channels. The
chain moves i -> i+1 at a state-dependent birth rate b(i) and i -> i-1 at
rate i * mu (each call releases its channel independently at rate mu).
Detailed balance gives the product form

    P(i) = P(0) * prod_{k=1..i} b(k-1) / (k * mu).

Written out with powers and factorials this overflows double precision
long before realistic channel counts, so `stationary_distribution`
evaluates the recurrence term by term and renormalises whenever the
running sum grows too large, carrying the accumulated scale separately.
`stationary_distribution_dense_oracle` solves the global balance equations
directly with dense linear algebra as an independent cross-check for
small chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnsupportedSizeError

# Renormalise the recurrence once the running sum exceeds this. Products
# grow by at most b(i) / mu per step, so any realistic ratio stays far
# from the ~1e308 double ceiling between renormalisations.
_RENORM_THRESHOLD = 1e250

# Largest chain the dense oracle accepts. Gaussian elimination error grows
# with size; the oracle exists to cross-check small instances, not to
# compete with the recurrence.
DENSE_ORACLE_MAX_CHANNELS = 64


@dataclass(frozen=True)
class BirthRateProfile:
    """Birth rates b(0..c-1) of a chain on states 0..c.

    rates[i] is the total arrival rate accepted in state i. No rate is
    needed for state c: the chain cannot grow past the channel count.
    """

    rates: np.ndarray

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim != 1 or rates.size < 1:
            raise ParameterError("rates must be a non-empty 1-d array")
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise ParameterError("birth rates must be finite and >= 0")
        object.__setattr__(self, "rates", rates)

    @property
    def channels(self) -> int:
        return self.rates.size


@dataclass(frozen=True)
class StationaryDistribution:
    """Stationary occupancy probabilities of a birth-death chain.

    probs:    P(0..c), non-negative, summing to 1
    log_norm: log of the normalisation constant sum_i pi_i where pi is the
              unnormalised product form with pi_0 = 1. Useful as a scale
              diagnostic: P(0) = exp(-log_norm).
    """

    probs: np.ndarray
    log_norm: float

    @property
    def channels(self) -> int:
        return self.probs.size - 1


def stationary_distribution(profile: BirthRateProfile, mu: float) -> StationaryDistribution:
    """Stationary distribution via the detailed-balance recurrence.

    P(i) = P(i-1) * b(i-1) / (i * mu), renormalised in place whenever the
    running sum exceeds a large threshold so that intermediate terms never
    overflow. States beyond a zero birth rate get exactly zero mass.
    """
    if not isinstance(mu, (int, float)) or not math.isfinite(mu) or mu <= 0:
        raise ParameterError(f"mu must be a finite number > 0, got {mu!r}")
    rates = profile.rates
    c = rates.size
    weights = np.empty(c + 1)
    weights[0] = 1.0
    term = 1.0
    running = 1.0
    log_scale = 0.0
    for i in range(1, c + 1):
        term = term * (rates[i - 1] / (i * mu))
        weights[i] = term
        running += term
        if running > _RENORM_THRESHOLD:
            weights[: i + 1] /= running
            term = weights[i]
            log_scale += math.log(running)
            running = 1.0
    total = float(weights.sum())
    probs = weights / total
    return StationaryDistribution(probs=probs, log_norm=log_scale + math.log(total))


def stationary_distribution_dense_oracle(
    profile: BirthRateProfile, mu: float
) -> StationaryDistribution:
    """Stationary distribution by directly solving the balance equations.

    Builds the generator matrix Q and solves pi Q = 0 with the
    normalisation sum(pi) = 1 substituted for one redundant balance row.
    Independent of the recurrence on purpose; limited to small chains
    where dense elimination is trustworthy.
    """
    if not isinstance(mu, (int, float)) or not math.isfinite(mu) or mu <= 0:
        raise ParameterError(f"mu must be a finite number > 0, got {mu!r}")
    c = profile.channels
    if c > DENSE_ORACLE_MAX_CHANNELS:
        raise UnsupportedSizeError(
            f"dense oracle supports at most {DENSE_ORACLE_MAX_CHANNELS} channels, got {c}"
        )
    rates = profile.rates
    q = np.zeros((c + 1, c + 1))
    for i in range(c):
        q[i, i + 1] = rates[i]
    for i in range(1, c + 1):
        q[i, i - 1] = i * mu
    np.fill_diagonal(q, -q.sum(axis=1))
    system = q.T.copy()
    system[c, :] = 1.0
    rhs = np.zeros(c + 1)
    rhs[c] = 1.0
    probs = np.linalg.solve(system, rhs)
    # Elimination can leave tiny negative round-off where the true mass is 0.
    probs = np.where(probs < 0.0, 0.0, probs)
    probs = probs / probs.sum()
    # P(0) = 1/Z is always positive: state 0 is reachable from everywhere.
    return StationaryDistribution(probs=probs, log_norm=-math.log(probs[0]))


def tail_mass(dist: StationaryDistribution, start: int) -> float:
    """Total stationary probability of states start..c."""
    if not 0 <= start <= dist.channels:
        raise IndexError(f"start must be in 0..{dist.channels}, got {start}")
    return float(dist.probs[start:].sum())
