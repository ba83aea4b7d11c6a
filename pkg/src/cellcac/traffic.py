"""Single-cell traffic parameters and handoff flow balance.

New calls arrive in a cell as a Poisson stream with rate lambda_n. Call
length and cell dwell time are independent exponentials with rates mu_a
and eta, so a call occupies its channel for the minimum of the two, which
is again exponential with rate mu = mu_a + eta. A channel release is a
boundary crossing, rather than a completed call, with probability

    p_h = eta / (eta + mu_a).

In a homogeneous network every cell receives the handoff traffic its
neighbours shed, so the handoff arrival rate lambda_h must reproduce
itself through the cell's loss probabilities:

    lambda_h = lambda_n * p_h * (1 - p_block) / (1 - p_h * (1 - p_drop))

The right-hand side counts admitted new calls handing off at least once,
plus admitted handoff calls handing off again, as a geometric cascade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class TrafficParams:
    """Offered-traffic description of one cell.

    lambda_n: new-call arrival rate, calls per unit time (>= 0)
    mu_a:     call completion rate, i.e. 1 / mean call length (> 0)
    eta:      boundary crossing rate, i.e. 1 / mean cell dwell time (> 0)
    """

    lambda_n: float
    mu_a: float
    eta: float

    def __post_init__(self) -> None:
        for name in ("lambda_n", "mu_a", "eta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
        if self.lambda_n < 0:
            raise ParameterError(f"lambda_n must be >= 0, got {self.lambda_n}")
        if self.mu_a <= 0:
            raise ParameterError(f"mu_a must be > 0, got {self.mu_a}")
        if self.eta <= 0:
            raise ParameterError(f"eta must be > 0, got {self.eta}")


@dataclass(frozen=True)
class DerivedRates:
    """Rates implied by TrafficParams.

    mu:  channel release rate, mu_a + eta
    p_h: probability a release is a boundary crossing, eta / (eta + mu_a)
    """

    mu: float
    p_h: float


def derive_rates(params: TrafficParams) -> DerivedRates:
    """Compute the channel release rate and the handover probability."""
    return DerivedRates(mu=params.mu_a + params.eta, p_h=params.eta / (params.eta + params.mu_a))


def handoff_balance_rhs(
    params: TrafficParams, rates: DerivedRates, p_block: float, p_drop: float
) -> float:
    """Handoff arrival rate implied by the given loss probabilities.

    Evaluates lambda_n * p_h * (1 - p_block) / (1 - p_h * (1 - p_drop)).
    A fixed point of this map (in lambda_h, through the loss probabilities)
    is the self-consistent handoff rate of a homogeneous network.
    """
    for name, value in (("p_block", p_block), ("p_drop", p_drop)):
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            raise ParameterError(f"{name} must be in [0, 1], got {value!r}")
    # Denominator is >= 1 - p_h > 0 because p_h < 1 strictly (mu_a > 0).
    return params.lambda_n * rates.p_h * (1.0 - p_block) / (1.0 - rates.p_h * (1.0 - p_drop))
