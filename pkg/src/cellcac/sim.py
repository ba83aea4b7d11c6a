"""Discrete-event simulation of one cell under an admission policy.

Each admitted call holds a channel for an Exp(mu_a + eta) time, drawn
once at admission; whether the release is a completion or a boundary
crossing is an independent coin with the handover probability. This is
distributionally identical to racing separate call-length and dwell
clocks and taking the earlier, by the competing-exponentials property.

Handoff traffic can be modelled two ways:

* OpenLoop: handoff arrivals form an independent Poisson stream with a
  fixed rate, as when the neighbourhood's state is given exogenously.
* ClosedLoopWraparound: the cell stands in for its statistically
  identical neighbours, so a call crossing the boundary re-offers itself
  to the same cell. The re-offer contends while its old channel is still
  held, because the cell it would enter is just as loaded as the one it
  leaves; it is dropped exactly when the cell is full at the crossing
  instant, and otherwise continues with a fresh (memoryless) holding
  time.

Runs are deterministic in the seed: every random stream (new-call gaps,
handoff gaps, holding times, release coins, admission coins) is a
separate PCG64 generator spawned from the seed, so policies that consume
different streams at different rates still replay exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import BatchError, CellcacError, DegenerateRunError, ParameterError
from .policies import Policy, admission_vector
from .traffic import TrafficParams, derive_rates

# Random draws are produced in blocks of this size and consumed as plain
# Python floats; per-draw generator calls would dominate the event loop.
_BLOCK = 1 << 14

_STREAM_NEW = 0
_STREAM_HANDOFF = 1
_STREAM_HOLDING = 2
_STREAM_RELEASE = 3
_STREAM_ADMISSION = 4

# Normal 97.5% quantile, for two-sided 95% confidence halfwidths.
_Z95 = 1.959963984540054

_INF = float("inf")


@dataclass(frozen=True)
class OpenLoop:
    """Handoff arrivals as an independent Poisson stream at lambda_h."""

    lambda_h: float

    def __post_init__(self) -> None:
        if (
            not isinstance(self.lambda_h, (int, float))
            or not math.isfinite(self.lambda_h)
            or self.lambda_h < 0
        ):
            raise ParameterError(f"lambda_h must be a finite number >= 0, got {self.lambda_h!r}")


@dataclass(frozen=True)
class ClosedLoopWraparound:
    """Handoff departures re-offer themselves to the same cell."""


SimMode = Union[OpenLoop, ClosedLoopWraparound]


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    policy:          admission policy under test
    params:          new-call rate and per-call clocks; the handoff rate
                     comes from the mode (OpenLoop) or emerges (closed)
    mode:            OpenLoop(lambda_h) or ClosedLoopWraparound()
    seed:            root seed; equal seeds replay identical runs
    target_arrivals: offers of the counted stream measured after warmup
    warmup_arrivals: offers discarded before measurement starts; default
                     is 10% of target_arrivals, at least 10_000
    target_stream:   which offer stream drives warmup and termination,
                     "new" (default) or "handoff"
    """

    policy: Policy
    params: TrafficParams
    mode: SimMode
    seed: int
    target_arrivals: int
    warmup_arrivals: int | None = None
    target_stream: str = "new"

    def __post_init__(self) -> None:
        if (
            not isinstance(self.seed, int)
            or isinstance(self.seed, bool)
            or not 0 <= self.seed < 2**64
        ):
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not isinstance(self.target_arrivals, int) or self.target_arrivals < 1:
            raise ParameterError(
                f"target_arrivals must be an integer >= 1, got {self.target_arrivals!r}"
            )
        if self.warmup_arrivals is not None and (
            not isinstance(self.warmup_arrivals, int) or self.warmup_arrivals < 0
        ):
            raise ParameterError(
                f"warmup_arrivals must be an integer >= 0, got {self.warmup_arrivals!r}"
            )
        if self.target_stream not in ("new", "handoff"):
            raise ParameterError(
                f"target_stream must be 'new' or 'handoff', got {self.target_stream!r}"
            )

    @property
    def effective_warmup(self) -> int:
        if self.warmup_arrivals is not None:
            return self.warmup_arrivals
        return max(10_000, self.target_arrivals // 10)


@dataclass(frozen=True)
class SimReport:
    """Measured-window statistics of one run.

    Counts cover offers inside the measurement window only. Probability
    estimates are offered-weighted fractions with 95% confidence
    halfwidths from the normal approximation; NaN when the corresponding
    stream produced no offers. measured_lambda_h is the handoff offer
    rate over the window, the quantity flow balance predicts.
    """

    new_offered: int
    new_blocked: int
    handoff_offered: int
    handoff_dropped: int
    p_block_hat: float
    p_drop_hat: float
    ci95_block: float
    ci95_drop: float
    measured_lambda_h: float
    window_time: float


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _fraction_with_ci(successes: int, trials: int) -> tuple[float, float]:
    if trials == 0:
        return float("nan"), float("nan")
    p = successes / trials
    return p, _Z95 * math.sqrt(p * (1.0 - p) / trials)


def simulate(config: SimConfig) -> SimReport:
    """Run one cell to a fixed number of counted offers and report rates.

    Raises DegenerateRunError when the counted stream can never produce
    offers under the configured rates, since the run would spin forever.
    """
    params = config.params
    closed = isinstance(config.mode, ClosedLoopWraparound)
    lambda_n = params.lambda_n
    lambda_h = 0.0 if closed else config.mode.lambda_h
    count_new = config.target_stream == "new"
    if count_new and lambda_n == 0:
        raise DegenerateRunError("target_stream is 'new' but lambda_n is 0; no offers can occur")
    if not count_new:
        if closed and lambda_n == 0:
            raise DegenerateRunError(
                "target_stream is 'handoff' in closed loop but lambda_n is 0; "
                "no calls ever enter, so none can hand off"
            )
        if not closed and lambda_h == 0:
            raise DegenerateRunError(
                "target_stream is 'handoff' but the open-loop handoff rate is 0"
            )

    rates = derive_rates(params)
    mu = rates.mu
    p_h = rates.p_h
    c = config.policy.channels
    accept = admission_vector(config.policy).tolist()
    needs_coin = any(0.0 < a < 1.0 for a in accept)
    if not count_new and closed and max(accept) <= 0.0:
        raise DegenerateRunError(
            "target_stream is 'handoff' in closed loop but the policy admits no new calls, "
            "so no call can ever hand off"
        )

    seed = config.seed
    rng_hold = _stream(seed, _STREAM_HOLDING)
    hold_scale = 1.0 / mu
    hold_buf = rng_hold.exponential(hold_scale, _BLOCK).tolist()
    hold_i = 0

    if lambda_n > 0:
        rng_new = _stream(seed, _STREAM_NEW)
        new_scale = 1.0 / lambda_n
        new_buf = rng_new.exponential(new_scale, _BLOCK).tolist()
        new_i = 1
        next_new = new_buf[0]
    else:
        rng_new = None
        new_buf = []
        new_i = 0
        next_new = _INF

    if lambda_h > 0:
        rng_ho = _stream(seed, _STREAM_HANDOFF)
        ho_scale = 1.0 / lambda_h
        ho_buf = rng_ho.exponential(ho_scale, _BLOCK).tolist()
        ho_i = 1
        next_ho = ho_buf[0]
    else:
        rng_ho = None
        ho_buf = []
        ho_i = 0
        next_ho = _INF

    if closed:
        rng_release = _stream(seed, _STREAM_RELEASE)
        rel_buf = rng_release.random(_BLOCK).tolist()
        rel_i = 0
    if needs_coin:
        rng_adm = _stream(seed, _STREAM_ADMISSION)
        adm_buf = rng_adm.random(_BLOCK).tolist()
        adm_i = 0

    warmup = config.effective_warmup
    goal = warmup + config.target_arrivals
    counted = 0
    measuring = warmup == 0
    t_start = 0.0
    t_end = 0.0

    new_offered = 0
    new_blocked = 0
    ho_offered = 0
    ho_dropped = 0

    heap: list[float] = []
    push = heapq.heappush
    pop = heapq.heappop

    while True:
        t_dep = heap[0] if heap else _INF
        if next_new <= t_dep and next_new <= next_ho:
            t = next_new
            if count_new:
                if not measuring and counted == warmup:
                    measuring = True
                    t_start = t
                counted += 1
            occ = len(heap)
            pa = accept[occ]
            if pa >= 1.0:
                admitted = True
            elif pa <= 0.0:
                admitted = False
            else:
                if adm_i == _BLOCK:
                    adm_buf = rng_adm.random(_BLOCK).tolist()
                    adm_i = 0
                admitted = adm_buf[adm_i] < pa
                adm_i += 1
            if measuring:
                new_offered += 1
                if not admitted:
                    new_blocked += 1
            if admitted:
                if hold_i == _BLOCK:
                    hold_buf = rng_hold.exponential(hold_scale, _BLOCK).tolist()
                    hold_i = 0
                push(heap, t + hold_buf[hold_i])
                hold_i += 1
            if count_new and counted == goal:
                t_end = t
                break
            if new_i == _BLOCK:
                new_buf = rng_new.exponential(new_scale, _BLOCK).tolist()
                new_i = 0
            next_new = t + new_buf[new_i]
            new_i += 1
        elif next_ho <= t_dep:
            t = next_ho
            if not count_new:
                if not measuring and counted == warmup:
                    measuring = True
                    t_start = t
                counted += 1
            occ = len(heap)
            admitted = occ < c
            if measuring:
                ho_offered += 1
                if not admitted:
                    ho_dropped += 1
            if admitted:
                if hold_i == _BLOCK:
                    hold_buf = rng_hold.exponential(hold_scale, _BLOCK).tolist()
                    hold_i = 0
                push(heap, t + hold_buf[hold_i])
                hold_i += 1
            if not count_new and counted == goal:
                t_end = t
                break
            if ho_i == _BLOCK:
                ho_buf = rng_ho.exponential(ho_scale, _BLOCK).tolist()
                ho_i = 0
            next_ho = t + ho_buf[ho_i]
            ho_i += 1
        else:
            t = pop(heap)
            if closed:
                if rel_i == _BLOCK:
                    rel_buf = rng_release.random(_BLOCK).tolist()
                    rel_i = 0
                hands_off = rel_buf[rel_i] < p_h
                rel_i += 1
                if hands_off:
                    # Crossing call re-offers while still holding its old
                    # channel; the target cell is statistically this one.
                    if not count_new:
                        if not measuring and counted == warmup:
                            measuring = True
                            t_start = t
                        counted += 1
                    admitted = len(heap) + 1 < c
                    if measuring:
                        ho_offered += 1
                        if not admitted:
                            ho_dropped += 1
                    if admitted:
                        if hold_i == _BLOCK:
                            hold_buf = rng_hold.exponential(hold_scale, _BLOCK).tolist()
                            hold_i = 0
                        push(heap, t + hold_buf[hold_i])
                        hold_i += 1
                    if not count_new and counted == goal:
                        t_end = t
                        break

    window = t_end - t_start
    p_block_hat, ci95_block = _fraction_with_ci(new_blocked, new_offered)
    p_drop_hat, ci95_drop = _fraction_with_ci(ho_dropped, ho_offered)
    measured_lambda_h = ho_offered / window if window > 0 else float("nan")
    return SimReport(
        new_offered=new_offered,
        new_blocked=new_blocked,
        handoff_offered=ho_offered,
        handoff_dropped=ho_dropped,
        p_block_hat=p_block_hat,
        p_drop_hat=p_drop_hat,
        ci95_block=ci95_block,
        ci95_drop=ci95_drop,
        measured_lambda_h=measured_lambda_h,
        window_time=window,
    )


def batch_simulate(configs: Sequence[SimConfig]) -> list[SimReport]:
    """Run several configs and return reports in input order.

    Every config is attempted even if an earlier one fails; failures are
    then raised together as a BatchError carrying (index, exception)
    pairs plus the successful reports, so one bad config cannot silently
    discard the rest of the batch.
    """
    configs = list(configs)
    if not configs:
        raise ParameterError("configs must not be empty")
    reports: list[SimReport | None] = []
    failures: list[tuple[int, Exception]] = []
    for index, config in enumerate(configs):
        try:
            reports.append(simulate(config))
        except CellcacError as err:
            failures.append((index, err))
            reports.append(None)
    if failures:
        detail = "; ".join(f"config {i}: {err}" for i, err in failures)
        raise BatchError(
            f"{len(failures)} of {len(configs)} runs failed: {detail}",
            failures=failures,
            reports=reports,
        )
    return reports
