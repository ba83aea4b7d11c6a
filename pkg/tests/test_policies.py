"""Admission policies: vectors, loss metrics, flow balance, alpha search."""

import math

import numpy as np
import pytest

from cellcac import (
    AcceptanceGuard,
    ConvergenceError,
    NewCallBounding,
    NonPriority,
    ParameterError,
    TrafficParams,
    admission_vector,
    birth_profile,
    evaluate,
    evaluate_with_flow_balance,
    optimal_alpha,
    policy_alpha,
)

# Cell geometry and rates used throughout: 130 channels, new calls bounded
# at 100, softened band up to 110, 120 s calls, 360 s dwell time.
PAPER = dict(channels=130, new_call_limit=100, cutoff=110)
PAPER_MU_A = 1.0 / 120.0
PAPER_ETA = 1.0 / 360.0


def paper_params(lambda_n):
    return TrafficParams(lambda_n=lambda_n, mu_a=PAPER_MU_A, eta=PAPER_ETA)


def erlang_b(load, channels):
    # B(0) = 1; B(k) = load*B(k-1) / (k + load*B(k-1)).
    b = 1.0
    for k in range(1, channels + 1):
        b = load * b / (k + load * b)
    return b


class TestValidation:
    def test_channels_must_be_positive_int(self):
        for bad in (0, -1, 1.5, True):
            with pytest.raises(ParameterError):
                NonPriority(channels=bad)

    def test_limit_range(self):
        with pytest.raises(ParameterError):
            NewCallBounding(channels=10, new_call_limit=11)
        with pytest.raises(ParameterError):
            NewCallBounding(channels=10, new_call_limit=-1)
        NewCallBounding(channels=10, new_call_limit=0)
        NewCallBounding(channels=10, new_call_limit=10)

    def test_guard_ordering(self):
        with pytest.raises(ParameterError):
            AcceptanceGuard(channels=10, new_call_limit=7, cutoff=5, alpha=0.5)
        AcceptanceGuard(channels=10, new_call_limit=5, cutoff=5, alpha=0.5)

    def test_alpha_domain(self):
        for bad in (-0.1, 1.1, math.nan, math.inf):
            with pytest.raises(ParameterError):
                AcceptanceGuard(channels=10, new_call_limit=5, cutoff=8, alpha=bad)
        AcceptanceGuard(channels=10, new_call_limit=5, cutoff=8, alpha=0.0)
        AcceptanceGuard(channels=10, new_call_limit=5, cutoff=8, alpha=1.0)

    def test_occupancy_domain(self):
        policy = NonPriority(channels=4)
        for bad in (-1, 5, 1.5):
            with pytest.raises(ParameterError):
                policy.admission_probability(bad)


class TestAdmissionProbability:
    def test_guard_bands(self):
        policy = AcceptanceGuard(**PAPER, alpha=0.5)
        assert policy.admission_probability(0) == 1.0
        assert policy.admission_probability(99) == 1.0
        assert policy.admission_probability(100) == 0.5
        assert policy.admission_probability(105) == 0.5
        assert policy.admission_probability(109) == 0.5
        assert policy.admission_probability(110) == 0.0
        assert policy.admission_probability(130) == 0.0

    def test_bounding_edge(self):
        policy = NewCallBounding(channels=130, new_call_limit=100)
        assert policy.admission_probability(99) == 1.0
        assert policy.admission_probability(100) == 0.0
        assert policy.guard_channels == 30

    def test_non_priority_full_cell(self):
        policy = NonPriority(channels=130)
        assert policy.admission_probability(129) == 1.0
        assert policy.admission_probability(130) == 0.0

    def test_numpy_occupancy_accepted(self):
        policy = NewCallBounding(channels=130, new_call_limit=100)
        assert policy.admission_probability(np.int64(99)) == 1.0

    def test_labels(self):
        assert NonPriority(channels=130).label == "non-priority(130)"
        assert (
            NewCallBounding(channels=130, new_call_limit=100).label
            == "new-call-bounding(130,100)"
        )
        assert (
            AcceptanceGuard(**PAPER, alpha=0.5).label
            == "acceptance-guard(130,100,110)"
        )

    def test_policy_alpha(self):
        assert policy_alpha(NonPriority(channels=4)) is None
        assert policy_alpha(NewCallBounding(channels=4, new_call_limit=2)) is None
        assert policy_alpha(AcceptanceGuard(4, 2, 3, 0.25)) == 0.25


class TestAdmissionVector:
    def test_shapes_and_values(self):
        assert list(admission_vector(NonPriority(channels=3))) == [1.0, 1.0, 1.0, 0.0]
        assert list(admission_vector(NewCallBounding(channels=3, new_call_limit=1))) == [
            1.0,
            0.0,
            0.0,
            0.0,
        ]
        assert list(admission_vector(AcceptanceGuard(3, 1, 2, 0.5))) == [
            1.0,
            0.5,
            0.0,
            0.0,
        ]

    def test_alpha_zero_matches_bounding_bitwise(self):
        guard = admission_vector(AcceptanceGuard(**PAPER, alpha=0.0))
        bounding = admission_vector(NewCallBounding(channels=130, new_call_limit=100))
        assert np.array_equal(guard, bounding)

    def test_alpha_one_matches_bounding_at_cutoff_bitwise(self):
        guard = admission_vector(AcceptanceGuard(**PAPER, alpha=1.0))
        bounding = admission_vector(NewCallBounding(channels=130, new_call_limit=110))
        assert np.array_equal(guard, bounding)

    def test_full_limit_matches_non_priority_bitwise(self):
        bounding = admission_vector(NewCallBounding(channels=130, new_call_limit=130))
        assert np.array_equal(bounding, admission_vector(NonPriority(channels=130)))


class TestBirthProfile:
    def test_non_priority(self):
        prof = birth_profile(NonPriority(channels=2), lambda_n=2.0, lambda_h=0.0)
        assert list(prof.rates) == [2.0, 2.0]

    def test_bounding(self):
        prof = birth_profile(
            NewCallBounding(channels=2, new_call_limit=1), lambda_n=1.0, lambda_h=1.0
        )
        assert list(prof.rates) == [2.0, 1.0]

    def test_guard(self):
        prof = birth_profile(AcceptanceGuard(2, 1, 2, 0.5), lambda_n=2.0, lambda_h=1.0)
        assert list(prof.rates) == [3.0, 2.0]

    def test_rate_domain(self):
        policy = NonPriority(channels=2)
        for bad in (-1.0, math.inf, math.nan):
            with pytest.raises(ParameterError):
                birth_profile(policy, lambda_n=bad, lambda_h=0.0)
            with pytest.raises(ParameterError):
                birth_profile(policy, lambda_n=0.0, lambda_h=bad)


class TestEvaluate:
    def test_non_priority_worked_example(self):
        # 1 erlang on 2 channels: pi = (1, 1, 1/2)/2.5, blocking = 0.2.
        metrics = evaluate(NonPriority(channels=2), lambda_n=2.0, lambda_h=0.0, mu=2.0)
        assert metrics.p_block == pytest.approx(0.2, abs=1e-15)
        assert metrics.p_drop == pytest.approx(0.2, abs=1e-15)

    def test_bounding_worked_example(self):
        # b = (2, 1), mu = 1: pi = (1, 2, 1)/4; the bounding policy rejects
        # new calls in states 1 and 2, so p_block = 3/4 and p_drop = 1/4.
        metrics = evaluate(
            NewCallBounding(channels=2, new_call_limit=1), lambda_n=1.0, lambda_h=1.0, mu=1.0
        )
        assert metrics.p_block == pytest.approx(0.75, abs=1e-15)
        assert metrics.p_drop == pytest.approx(0.25, abs=1e-15)

    def test_guard_worked_example(self):
        # b = (2, 1), mu = 1: pi = (1, 2, 1)/4; rejection weights are
        # (0, 0.5, 1), so p_block = 0.5*2/4 + 1/4 = 1/2.
        metrics = evaluate(AcceptanceGuard(2, 1, 2, 0.5), lambda_n=2.0, lambda_h=0.0, mu=1.0)
        assert metrics.p_block == pytest.approx(0.5, abs=1e-15)
        assert metrics.p_drop == pytest.approx(0.25, abs=1e-15)

    def test_externally_supplied_rate_is_echoed(self):
        metrics = evaluate(NonPriority(channels=2), lambda_n=1.0, lambda_h=0.25, mu=1.0)
        assert metrics.lambda_h == 0.25
        assert metrics.fp_iterations == 0
        assert math.isnan(metrics.fp_residual)

    def test_erlang_b_equivalence(self):
        # Without admission control the chain is M/M/c/c on the combined
        # stream, so blocking must match the Erlang-B recursion.
        for c, lam_n, lam_h, mu in [
            (2, 2.0, 0.0, 2.0),
            (5, 3.0, 1.0, 1.0),
            (30, 20.0, 5.0, 1.0),
            (130, 1.0, 0.3, 1.0 / 90.0),
        ]:
            metrics = evaluate(NonPriority(channels=c), lam_n, lam_h, mu)
            expected = erlang_b((lam_n + lam_h) / mu, c)
            assert metrics.p_block == pytest.approx(expected, rel=1e-12)
            assert metrics.p_drop == pytest.approx(expected, rel=1e-12)

    def test_pure_handoff_stream_is_erlang_b(self):
        # With lambda_n = 0 the admission vector is irrelevant and every
        # policy sees a plain M/M/c/c handoff stream.
        for policy in (
            NonPriority(channels=12),
            NewCallBounding(channels=12, new_call_limit=5),
            AcceptanceGuard(12, 5, 9, 0.3),
        ):
            metrics = evaluate(policy, lambda_n=0.0, lambda_h=7.0, mu=1.0)
            assert metrics.p_drop == pytest.approx(erlang_b(7.0, 12), rel=1e-12)

    def test_limiting_cases_bit_identical(self):
        # alpha = 0 and alpha = 1 collapse to bounding policies; m = c
        # collapses to non-priority. Identical chains must produce
        # identical floats, not merely close ones.
        lam_n, lam_h, mu = 1.0, 0.3, 1.0 / 90.0
        guard0 = evaluate(AcceptanceGuard(**PAPER, alpha=0.0), lam_n, lam_h, mu)
        bound_m = evaluate(NewCallBounding(130, 100), lam_n, lam_h, mu)
        assert guard0.p_block == bound_m.p_block
        assert guard0.p_drop == bound_m.p_drop

        guard1 = evaluate(AcceptanceGuard(**PAPER, alpha=1.0), lam_n, lam_h, mu)
        bound_n = evaluate(NewCallBounding(130, 110), lam_n, lam_h, mu)
        assert guard1.p_block == bound_n.p_block
        assert guard1.p_drop == bound_n.p_drop

        bound_c = evaluate(NewCallBounding(130, 130), lam_n, lam_h, mu)
        nonprio = evaluate(NonPriority(130), lam_n, lam_h, mu)
        assert bound_c.p_block == nonprio.p_block
        assert bound_c.p_drop == nonprio.p_drop

    def test_drop_never_exceeds_block_with_guard_band(self):
        # Policies rejecting new calls at and above some threshold satisfy
        # p_drop = P(c) <= sum_{i} P(i)(1 - a(i)) = p_block.
        for lam_n in (0.3, 1.0, 3.0):
            for policy in (
                NewCallBounding(130, 100),
                AcceptanceGuard(**PAPER, alpha=0.5),
            ):
                metrics = evaluate(policy, lam_n, 0.25 * lam_n, 1.0 / 90.0)
                assert metrics.p_drop <= metrics.p_block

    def test_block_monotone_in_lambda_n(self):
        mu = 1.0 / 90.0
        for policy in (
            NonPriority(130),
            NewCallBounding(130, 100),
            AcceptanceGuard(**PAPER, alpha=0.5),
        ):
            grid = np.linspace(0.1, 3.0, 12)
            blocks = [evaluate(policy, g, 0.2, mu).p_block for g in grid]
            assert all(b2 >= b1 - 1e-15 for b1, b2 in zip(blocks, blocks[1:]))

    def test_drop_monotone_in_lambda_h(self):
        mu = 1.0 / 90.0
        policy = AcceptanceGuard(**PAPER, alpha=0.5)
        grid = np.linspace(0.0, 1.0, 12)
        drops = [evaluate(policy, 1.0, g, mu).p_drop for g in grid]
        assert all(d2 >= d1 - 1e-18 for d1, d2 in zip(drops, drops[1:]))

    def test_alpha_tradeoff_at_fixed_rates(self):
        # At fixed arrival rates a larger alpha admits more new calls:
        # blocking falls, occupancy rises, dropping rises.
        mu = 1.0 / 90.0
        alphas = np.linspace(0.0, 1.0, 11)
        metrics = [
            evaluate(AcceptanceGuard(**PAPER, alpha=float(a)), 1.2, 0.3, mu)
            for a in alphas
        ]
        blocks = [m.p_block for m in metrics]
        drops = [m.p_drop for m in metrics]
        assert all(b2 <= b1 + 1e-15 for b1, b2 in zip(blocks, blocks[1:]))
        assert all(d2 >= d1 - 1e-18 for d1, d2 in zip(drops, drops[1:]))

    def test_block_clamped_at_one(self):
        # At extreme overload the rejection mass may round to 1 + 1 ulp;
        # the reported probability must stay in [0, 1].
        metrics = evaluate(NewCallBounding(130, 100), 100.0, 25.0, 1.0 / 90.0)
        assert metrics.p_block <= 1.0


class TestFlowBalance:
    def test_reference_operating_point(self):
        # Frozen reference at lambda_n = 1.0 under the standard geometry;
        # self-consistency below is the correctness check, these values
        # pin determinism.
        metrics = evaluate_with_flow_balance(NonPriority(130), paper_params(1.0))
        assert metrics.p_block == pytest.approx(0.02502514611875049, rel=1e-12)
        assert metrics.p_drop == metrics.p_block

        metrics = evaluate_with_flow_balance(NewCallBounding(130, 100), paper_params(1.0))
        assert metrics.p_block == pytest.approx(0.20034930705647566, rel=1e-12)

        metrics = evaluate_with_flow_balance(
            AcceptanceGuard(**PAPER, alpha=0.5), paper_params(1.0)
        )
        assert metrics.p_block == pytest.approx(0.18735193260367616, rel=1e-12)
        assert metrics.lambda_h == pytest.approx(0.27088268906721513, rel=1e-12)

    def test_fixed_point_is_self_consistent(self):
        # The returned lambda_h must reproduce itself through the losses
        # it induces: lambda_h = lambda_n p_h (1-p_b) / (1 - p_h (1-p_d)).
        from cellcac import derive_rates, handoff_balance_rhs

        for lam_n in (0.2, 1.0, 3.0):
            params = paper_params(lam_n)
            rates = derive_rates(params)
            for policy in (
                NonPriority(130),
                NewCallBounding(130, 100),
                AcceptanceGuard(**PAPER, alpha=0.5),
            ):
                metrics = evaluate_with_flow_balance(policy, params)
                rhs = handoff_balance_rhs(params, rates, metrics.p_block, metrics.p_drop)
                assert abs(rhs - metrics.lambda_h) <= 1e-10 * max(lam_n, 1.0)
                assert metrics.fp_iterations >= 1
                assert metrics.fp_residual <= 1e-10 * max(lam_n, 1.0)
                # Re-evaluating at the fixed point reproduces the metrics.
                direct = evaluate(policy, lam_n, metrics.lambda_h, rates.mu)
                assert direct.p_block == metrics.p_block
                assert direct.p_drop == metrics.p_drop

    def test_low_load_limit(self):
        # With negligible loss the balance reduces to
        # lambda_h = lambda_n p_h / (1 - p_h) = lambda_n / 3 here. The
        # stopping tolerance is 1e-10 absolute at this load, which caps
        # the relative accuracy near 3e-7.
        params = paper_params(1e-3)
        metrics = evaluate_with_flow_balance(AcceptanceGuard(**PAPER, alpha=0.5), params)
        assert metrics.lambda_h == pytest.approx(1e-3 / 3.0, rel=1e-5)
        assert metrics.p_block < 1e-12

    def test_mu_override(self):
        # Overriding the channel release rate changes the chain but keeps
        # the handover probability from params.
        params = paper_params(1.0)
        fast = evaluate_with_flow_balance(NonPriority(130), params, mu=1.0)
        default = evaluate_with_flow_balance(NonPriority(130), params)
        assert fast.p_block < default.p_block

    def test_zero_new_traffic(self):
        metrics = evaluate_with_flow_balance(NonPriority(130), paper_params(0.0))
        assert metrics.lambda_h == 0.0
        assert metrics.p_block == 0.0
        assert metrics.p_drop == 0.0

    def test_convergence_error_carries_state(self):
        with pytest.raises(ConvergenceError) as exc_info:
            evaluate_with_flow_balance(
                NonPriority(130), paper_params(1.0), max_iterations=2
            )
        err = exc_info.value
        assert err.iterations == 2
        assert math.isfinite(err.lambda_h)
        assert err.residual > 0.0
        assert "did not converge" in str(err)

    def test_control_parameter_domains(self):
        params = paper_params(1.0)
        with pytest.raises(ParameterError):
            evaluate_with_flow_balance(NonPriority(130), params, damping=0.0)
        with pytest.raises(ParameterError):
            evaluate_with_flow_balance(NonPriority(130), params, damping=1.5)
        with pytest.raises(ParameterError):
            evaluate_with_flow_balance(NonPriority(130), params, max_iterations=0)


class TestOptimalAlpha:
    def test_singleton_grid(self):
        result = optimal_alpha(100, 110, 130, paper_params(1.0), [0.5])
        assert result.alpha_star == 0.5
        assert len(result.grid) == 1
        direct = evaluate_with_flow_balance(
            AcceptanceGuard(**PAPER, alpha=0.5), paper_params(1.0)
        )
        assert result.metrics.p_block == direct.p_block

    def test_grid_order_preserved(self):
        result = optimal_alpha(100, 110, 130, paper_params(1.0), [0.9, 0.1, 0.5])
        assert [a for a, _ in result.grid] == [0.9, 0.1, 0.5]

    def test_moderate_load_prefers_largest_alpha(self):
        # Under flow balance, blocking decreases in alpha at this load, so
        # the search lands on the top of the grid.
        result = optimal_alpha(100, 110, 130, paper_params(1.0), [0.1, 0.5, 0.9])
        assert result.alpha_star == 0.9
        assert result.metrics.p_block == min(m.p_block for _, m in result.grid)

    def test_plateau_tie_resolves_to_smallest_alpha(self):
        # At very low load every alpha blocks essentially nothing; the tie
        # must resolve to the smallest alpha, not the scan order.
        result = optimal_alpha(100, 110, 130, paper_params(0.2), [0.9, 0.5, 0.1])
        assert result.alpha_star == 0.1

    def test_tie_tolerance_override(self):
        result = optimal_alpha(
            100, 110, 130, paper_params(1.0), [0.1, 0.9], tie_tolerance=1.0
        )
        assert result.alpha_star == 0.1

    def test_empty_grid_rejected(self):
        with pytest.raises(ParameterError):
            optimal_alpha(100, 110, 130, paper_params(1.0), [])

    def test_convergence_error_names_alpha(self, monkeypatch):
        import cellcac.policies as policies_module

        def explode(policy, params, mu=None):
            raise ConvergenceError(
                "flow balance did not converge", lambda_h=1.5, residual=0.25, iterations=7
            )

        monkeypatch.setattr(policies_module, "evaluate_with_flow_balance", explode)
        with pytest.raises(ConvergenceError) as exc_info:
            policies_module.optimal_alpha(100, 110, 130, paper_params(1.0), [0.3])
        assert "alpha=0.3" in str(exc_info.value)
        assert exc_info.value.iterations == 7
        assert exc_info.value.lambda_h == 1.5
