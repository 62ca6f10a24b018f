import numpy as np
import pytest

from vigil import dp
from vigil.exceptions import DpError
from vigil.model import SourceParams
from vigil.verify import random_source, random_tail
from .helper import rng


def _instance(generator, max_horizon):
    p = random_source(generator, 0.01, 0.49)
    alpha = float(generator.uniform(0.1, 1.0))
    gamma = float(generator.uniform(0.0, 2.0 * alpha))
    horizon = int(generator.integers(1, max_horizon + 1))
    return p, alpha, gamma, horizon


def test_dp_matches_brute_force():
    generator = rng(101)
    for _ in range(200):
        p, alpha, gamma, horizon = _instance(generator, 6)
        tail = dp.TailProfile.from_mask(alpha, generator.integers(0, 2, size=horizon))
        solution = dp.solve_single_source_dp(p, alpha, gamma, tail)
        _, best = dp.brute_force_single_source(p, alpha, gamma, tail)
        assert solution.value == pytest.approx(best, abs=1e-9)
        assert dp.policy_cost(p, gamma, tail, solution.decisions) == pytest.approx(best, abs=1e-9)


def test_brute_force_policy_attains_its_value():
    p = SourceParams(mu=0.2, lambda_=0.35)
    tail = dp.TailProfile.constant(0.8, 5)
    decisions, value = dp.brute_force_single_source(p, 0.8, 0.3, tail)
    assert dp.policy_cost(p, 0.3, tail, decisions) == pytest.approx(value, abs=1e-12)


def test_structural_properties_hold():
    generator = rng(202)
    for _ in range(200):
        p, alpha, gamma, _ = _instance(generator, 1)
        horizon = int(generator.integers(4, 60))
        tail = random_tail(generator, alpha, horizon)
        solution = dp.solve_single_source_dp(p, alpha, gamma, tail)
        report = dp.check_structural_properties(p, alpha, gamma, tail, solution)
        assert report.passed, report.to_document()
        assert "prefix_threshold" in report.checked


@pytest.mark.slow
def test_structural_properties_hold_at_scale():
    generator = rng(303)
    for _ in range(1000):
        p, alpha, gamma, _ = _instance(generator, 1)
        horizon = int(generator.integers(4, 200))
        tail = random_tail(generator, alpha, horizon)
        report = dp.check_structural_properties(
            p, alpha, gamma, tail, dp.solve_single_source_dp(p, alpha, gamma, tail)
        )
        assert report.passed, report.to_document()


def test_terminal_gap():
    p = SourceParams(mu=0.15, lambda_=0.4)
    tail = dp.TailProfile.constant(0.7, 9)
    solution = dp.solve_single_source_dp(p, 0.7, 0.1, tail)
    assert solution.omega_series[9] == pytest.approx((1 - 2 * p.mu) * 0.7, abs=1e-12)
    assert solution.upsilon_series[9] == pytest.approx((1 - 2 * p.lambda_) * 0.7, abs=1e-12)


def test_flipped_decision_is_reported():
    p = SourceParams(mu=0.1, lambda_=0.3)
    tail = dp.TailProfile.constant(1.0, 6)
    solution = dp.solve_single_source_dp(p, 1.0, 0.0, tail)
    assert solution.decisions[6, 0, 1] == 1
    flipped = solution.decisions.copy()
    flipped[6, 0, 1] = 0
    report = dp.check_structural_properties(p, 1.0, 0.0, tail, solution, flipped)
    assert not report.passed
    assert "threshold_rule" in {v.prop for v in report.violations}


def test_expensive_updates_are_never_taken():
    p = SourceParams(mu=0.2, lambda_=0.3)
    tail = dp.TailProfile.constant(0.5, 10)
    solution = dp.solve_single_source_dp(p, 0.5, 0.5 * 10 + 1.0, tail)
    assert solution.decisions.sum() == 0


def test_silent_tail():
    p = SourceParams(mu=0.2, lambda_=0.3)
    tail = dp.TailProfile.monotone(0.5, 10, 4)
    solution = dp.solve_single_source_dp(p, 0.5, 0.01, tail)
    assert solution.decisions[5:].sum() == 0
    tables, decisions, value = solution
    assert value == solution.value
    assert tables.delta.shape == (11,)


def test_tail_profile():
    assert dp.TailProfile.monotone(0.5, 4, 2).values.tolist() == [0.0, 0.5, 0.5, 0.0, 0.0]
    assert dp.TailProfile.monotone(0.5, 4, 2).is_monotone
    assert not dp.TailProfile.from_mask(0.5, [0, 1, 1]).is_monotone
    with pytest.raises(DpError):
        dp.TailProfile(alpha=0.5, values=np.array([0.0, 0.3]))


def test_dp_errors():
    p = SourceParams(mu=0.2, lambda_=0.3)
    with pytest.raises(DpError):
        dp.solve_single_source_dp(p, 0.5, -0.1, dp.TailProfile.constant(0.5, 3))
    with pytest.raises(DpError):
        dp.brute_force_single_source(p, 0.5, 0.1, dp.TailProfile.constant(0.5, 9))


def test_calibrate_gamma():
    p = SourceParams(mu=0.2, lambda_=0.3)
    tail = dp.TailProfile.constant(0.6, 30)
    target = 0.5 * p.change_rate
    gamma = dp.calibrate_gamma(p, 0.6, tail, target)
    decisions = dp.solve_single_source_dp(p, 0.6, gamma, tail).decisions
    assert dp.policy_update_rate(p, decisions, 30) <= target + 1e-12
    lower = dp.solve_single_source_dp(p, 0.6, gamma - 1e-9, tail).decisions
    assert dp.policy_update_rate(p, lower, 30) > target
    with pytest.raises(DpError):
        dp.calibrate_gamma(p, 0.6, tail, p.change_rate + 0.1)
    with pytest.raises(DpError):
        dp.calibrate_gamma(p, 0.6, tail, -0.1)


def test_calibrate_gamma_zero_rate_never_updates():
    p = SourceParams(mu=0.2, lambda_=0.3)
    tail = dp.TailProfile.constant(0.6, 30)
    gamma = dp.calibrate_gamma(p, 0.6, tail, 0.0)
    decisions = dp.solve_single_source_dp(p, 0.6, gamma, tail).decisions
    assert decisions.sum() == 0
    assert dp.policy_update_rate(p, decisions, 30) == 0.0
