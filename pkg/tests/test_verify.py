import dataclasses

import numpy as np
import pytest

from vigil import dp, kkt, verify
from .helper import rng


def test_worked_example_check():
    assert verify.check_worked_example().passed


def test_dp_check_passes():
    result = verify.check_dp_brute_force(rng(1), instances=10, max_horizon=4)
    assert result.passed
    assert result.instances == 10


def test_structural_check_passes():
    assert verify.check_structural(rng(2), instances=10).passed


def test_lp_check_passes():
    assert verify.check_lp_agreement(rng(3), instances=5, max_sources=3).passed


def test_lp_check_catches_shifted_tau(monkeypatch):
    tau_values = kkt.tau_values

    def shifted(cfg, alpha, theta):
        # leading alpha taken one index too late
        tau = tau_values(cfg, alpha, theta)
        return tau - alpha.values + np.concatenate((alpha.values[1:], [0.0]))

    monkeypatch.setattr(kkt, "tau_values", shifted)
    result = verify.check_lp_agreement(rng(3), instances=10, max_sources=4)
    assert not result.passed
    assert "config" in result.witness


def test_structural_check_catches_zero_terminal_row(monkeypatch):
    solve = dp.solve_single_source_dp

    def zero_terminal(p, alpha, gamma, tail):
        solution = solve(p, alpha, gamma, tail)
        tau = solution.tables.tau.copy()
        omega, upsilon = solution.omega_series.copy(), solution.upsilon_series.copy()
        decisions = solution.decisions.copy()
        horizon = tail.horizon
        tau[horizon] = 0.0
        omega[horizon] = upsilon[horizon] = 0.0
        decisions[horizon] = 0
        return dataclasses.replace(
            solution,
            tables=dp.DpTables(tau=tau, gamma=gamma),
            decisions=decisions,
            omega_series=omega,
            upsilon_series=upsilon,
        )

    monkeypatch.setattr(dp, "solve_single_source_dp", zero_terminal)
    # the terminal row only matters when the tail is active at T
    monkeypatch.setattr(verify, "random_tail", lambda generator, alpha, horizon: dp.TailProfile.constant(alpha, horizon))
    result = verify.check_structural(rng(2), instances=20)
    assert not result.passed
    assert result.witness["violation"]["property"] == "terminal_gap"


def test_sandwich_check_passes():
    assert verify.check_sandwich(rng(4), instances=10).passed


def test_concavity_check_passes():
    assert verify.check_concavity(rng(5), instances=5).passed


def test_rate_contract_check_passes():
    assert verify.check_rate_contract(rng(6), instances=3, horizon=200).passed


def test_failed_check_keeps_first_witness():
    result = verify.CheckResult("demo")
    result.fail(step=1)
    result.fail(step=2)
    assert not result.passed
    assert result.witness == {"step": 1}
    verdict = verify.Verdict(checks=[result, verify.CheckResult("other")])
    assert verdict.to_document()["passed"] is False


@pytest.mark.slow
def test_run_all():
    verdict = verify.run_all(0)
    assert verdict.passed, verdict.to_document()


def test_full_scale_covers_acceptance_sizes():
    assert verify.FULL_SCALE["structural"]["instances"] >= 1000
    assert verify.FULL_SCALE["lp_agreement"] == {"instances": 100, "max_sources": 6}
    assert set(verify.FULL_SCALE) == set(verify.QUICK_SCALE)


@pytest.mark.slow
def test_run_all_full_scale():
    verdict = verify.run_all(1, full=True)
    assert verdict.passed, verdict.to_document()
    assert {c.name: c.instances for c in verdict.checks}["structural_properties"] == 1000
