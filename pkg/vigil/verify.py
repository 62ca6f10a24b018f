"""Oracle and property checks over seeded random instances.

Every check returns a ``CheckResult``; a failure carries the first witness found.
"""
import typing
from dataclasses import dataclass, field

import numpy as np

from . import analysis, dp, kkt, sim
from .exceptions import BaseError
from .model import SourceParams, SystemConfig, alpha_table
from .policy import ThreeStageSpec, TabularPolicy, compile_three_stage, empty_table
from .utils.logger import get_logger

log = get_logger("vigil.verify")

PARAM_LOW, PARAM_HIGH = 0.05, 0.45


@dataclass
class CheckResult:
    name: str
    passed: bool = True
    instances: int = 0
    witness: typing.Optional[dict] = None

    def fail(self, **witness):
        if self.passed:
            self.passed = False
            self.witness = witness

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "instances": self.instances,
            "witness": self.witness,
        }


@dataclass
class Verdict:
    checks: typing.List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_document(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_document() for c in self.checks]}


def random_source(rng: np.random.Generator, low: float = PARAM_LOW, high: float = PARAM_HIGH) -> SourceParams:
    mu, lam = rng.uniform(low, high, size=2)
    return SourceParams(mu=float(mu), lambda_=float(lam))


def random_config(
    rng: np.random.Generator,
    n_sources: int,
    k_select: int,
    horizon: int,
    rate_budget: float = None,
) -> SystemConfig:
    sources = tuple(random_source(rng) for _ in range(n_sources))
    full = sum(p.change_rate for p in sources)
    if rate_budget is None:
        rate_budget = float(rng.uniform(0.0, full))
    return SystemConfig(
        n_sources=n_sources,
        k_select=k_select,
        horizon=horizon,
        rate_budget=rate_budget,
        sources=sources,
    )


def random_three_stage_policy(rng: np.random.Generator, cfg: SystemConfig) -> TabularPolicy:
    switch = rng.integers(0, cfg.horizon + 1, size=cfg.n_sources)
    return compile_three_stage(cfg, ThreeStageSpec.for_config(cfg, switch))


def random_policy(rng: np.random.Generator, cfg: SystemConfig) -> TabularPolicy:
    table = empty_table(cfg.n_sources, cfg.horizon)
    table[:, 1:, 0, 1] = rng.integers(0, 2, size=(cfg.n_sources, cfg.horizon))
    table[:, 1:, 1, 0] = rng.integers(0, 2, size=(cfg.n_sources, cfg.horizon))
    return TabularPolicy(decisions=table)


def random_tail(rng: np.random.Generator, alpha: float, horizon: int) -> dp.TailProfile:
    return dp.TailProfile.monotone(alpha, horizon, int(rng.integers(0, horizon + 1)))


def check_dp_brute_force(rng: np.random.Generator, instances: int = 20, max_horizon: int = 5) -> CheckResult:
    result = CheckResult("dp_brute_force")
    for _ in range(instances):
        p = random_source(rng, 0.01, 0.49)
        alpha = float(rng.uniform(0.1, 1.0))
        gamma = float(rng.uniform(0.0, 2.0 * alpha))
        horizon = int(rng.integers(1, max_horizon + 1))
        mask = rng.integers(0, 2, size=horizon).astype(bool)
        tail = dp.TailProfile.from_mask(alpha, mask)
        solution = dp.solve_single_source_dp(p, alpha, gamma, tail)
        _, best = dp.brute_force_single_source(p, alpha, gamma, tail)
        attained = dp.policy_cost(p, gamma, tail, solution.decisions)
        result.instances += 1
        if abs(solution.value - best) > 1e-9 or abs(attained - best) > 1e-9:
            result.fail(mu=p.mu, lambda_=p.lambda_, alpha=alpha, gamma=gamma,
                        mask=mask.tolist(), dp_value=solution.value, brute_force=best)
    return result


def check_structural(rng: np.random.Generator, instances: int = 50, max_horizon: int = 50) -> CheckResult:
    result = CheckResult("structural_properties")
    for _ in range(instances):
        p = random_source(rng, 0.01, 0.49)
        alpha = float(rng.uniform(0.1, 1.0))
        gamma = float(rng.uniform(0.0, 2.0 * alpha))
        horizon = int(rng.integers(4, max_horizon + 1))
        tail = random_tail(rng, alpha, horizon)
        solution = dp.solve_single_source_dp(p, alpha, gamma, tail)
        report = dp.check_structural_properties(p, alpha, gamma, tail, solution)
        result.instances += 1
        if not report.passed:
            result.fail(mu=p.mu, lambda_=p.lambda_, alpha=alpha, gamma=gamma,
                        horizon=horizon, violation=report.first_violation.to_document())
    return result


def check_lp_agreement(rng: np.random.Generator, instances: int = 10, max_sources: int = 4, horizon: int = 1000) -> CheckResult:
    result = CheckResult("lp_agreement")
    for _ in range(instances):
        n = int(rng.integers(1, max_sources + 1))
        cfg = random_config(rng, n, int(rng.integers(1, n + 1)), horizon)
        alpha = alpha_table(cfg)
        result.instances += 1
        try:
            point = kkt.embed_solution(cfg, alpha, kkt.compute_Tn(cfg, alpha))
        except BaseError as e:
            result.fail(config=cfg.to_document(), error=str(e))
            continue
        optimum = kkt.lp_oracle(cfg, alpha)
        violations = kkt.check_lp_feasibility(cfg, point.s, point.z)
        if violations or abs(point.objective - optimum.objective) > 1e-6 * horizon:
            result.fail(config=cfg.to_document(), embedded=point.objective,
                        oracle=optimum.objective, violations=violations)
    return result


def check_sandwich(rng: np.random.Generator, instances: int = 20) -> CheckResult:
    result = CheckResult("error_sandwich")
    for i in range(instances):
        n = int(rng.integers(1, 5))
        cfg = random_config(rng, n, int(rng.integers(1, min(n, 2) + 1)), int(rng.integers(1, 13)))
        policy = random_three_stage_policy(rng, cfg) if i % 2 == 0 else random_policy(rng, cfg)
        alpha = alpha_table(cfg)
        exact = sim.exact_joint_evaluation(cfg, policy)
        betas = analysis.betas_matrix(analysis.propagate_policy(cfg, policy))
        result.instances += 1
        for t in range(1, cfg.horizon + 1):
            upper = analysis.rho_at(cfg, alpha, betas, t).rho
            union = analysis.rho_at(cfg, alpha, betas, t, admit_union_bound=True).rho
            error = exact.error_per_t[t]
            if error > upper + 1e-9 or error < union / 4.0 - 1e-9 or error > union + 1e-9:
                result.fail(config=cfg.to_document(), t=t, error=error, rho=upper, rho_union=union)
                break
    return result


def check_concavity(rng: np.random.Generator, instances: int = 10) -> CheckResult:
    result = CheckResult("concavity")
    for _ in range(instances):
        k = int(rng.integers(2, 5))
        alphas = np.concatenate(([1.0], np.sort(rng.uniform(0.2, 1.0, size=k - 1))[::-1]))
        w = float(rng.uniform(0.0, alphas[-1]))
        closed = analysis.fk_closed_form(alphas, w)
        numeric = analysis.fk_numeric_max(alphas, w, 1e-3)
        result.instances += 1
        if abs(closed - numeric) > 1e-4 or max(closed, numeric) > w / 2.0 + 1e-12:
            result.fail(alphas=alphas.tolist(), w=w, closed=closed, numeric=numeric)
    return result


def check_rate_contract(rng: np.random.Generator, instances: int = 5, horizon: int = 1000) -> CheckResult:
    result = CheckResult("rate_contract")
    for _ in range(instances):
        n = int(rng.integers(1, 5))
        cfg = random_config(rng, n, 1, horizon)
        result.instances += 1
        try:
            solution = kkt.compute_Tn(cfg, alpha_table(cfg))
        except BaseError as e:
            result.fail(config=cfg.to_document(), error=str(e))
            continue
        policy = compile_three_stage(cfg, kkt.three_stage_spec(cfg, solution))
        rate = analysis.policy_rate(analysis.propagate_policy(cfg, policy), horizon)
        if rate > cfg.rate_budget + 2.0 * cfg.n_sources / horizon + 1e-12:
            result.fail(config=cfg.to_document(), rate=rate)
    return result


def check_worked_example() -> CheckResult:
    result = CheckResult("worked_example", instances=1)
    x = [0, 1, 1, 0, 1, 1]
    if sim.top_k_selection(x, 3) != [2, 3, 5]:
        result.fail(selection=sim.top_k_selection(x, 3))
    if sim.top_k_error_at(x, [0, 1, 1, 0, 0, 1], 3) != 1:
        result.fail(y=[0, 1, 1, 0, 0, 1], expected=1)
    if sim.top_k_error_at(x, [0, 1, 1, 0, 1, 0], 3) != 0:
        result.fail(y=[0, 1, 1, 0, 1, 0], expected=0)
    return result


QUICK_SCALE = {
    "dp_brute_force": {"instances": 20, "max_horizon": 5},
    "structural": {"instances": 50},
    "lp_agreement": {"instances": 10, "max_sources": 4},
    "sandwich": {"instances": 20},
    "concavity": {"instances": 10},
    "rate_contract": {"instances": 5},
}

FULL_SCALE = {
    "dp_brute_force": {"instances": 200, "max_horizon": 6},
    "structural": {"instances": 1000},
    "lp_agreement": {"instances": 100, "max_sources": 6},
    "sandwich": {"instances": 100},
    "concavity": {"instances": 50},
    "rate_contract": {"instances": 20},
}


def run_all(seed: int = 0, full: bool = False) -> Verdict:
    """``full`` runs every check at acceptance scale, which takes minutes."""
    scale = FULL_SCALE if full else QUICK_SCALE
    children = np.random.SeedSequence(seed).spawn(6)
    rngs = [np.random.default_rng(c) for c in children]
    verdict = Verdict(
        checks=[
            check_dp_brute_force(rngs[0], **scale["dp_brute_force"]),
            check_structural(rngs[1], **scale["structural"]),
            check_lp_agreement(rngs[2], **scale["lp_agreement"]),
            check_sandwich(rngs[3], **scale["sandwich"]),
            check_concavity(rngs[4], **scale["concavity"]),
            check_rate_contract(rngs[5], **scale["rate_contract"]),
            check_worked_example(),
        ]
    )
    for check in verdict.checks:
        if check.passed:
            log.info(f"check {check.name} passed", instances=check.instances)
        else:
            log.error(f"check {check.name} failed", witness=check.witness)
    return verdict
