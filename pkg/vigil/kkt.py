"""Closed-form switch times T_n under a global rate budget.

The relaxed allocation problem has, per source n, a budget ``s_n`` of slots updated on
both mismatch pairs and ``z_n`` slots updated one-sidedly, with ``s_n + z_n`` non-increasing
in n and ``sum_n rho_n s_n = T r`` where ``rho_n = 2 mu_n lambda_n / zeta_n``. A multiplier
``theta`` on the rate constraint splits the sources into those worth updating on both
sides for the whole horizon (A), those that may take a fraction T' of it (B minus A),
and the rest.
"""
import itertools
import math
import typing
from dataclasses import dataclass

import numpy as np

from .exceptions import KktError, OracleSizeError
from .model import AlphaTable, SystemConfig
from .policy import ThreeStageSpec
from .utils.logger import get_logger

log = get_logger("vigil.kkt")

TIE_TOLERANCE = 1e-12
RATE_TOLERANCE = 1e-12
LP_ORACLE_MAX_SOURCES = 6
LP_ORACLE_BATCH = 8192


@dataclass(frozen=True)
class KktSolution:
    theta: float
    set_A: typing.Tuple[int, ...]
    set_B: typing.Tuple[int, ...]
    n_tilde: typing.Tuple[int, ...]
    tau_of_m: np.ndarray
    t_prime: float
    switch_times: typing.Tuple[int, ...]
    breakpoints: np.ndarray
    rate_A: float
    rate_B: float
    degenerate: bool = False

    def to_document(self) -> dict:
        return {
            "theta": self.theta,
            "set_A": list(self.set_A),
            "set_B": list(self.set_B),
            "n_tilde": list(self.n_tilde),
            "tau_of_m": self.tau_of_m,
            "t_prime": self.t_prime,
            "switch_times": list(self.switch_times),
            "breakpoints": self.breakpoints,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class LpPoint:
    s: np.ndarray
    z: np.ndarray
    objective: float


def _stationary_mismatch(cfg: SystemConfig) -> np.ndarray:
    return np.array([p.nu / p.zeta for p in cfg.sources])


def _omegas(cfg: SystemConfig) -> np.ndarray:
    return np.array([p.omega for p in cfg.sources])


def epsilon_n(cfg: SystemConfig, alpha: AlphaTable, n: int, s: np.ndarray, z: np.ndarray) -> float:
    """Approximate error mass of source ``n``: its two-sided and one-sided slots plus
    the tail slots it hands over to the sources after it."""
    p = cfg.source(n)
    i = n - 1
    previous = cfg.horizon if n == 1 else s[i - 1] + z[i - 1]
    a = alpha[n]
    return a * (p.nu / p.zeta) * (2.0 * p.omega * s[i] + z[i]) + a * (previous - s[i] - z[i])


def lp_objective(cfg: SystemConfig, alpha: AlphaTable, s: np.ndarray, z: np.ndarray) -> float:
    return float(sum(epsilon_n(cfg, alpha, n, s, z) for n in range(1, cfg.n_sources + 1)))


def check_lp_feasibility(
    cfg: SystemConfig, s: np.ndarray, z: np.ndarray, tolerance: float = 1e-9
) -> typing.List[str]:
    """Violated constraints of the allocation problem, empty when ``(s, z)`` is feasible."""
    violations = []
    s, z = np.asarray(s, dtype=float), np.asarray(z, dtype=float)
    horizon = cfg.horizon
    for n in range(1, cfg.n_sources + 1):
        i = n - 1
        if s[i] < -tolerance:
            violations.append(f"s_{n} = {s[i]} < 0")
        if z[i] < -tolerance:
            violations.append(f"z_{n} = {z[i]} < 0")
        previous = horizon if n == 1 else s[i - 1] + z[i - 1]
        if s[i] + z[i] > previous + tolerance:
            violations.append(f"s_{n} + z_{n} = {s[i] + z[i]} exceeds {previous}")
    spent = float(cfg.change_rates @ s)
    budget = horizon * cfg.rate_budget
    if abs(spent - budget) > tolerance * max(1.0, budget):
        violations.append(f"rate constraint: spent {spent}, budget {budget}")
    return violations


def compute_breakpoints(cfg: SystemConfig, alpha: AlphaTable) -> np.ndarray:
    return alpha.head * (1.0 / (2.0 * _omegas(cfg)) - 1.0)


def tau_values(cfg: SystemConfig, alpha: AlphaTable, theta: float) -> np.ndarray:
    """tau(theta, m) for m in 1..N+1; the last entry is 0."""
    head = alpha.head
    weights = _stationary_mismatch(cfg) * np.minimum(head, (head + theta) * 2.0 * _omegas(cfg))
    suffix = np.concatenate((np.cumsum(weights[::-1])[::-1], [0.0]))
    return alpha.values - suffix


def n_tilde(cfg: SystemConfig, alpha: AlphaTable, theta: float) -> typing.Tuple[int, ...]:
    """All m in 1..N+1 minimising tau(theta, m), up to a relative tolerance."""
    tau = tau_values(cfg, alpha, theta)
    tol = TIE_TOLERANCE * max(1.0, float(np.abs(tau).max()))
    return tuple(int(m) + 1 for m in np.flatnonzero(tau <= tau.min() + tol))


def _sets(cfg: SystemConfig, alpha: AlphaTable, theta: float, breakpoints: np.ndarray):
    tie = n_tilde(cfg, alpha, theta)
    indices = np.arange(1, cfg.n_sources + 1)
    set_a = tuple(int(n) for n in indices[(theta < breakpoints) & (indices < min(tie))])
    set_b = tuple(int(n) for n in indices[(theta <= breakpoints) & (indices < max(tie))])
    return tie, set_a, set_b


def _rate_of(cfg: SystemConfig, members: typing.Iterable[int]) -> float:
    rates = cfg.change_rates
    return float(sum(rates[n - 1] for n in members))


def theta_candidates(cfg: SystemConfig, alpha: AlphaTable) -> np.ndarray:
    """Every theta at which A(theta) or B(theta) can change: the breakpoints and the
    crossings of the tau(., m) lines, which are linear between consecutive breakpoints."""
    breakpoints = compute_breakpoints(cfg, alpha)
    head = alpha.head
    q = _stationary_mismatch(cfg)
    two_omega = 2.0 * _omegas(cfg)
    edges = np.unique(breakpoints)
    bounds = np.concatenate(([-np.inf], edges, [np.inf]))
    candidates = list(edges)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if not np.isfinite(hi):
            continue
        linear = breakpoints > lo
        slope_terms = np.where(linear, -q * two_omega, 0.0)
        intercept_terms = -q * np.where(linear, head * two_omega, head)
        slopes = np.concatenate((np.cumsum(slope_terms[::-1])[::-1], [0.0]))
        intercepts = alpha.values + np.concatenate((np.cumsum(intercept_terms[::-1])[::-1], [0.0]))
        for j, k in itertools.combinations(range(len(slopes)), 2):
            if abs(slopes[j] - slopes[k]) <= TIE_TOLERANCE:
                continue
            crossing = (intercepts[k] - intercepts[j]) / (slopes[j] - slopes[k])
            if lo <= crossing <= hi:
                candidates.append(crossing)
    return np.unique(np.array(candidates))


def solve_theta(cfg: SystemConfig, alpha: AlphaTable, r: float) -> float:
    """Largest theta with rate(A(theta)) <= r <= rate(B(theta))."""
    full = cfg.full_rate
    tol = RATE_TOLERANCE * max(1.0, full)
    if r < 0:
        raise KktError(f"Rate budget must be >= 0, got {r}")
    if r > full + tol:
        raise KktError(f"Rate budget {r} exceeds the full update rate {full}")
    breakpoints = compute_breakpoints(cfg, alpha)
    if r <= tol:
        return float(breakpoints.max() + 1.0)
    for theta in theta_candidates(cfg, alpha)[::-1]:
        _, set_a, set_b = _sets(cfg, alpha, theta, breakpoints)
        if _rate_of(cfg, set_b) >= r - tol:
            if _rate_of(cfg, set_a) > r + tol:
                raise KktError(f"No feasible theta at rate {r}: rate(A) exceeds it at {theta}")
            return float(theta)
    raise KktError(f"No feasible theta at rate {r}")


def compute_Tn(cfg: SystemConfig, alpha: AlphaTable, r: float = None) -> KktSolution:
    r = cfg.rate_budget if r is None else r
    horizon = cfg.horizon
    breakpoints = compute_breakpoints(cfg, alpha)
    full = cfg.full_rate
    tol = RATE_TOLERANCE * max(1.0, full)
    if r >= full - tol:
        theta = float(theta_candidates(cfg, alpha).min() - 1.0)
        tie = n_tilde(cfg, alpha, theta)
        everyone = tuple(range(1, cfg.n_sources + 1))
        solution = KktSolution(
            theta=theta,
            set_A=everyone,
            set_B=everyone,
            n_tilde=tie,
            tau_of_m=tau_values(cfg, alpha, theta),
            t_prime=float(horizon),
            switch_times=tuple([horizon] * cfg.n_sources),
            breakpoints=breakpoints,
            rate_A=full,
            rate_B=full,
            degenerate=True,
        )
        log.info("rate budget covers every change", rate_budget=r, full_rate=full)
        return solution

    theta = solve_theta(cfg, alpha, r)
    tie, set_a, set_b = _sets(cfg, alpha, theta, breakpoints)
    rate_a, rate_b = _rate_of(cfg, set_a), _rate_of(cfg, set_b)
    if rate_b - rate_a <= tol:
        if abs(r - rate_a) > tol:
            raise KktError(
                f"B minus A is empty but {r - rate_a} of the rate budget is unspent at theta {theta}"
            )
        t_prime = 0.0
    else:
        t_prime = horizon * (r - rate_a) / (rate_b - rate_a)
    t_prime = min(max(t_prime, 0.0), float(horizon))
    floor_t = int(math.floor(t_prime + 1e-9))
    switch_times = tuple(
        horizon if n in set_a else floor_t if n in set_b else 0
        for n in range(1, cfg.n_sources + 1)
    )
    log.info(
        "switch times computed",
        theta=theta,
        set_a=list(set_a),
        set_b=list(set_b),
        t_prime=t_prime,
        switch_times=list(switch_times),
    )
    return KktSolution(
        theta=theta,
        set_A=set_a,
        set_B=set_b,
        n_tilde=tie,
        tau_of_m=tau_values(cfg, alpha, theta),
        t_prime=t_prime,
        switch_times=switch_times,
        breakpoints=breakpoints,
        rate_A=rate_a,
        rate_B=rate_b,
    )


def embed_solution(cfg: SystemConfig, alpha: AlphaTable, solution: KktSolution) -> LpPoint:
    """Allocation point of a solution with the continuous T': full horizon before
    min N~, T' on the indifferent layer up to max N~, nothing after."""
    horizon = float(cfg.horizon)
    n = cfg.n_sources
    if solution.degenerate:
        s, z = np.full(n, horizon), np.zeros(n)
        return LpPoint(s=s, z=z, objective=lp_objective(cfg, alpha, s, z))
    m_a, m_b = min(solution.n_tilde), max(solution.n_tilde)
    index = np.arange(1, n + 1)
    total = np.where(index < m_a, horizon, np.where(index < m_b, solution.t_prime, 0.0))
    s = np.zeros(n)
    for i in solution.set_B:
        s[i - 1] = solution.t_prime
    for i in solution.set_A:
        s[i - 1] = horizon
    z = total - s
    return LpPoint(s=s, z=z, objective=lp_objective(cfg, alpha, s, z))


def three_stage_spec(cfg: SystemConfig, solution: KktSolution) -> ThreeStageSpec:
    return ThreeStageSpec.for_config(cfg, solution.switch_times)


def _lp_matrices(cfg: SystemConfig, alpha: AlphaTable):
    """Inequalities ``G x <= h`` and the rate row for ``x = (s_1..s_N, z_1..z_N)``."""
    n = cfg.n_sources
    g = np.zeros((3 * n, 2 * n))
    h = np.zeros(3 * n)
    for i in range(n):
        g[i, i] = -1.0
        g[n + i, n + i] = -1.0
        row = 2 * n + i
        g[row, i] = g[row, n + i] = 1.0
        if i == 0:
            h[row] = cfg.horizon
        else:
            g[row, i - 1] = g[row, n + i - 1] = -1.0
    rate_row = np.concatenate((cfg.change_rates, np.zeros(n)))
    # objective = alpha_1 T + c @ x
    head = alpha.head
    drop = head - alpha.values[1:]
    q = _stationary_mismatch(cfg)
    c = np.concatenate((head * cfg.change_rates - drop, head * q - drop))
    return g, h, rate_row, c


def lp_oracle(cfg: SystemConfig, alpha: AlphaTable, r: float = None) -> LpPoint:
    """Exact minimiser of the allocation problem by enumerating the vertices of its
    polytope: every choice of 2N-1 tight inequalities plus the rate equality."""
    r = cfg.rate_budget if r is None else r
    n = cfg.n_sources
    if n > LP_ORACLE_MAX_SOURCES:
        raise OracleSizeError(f"lp_oracle supports N <= {LP_ORACLE_MAX_SOURCES}, got {n}")
    g, h, rate_row, c = _lp_matrices(cfg, alpha)
    budget = cfg.horizon * r
    feasibility_tol = 1e-9 * max(1.0, float(cfg.horizon))
    combos = np.array(list(itertools.combinations(range(3 * n), 2 * n - 1)))
    best_x, best_value = None, np.inf
    for start in range(0, len(combos), LP_ORACLE_BATCH):
        batch = combos[start : start + LP_ORACLE_BATCH]
        systems = np.concatenate(
            (g[batch], np.broadcast_to(rate_row, (len(batch), 1, 2 * n))), axis=1
        )
        rhs = np.concatenate((h[batch], np.full((len(batch), 1), budget)), axis=1)
        regular = np.abs(np.linalg.det(systems)) > 1e-12
        if not regular.any():
            continue
        x = np.linalg.solve(systems[regular], rhs[regular][..., None])[..., 0]
        feasible = np.all(x @ g.T <= h + feasibility_tol, axis=1)
        if not feasible.any():
            continue
        values = x[feasible] @ c
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_value, best_x = values[k], x[feasible][k]
    if best_x is None:
        raise KktError(f"Allocation problem is infeasible at rate {r}")
    s, z = np.clip(best_x[:n], 0.0, None), np.clip(best_x[n:], 0.0, None)
    return LpPoint(s=s, z=z, objective=lp_objective(cfg, alpha, s, z))
