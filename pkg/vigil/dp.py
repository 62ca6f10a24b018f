"""Per-source finite-horizon Lagrangian dynamic program.

The cost of one source is ``sum_t alpha*(t) beta(t) + gamma E[U(t)]``. ``tau[t, ab]`` is
the cost-to-go from slot t when the pair at t is ``ab`` (flattened as ``2a + b``).
Decisions are indexed like policy tables: ``decisions[t, a, b]`` acts on the pair seen at t-1.
"""
import typing
from dataclasses import dataclass, field

import numpy as np

from .analysis import initial_pair_dist, pair_transition, propagate_pair_chain
from .exceptions import DpError
from .model import SourceParams
from .utils.logger import get_logger

log = get_logger("vigil.dp")

BRUTE_FORCE_MAX_HORIZON = 8
BOUND_TOLERANCE = 1e-9
VALUE_TOLERANCE = 1e-9
CALIBRATION_ITERATIONS = 60

S00, S01, S10, S11 = range(4)


@dataclass(frozen=True)
class TailProfile:
    """``values[t]`` is alpha*(t) for t in 1..T, either alpha or 0; ``values[0]`` is unused."""

    alpha: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all((v[1:] == 0.0) | (v[1:] == self.alpha)):
            raise DpError("Tail profile values must be 0 or alpha")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, alpha: float, horizon: int) -> "TailProfile":
        return cls.monotone(alpha, horizon, horizon)

    @classmethod
    def monotone(cls, alpha: float, horizon: int, cutoff: int) -> "TailProfile":
        """alpha on slots 1..cutoff, 0 afterwards."""
        values = np.zeros(horizon + 1)
        values[1 : cutoff + 1] = alpha
        return cls(alpha=alpha, values=values)

    @classmethod
    def from_mask(cls, alpha: float, mask: typing.Sequence[bool]) -> "TailProfile":
        return cls(alpha=alpha, values=np.concatenate(([0.0], alpha * np.asarray(mask, dtype=float))))

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    @property
    def is_monotone(self) -> bool:
        active = self.values[1:] > 0
        return not np.any(active[1:] & ~active[:-1])

    def __getitem__(self, t: int) -> float:
        return float(self.values[t])


@dataclass(frozen=True)
class DpTables:
    tau: np.ndarray
    gamma: float

    @property
    def delta01(self) -> np.ndarray:
        return self.tau[:, S01] - self.tau[:, S00]

    @property
    def delta10(self) -> np.ndarray:
        return self.tau[:, S10] - self.tau[:, S11]

    @property
    def delta(self) -> np.ndarray:
        return self.delta01 + self.delta10


@dataclass(frozen=True)
class DpSolution:
    tables: DpTables
    decisions: np.ndarray
    value: float
    omega_series: np.ndarray
    upsilon_series: np.ndarray

    def __iter__(self):
        return iter((self.tables, self.decisions, self.value))


def solve_single_source_dp(p: SourceParams, alpha: float, gamma: float, tail: TailProfile) -> DpSolution:
    if gamma < 0:
        raise DpError(f"gamma must be >= 0, got {gamma}")
    horizon = tail.horizon
    mu, lam = p.mu, p.lambda_
    a_star = tail.values
    tau = np.zeros((horizon + 1, 4))
    omega = np.zeros(horizon + 1)
    upsilon = np.zeros(horizon + 1)
    tau[horizon] = (0.0, a_star[horizon], a_star[horizon], 0.0)
    for t in range(horizon, 0, -1):
        d01 = tau[t, S01] - tau[t, S00]
        d10 = tau[t, S10] - tau[t, S11]
        omega[t] = d01 - mu * (d01 + d10)
        upsilon[t] = d10 - lam * (d01 + d10)
        if t == 1:
            break
        stay_busy = (1.0 - mu) * tau[t, S00] + mu * tau[t, S10]
        stay_free = (1.0 - lam) * tau[t, S11] + lam * tau[t, S01]
        tau[t - 1] = (
            stay_busy,
            a_star[t - 1] + stay_busy + min(gamma, omega[t]),
            a_star[t - 1] + stay_free + min(gamma, upsilon[t]),
            stay_free,
        )
    decisions = np.zeros((horizon + 1, 2, 2), dtype=np.int8)
    decisions[1:, 0, 1] = gamma < omega[1:]
    decisions[1:, 1, 0] = gamma < upsilon[1:]
    first = initial_pair_dist(p) @ pair_transition(p, np.zeros((2, 2)))
    value = float(tau[1] @ first)
    return DpSolution(
        tables=DpTables(tau=tau, gamma=gamma),
        decisions=decisions,
        value=value,
        omega_series=omega,
        upsilon_series=upsilon,
    )


def policy_cost(p: SourceParams, gamma: float, tail: TailProfile, decisions: np.ndarray) -> float:
    series = propagate_pair_chain(p, decisions, tail.horizon)
    t = slice(1, tail.horizon + 1)
    return float(tail.values[t] @ series.beta[t] + gamma * series.expected_update[t].sum())


def policy_update_rate(p: SourceParams, decisions: np.ndarray, horizon: int) -> float:
    series = propagate_pair_chain(p, decisions, horizon)
    return float(series.expected_update[1:].sum()) / horizon


@dataclass
class Violation:
    prop: str
    t: int
    state: typing.Optional[str]
    detail: str

    def to_document(self) -> dict:
        return {"property": self.prop, "t": self.t, "state": self.state, "detail": self.detail}


@dataclass
class StructuralReport:
    checked: typing.List[str] = field(default_factory=list)
    violations: typing.List[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def first_violation(self) -> typing.Optional[Violation]:
        return self.violations[0] if self.violations else None

    def to_document(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "violations": [v.to_document() for v in self.violations],
        }


def check_structural_properties(
    p: SourceParams,
    alpha: float,
    gamma: float,
    tail: TailProfile,
    solution: DpSolution,
    decisions: np.ndarray = None,
) -> StructuralReport:
    """Checks ``decisions`` (the solution's own table by default) against the
    structure an optimal per-source policy must have."""
    decisions = solution.decisions if decisions is None else np.asarray(decisions)
    horizon = tail.horizon
    tables = solution.tables
    report = StructuralReport()
    u01 = decisions[:, 0, 1]
    u10 = decisions[:, 1, 0]

    report.checked.append("dominance")
    dominant, other, names = (u01, u10, ("01", "10")) if p.lambda_ >= p.mu else (u10, u01, ("10", "01"))
    for t in range(1, horizon + 1):
        if other[t] > dominant[t]:
            report.violations.append(
                Violation("dominance", t, names[1], f"updates in {names[1]} but not in {names[0]}")
            )

    report.checked.append("gap_bound")
    bound = 2.0 * alpha / p.zeta + BOUND_TOLERANCE
    for t in range(1, horizon + 1):
        if tables.delta[t] > bound:
            report.violations.append(
                Violation("gap_bound", t, None, f"delta {tables.delta[t]} exceeds {bound}")
            )

    report.checked.append("terminal_gap")
    expected = (1.0 - 2.0 * p.mu) * tail[horizon]
    if abs(solution.omega_series[horizon] - expected) > 1e-12:
        report.violations.append(
            Violation("terminal_gap", horizon, "01", f"omega(T) {solution.omega_series[horizon]} != {expected}")
        )

    report.checked.append("threshold_rule")
    for t in range(1, horizon + 1):
        for state, u, gap in (("01", u01, solution.omega_series), ("10", u10, solution.upsilon_series)):
            if bool(u[t]) != bool(gamma < gap[t]):
                report.violations.append(
                    Violation("threshold_rule", t, state, f"decision {u[t]} but gap {gap[t]} vs gamma {gamma}")
                )

    report.checked.append("optimality")
    cost = policy_cost(p, gamma, tail, decisions)
    if cost > solution.value + VALUE_TOLERANCE:
        report.violations.append(
            Violation("optimality", 0, None, f"policy cost {cost} above optimum {solution.value}")
        )

    if tail.is_monotone:
        active = tail.values > 0
        report.checked.append("persistence")
        for t in range(1, horizon):
            if not active[t + 1]:
                continue
            for state, u in (("01", u01), ("10", u10)):
                if u[t + 1] and not u[t]:
                    report.violations.append(
                        Violation("persistence", t, state, f"updates at {t + 1} but not at {t}")
                    )
        report.checked.append("tail_silence")
        for t in range(1, horizon + 1):
            if not active[t] and (u01[t] or u10[t]):
                report.violations.append(Violation("tail_silence", t, None, "updates inside the tail"))
        report.checked.append("prefix_threshold")
        both = (u01[1:] & u10[1:]).astype(bool)
        if np.any(both[1:] & ~both[:-1]):
            t = int(np.flatnonzero(both[1:] & ~both[:-1])[0]) + 2
            report.violations.append(
                Violation("prefix_threshold", t, None, "two-sided updates do not form a prefix")
            )

    if not report.passed:
        v = report.first_violation
        log.warning("structural property violated", property=v.prop, t=v.t, state=v.state)
    return report


def calibrate_gamma(p: SourceParams, alpha: float, tail: TailProfile, target_rate: float) -> float:
    """Bisection on gamma over [0, alpha*T]. The update rate of the optimal policy is a
    non-increasing step function of gamma, so the returned gamma gives the largest
    rate not above ``target_rate``, which may fall short of it."""
    horizon = tail.horizon
    if target_rate < 0:
        raise DpError(f"target rate must be >= 0, got {target_rate}")
    if target_rate > p.change_rate + 1e-12:
        raise DpError(
            f"target rate {target_rate} exceeds the always-update rate {p.change_rate}"
        )

    def rate(gamma):
        return policy_update_rate(p, solve_single_source_dp(p, alpha, gamma, tail).decisions, horizon)

    lo, hi = 0.0, alpha * horizon
    if rate(lo) <= target_rate:
        return lo
    for _ in range(CALIBRATION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if rate(mid) <= target_rate:
            hi = mid
        else:
            lo = mid
    log.debug("gamma calibrated", gamma=hi, target_rate=target_rate, rate=rate(hi))
    return hi


def _step_all(dist: np.ndarray, u01: np.ndarray, u10: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """One slot for a batch of pair laws; ``u01``/``u10`` are 0/1 vectors over the batch."""
    d00, d01, d10, d11 = dist.T
    # mass grouped by (X(t-1), Y(t))
    from_x0_y0 = d00 + d01 * u01
    from_x0_y1 = d01 * (1 - u01)
    from_x1_y0 = d10 * (1 - u10)
    from_x1_y1 = d11 + d10 * u10
    new = np.empty_like(dist)
    new[:, S00] = (1 - mu) * from_x0_y0 + lam * from_x1_y0
    new[:, S01] = (1 - mu) * from_x0_y1 + lam * from_x1_y1
    new[:, S10] = mu * from_x0_y0 + (1 - lam) * from_x1_y0
    new[:, S11] = mu * from_x0_y1 + (1 - lam) * from_x1_y1
    return new


def brute_force_single_source(
    p: SourceParams, alpha: float, gamma: float, tail: TailProfile
) -> typing.Tuple[np.ndarray, float]:
    """Exhaustive search over the mismatch decisions of slots 2..T; slot 1 always
    sees a matched pair, so its decisions cannot matter."""
    horizon = tail.horizon
    if horizon > BRUTE_FORCE_MAX_HORIZON:
        raise DpError(f"brute force supports T <= {BRUTE_FORCE_MAX_HORIZON}, got {horizon}")
    bits = 2 * (horizon - 1)
    codes = np.arange(1 << bits, dtype=np.int64)
    dist = np.tile(initial_pair_dist(p), (len(codes), 1))
    dist = _step_all(dist, np.zeros(len(codes)), np.zeros(len(codes)), p.mu, p.lambda_)
    cost = tail[1] * (dist[:, S01] + dist[:, S10])
    for t in range(2, horizon + 1):
        shift = 2 * (t - 2)
        u01 = (codes >> shift) & 1
        u10 = (codes >> (shift + 1)) & 1
        cost = cost + gamma * (dist[:, S01] * u01 + dist[:, S10] * u10)
        dist = _step_all(dist, u01, u10, p.mu, p.lambda_)
        cost = cost + tail[t] * (dist[:, S01] + dist[:, S10])
    best = int(np.argmin(cost))
    decisions = np.zeros((horizon + 1, 2, 2), dtype=np.int8)
    for t in range(2, horizon + 1):
        shift = 2 * (t - 2)
        decisions[t, 0, 1] = (best >> shift) & 1
        decisions[t, 1, 0] = (best >> (shift + 1)) & 1
    return decisions, float(cost[best])
