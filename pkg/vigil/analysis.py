"""Exact evaluation of update policies without sampling.

Pair states are flattened as ``2*x + y``: index 0 is (0,0), 1 is (0,1), 2 is (1,0), 3 is (1,1).
"""
import typing
from dataclasses import dataclass

import numpy as np

from .exceptions import AnalysisError, OracleSizeError
from .model import AlphaTable, SourceParams, SystemConfig, alpha_table, steady_state_free_prob
from .policy import TabularPolicy
from .utils import documents
from .utils.logger import get_logger

log = get_logger("vigil.analysis")

TIE_TOLERANCE = 1e-12
FK_ORACLE_MAX_DEPTH = 4


@dataclass(frozen=True)
class PairChainSeries:
    dist: np.ndarray
    expected_update: np.ndarray

    @property
    def horizon(self) -> int:
        return self.dist.shape[0] - 1

    @property
    def beta(self) -> np.ndarray:
        return self.dist[:, 1] + self.dist[:, 2]


@dataclass(frozen=True)
class RhoResult:
    rho_per_m: np.ndarray
    rho: float
    m_star: int

    @property
    def lower(self) -> float:
        return self.rho / 4.0

    @property
    def upper(self) -> float:
        return self.rho

    @property
    def tail(self) -> typing.List[int]:
        """Sources whose errors are absorbed into the alpha term."""
        return list(range(self.m_star, len(self.rho_per_m) + 1))


@dataclass(frozen=True)
class ConcavityCoeffs:
    values: np.ndarray

    def __getitem__(self, i: int) -> float:
        if i < 2 or i > len(self.values) + 1:
            raise IndexError(f"c_{i} is not defined")
        return float(self.values[i - 2])


def pair_transition(p: SourceParams, decisions_t: np.ndarray) -> np.ndarray:
    """4x4 row-stochastic matrix of the pair over one slot under the 2x2 decisions."""
    kernel = p.kernel
    m = np.zeros((4, 4))
    for a in (0, 1):
        for b in (0, 1):
            y_next = a if decisions_t[a, b] else b
            for x_next in (0, 1):
                m[2 * a + b, 2 * x_next + y_next] += kernel[a, x_next]
    return m


def initial_pair_dist(p: SourceParams) -> np.ndarray:
    q = steady_state_free_prob(p)
    return np.array([1.0 - q, 0.0, 0.0, q])


def propagate_pair_chain(p: SourceParams, decisions: np.ndarray, horizon: int = None) -> PairChainSeries:
    decisions = np.asarray(decisions)
    horizon = decisions.shape[0] - 1 if horizon is None else horizon
    if decisions.shape[0] < horizon + 1:
        raise AnalysisError(f"Decision table covers {decisions.shape[0] - 1} slots, need {horizon}")
    dist = np.empty((horizon + 1, 4))
    expected_update = np.zeros(horizon + 1)
    dist[0] = initial_pair_dist(p)
    for t in range(1, horizon + 1):
        u = decisions[t].reshape(4)
        expected_update[t] = dist[t - 1] @ u
        dist[t] = dist[t - 1] @ pair_transition(p, decisions[t])
    return PairChainSeries(dist=dist, expected_update=expected_update)


def propagate_policy(cfg: SystemConfig, policy: TabularPolicy) -> typing.List[PairChainSeries]:
    return [
        propagate_pair_chain(p, policy.source_table(n), cfg.horizon)
        for n, p in enumerate(cfg.sources, start=1)
    ]


def beta_steady_state_one_sided(p: SourceParams) -> float:
    return p.nu / p.zeta


def one_sided_stationary(p: SourceParams) -> np.ndarray:
    """Stationary pair law when only the persistent mismatch pair is updated."""
    if p.lambda_ >= p.mu:
        return np.array([p.lambda_ / p.zeta, 0.0, p.mu / p.zeta, 0.0])
    return np.array([0.0, p.lambda_ / p.zeta, 0.0, p.mu / p.zeta])


def rho_of(alpha: AlphaTable, betas_t: np.ndarray, admit_union_bound: bool = False) -> RhoResult:
    """Min over m of alpha_m + sum_{n<m} alpha_n beta_n; m runs over 1..N, or 1..N+1
    when the pure union bound is admitted."""
    head = alpha.head
    weighted = head * np.asarray(betas_t, dtype=float)
    prefix = np.concatenate(([0.0], np.cumsum(weighted)))
    candidates = alpha.values + prefix
    if not admit_union_bound:
        candidates = candidates[:-1]
    best = candidates.min()
    m_star = int(np.flatnonzero(candidates <= best + TIE_TOLERANCE)[0]) + 1
    return RhoResult(rho_per_m=candidates, rho=float(candidates[m_star - 1]), m_star=m_star)


def betas_matrix(series: typing.Sequence[PairChainSeries]) -> np.ndarray:
    """N x (T+1) array of beta_n(t)."""
    return np.stack([s.beta for s in series])


def rho_at(
    cfg: SystemConfig,
    alpha: AlphaTable,
    betas: np.ndarray,
    t: int,
    admit_union_bound: bool = False,
) -> RhoResult:
    betas = np.asarray(betas)
    if betas.shape[0] != cfg.n_sources:
        raise AnalysisError(f"Expected betas for {cfg.n_sources} sources, got {betas.shape[0]}")
    return rho_of(alpha, betas[:, t], admit_union_bound)


def approx_objective(
    cfg: SystemConfig, alpha: AlphaTable, betas: np.ndarray, admit_union_bound: bool = False
) -> float:
    total = sum(
        rho_at(cfg, alpha, betas, t, admit_union_bound).rho for t in range(1, cfg.horizon + 1)
    )
    return total / cfg.horizon


def disjoint_event_lower_bound(alpha: AlphaTable, betas_t: np.ndarray) -> float:
    """sum_n beta_n (alpha_n - sum_{j<n} alpha_j beta_j)^+, a lower bound on the error
    probability built from the first-mismatch decomposition."""
    betas_t = np.asarray(betas_t, dtype=float)
    head = alpha.head
    prefix = np.concatenate(([0.0], np.cumsum(head * betas_t)[:-1]))
    return float(np.sum(betas_t * np.clip(head - prefix, 0.0, None)))


def concavity_coeffs(alphas: typing.Sequence[float], k: int = None) -> ConcavityCoeffs:
    alphas = np.asarray(alphas, dtype=float)
    k = len(alphas) if k is None else k
    if k < 2 or k > len(alphas):
        raise AnalysisError(f"Concavity coefficients need 2 <= k <= {len(alphas)}, got {k}")
    if (alphas[1:k] <= 0).any():
        raise AnalysisError("Concavity coefficients need positive alphas")
    c = [4.0 * alphas[1]]
    for i in range(3, k + 1):
        a = alphas[i - 1]
        c.append(4.0 * a * (1.0 - a / c[-1]))
        if c[-1] <= 0:
            raise AnalysisError(f"Concavity coefficient c_{i} = {c[-1]} is not positive")
    return ConcavityCoeffs(values=np.array(c))


def fk_closed_form(alphas: typing.Sequence[float], w: float) -> float:
    k = len(alphas)
    if not 0.0 <= w <= alphas[-1]:
        raise AnalysisError(f"w = {w} outside [0, alpha_{k}]")
    if k == 1:
        return 0.0
    return w * w / concavity_coeffs(alphas)[k]


def fk_numeric_max(alphas: typing.Sequence[float], w: float, grid_resolution: float = 1e-3) -> float:
    """Grid search of the pairwise-product program over the prefix masses
    ``S_i = sum_{j<=i} alpha_j beta_j``; each stage maximises
    ``S_{i-1} (S_i - S_{i-1}) / alpha_i`` plus the previous stage."""
    alphas = np.asarray(alphas, dtype=float)
    k = len(alphas)
    if k > FK_ORACLE_MAX_DEPTH:
        raise OracleSizeError(f"fk_numeric_max supports k <= {FK_ORACLE_MAX_DEPTH}, got {k}")
    if w < 0 or w > alphas.sum():
        raise AnalysisError(f"w = {w} is not attainable")
    if w == 0:
        return 0.0
    steps = max(1, int(np.ceil(w / grid_resolution)))
    grid = np.linspace(0.0, w, steps + 1)
    value = np.where(grid <= alphas[0] + TIE_TOLERANCE, 0.0, -np.inf)
    u = grid[:, None]
    v = grid[None, :]
    for a in alphas[1:]:
        feasible = (v <= u) & (v >= u - a - TIE_TOLERANCE) & (v <= a + TIE_TOLERANCE)
        gain = np.where(feasible, v * (u - v) / a + value[None, :], -np.inf)
        value = gain.max(axis=1)
    if not np.isfinite(value[-1]):
        raise AnalysisError(f"w = {w} is not attainable")
    return float(value[-1])


def policy_rate(series: typing.Sequence[PairChainSeries], horizon: int) -> float:
    return float(sum(s.expected_update[1 : horizon + 1].sum() for s in series)) / horizon


@dataclass
class AnalysisTable:
    cfg: SystemConfig
    alpha: AlphaTable
    series: typing.List[PairChainSeries]
    rho: typing.List[RhoResult]
    rho_union: typing.List[RhoResult]

    @property
    def betas(self) -> np.ndarray:
        return betas_matrix(self.series)

    @property
    def objective(self) -> float:
        return float(np.mean([r.rho for r in self.rho]))

    @property
    def rate(self) -> float:
        return policy_rate(self.series, self.cfg.horizon)

    def header(self) -> typing.List[str]:
        n = self.cfg.n_sources
        return (
            ["t"]
            + [f"beta_{i}" for i in range(1, n + 1)]
            + [f"expected_update_{i}" for i in range(1, n + 1)]
            + ["rho", "m_star", "lower", "upper", "rho_union", "disjoint_lower"]
        )

    def rows(self) -> typing.Iterator[list]:
        betas = self.betas
        updates = np.stack([s.expected_update for s in self.series])
        for t in range(1, self.cfg.horizon + 1):
            r = self.rho[t - 1]
            yield (
                [t]
                + list(betas[:, t])
                + list(updates[:, t])
                + [
                    r.rho,
                    r.m_star,
                    r.lower,
                    r.upper,
                    self.rho_union[t - 1].rho,
                    disjoint_event_lower_bound(self.alpha, betas[:, t]),
                ]
            )

    def write_csv(self, path: str) -> str:
        return documents.write_csv(path, self.header(), self.rows())

    def summary(self) -> dict:
        return {"objective": self.objective, "update_rate": self.rate}


def analyze(cfg: SystemConfig, policy: TabularPolicy) -> AnalysisTable:
    alpha = alpha_table(cfg)
    series = propagate_policy(cfg, policy)
    betas = betas_matrix(series)
    rho = [rho_at(cfg, alpha, betas, t) for t in range(1, cfg.horizon + 1)]
    rho_union = [rho_at(cfg, alpha, betas, t, True) for t in range(1, cfg.horizon + 1)]
    table = AnalysisTable(cfg=cfg, alpha=alpha, series=series, rho=rho, rho_union=rho_union)
    log.debug("policy analysed", objective=table.objective, update_rate=table.rate)
    return table
