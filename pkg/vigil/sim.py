"""Monte Carlo and exact evaluation of the operational error probability and update rate."""
import functools
import math
import typing
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .analysis import initial_pair_dist, pair_transition
from .exceptions import OracleSizeError
from .model import SystemConfig, draw_initial, step_availability
from .policy import TabularPolicy
from .utils.helper import parse_seed, run_chunks
from .utils.logger import get_logger

log = get_logger("vigil.sim")

CHUNK_SIZE = 4096
EXACT_MAX_SOURCES = 4
EXACT_MAX_HORIZON = 12


@dataclass
class EpisodeResult:
    per_t_error: np.ndarray
    update_count: int
    seed: typing.Any = None


@dataclass
class Estimate:
    mean: float
    se: float

    def interval(self, level: float = 0.95) -> typing.Tuple[float, float]:
        half = norm.ppf(0.5 + level / 2.0) * self.se
        return self.mean - half, self.mean + half


@dataclass
class McEstimate:
    error_prob: Estimate
    update_rate: Estimate
    per_t_error_freq: np.ndarray
    trials: int
    pair_freq: np.ndarray = None
    update_freq: np.ndarray = None

    def summary(self) -> dict:
        return {
            "error_prob": self.error_prob.mean,
            "error_prob_se": self.error_prob.se,
            "update_rate": self.update_rate.mean,
            "update_rate_se": self.update_rate.se,
            "trials": self.trials,
        }


@dataclass
class ExactEvaluation:
    error_per_t: np.ndarray
    event_probs: np.ndarray
    expected_updates: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.error_per_t) - 1

    @property
    def error_prob(self) -> float:
        return float(self.error_per_t[1:].mean())

    @property
    def update_rate(self) -> float:
        return float(self.expected_updates[1:].sum()) / self.horizon


def _prefix_mask(x: np.ndarray, k: int) -> np.ndarray:
    """Positions 1..V(t): those preceded by fewer than K free sources."""
    return (np.cumsum(x, axis=-1) - x) < k


def top_k_errors(x: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Batched error indicator over the last axis."""
    return np.any((x != y) & _prefix_mask(x, k), axis=-1)


def top_k_error_at(x_vec, y_vec, k: int) -> int:
    return int(top_k_errors(np.asarray(x_vec), np.asarray(y_vec), k))


def top_k_selection(x_vec, k: int) -> typing.List[int]:
    """1-based indices of the first K free sources."""
    return [int(i) + 1 for i in np.flatnonzero(np.asarray(x_vec) == 1)[:k]]


def _simulate_chunk(cfg: SystemConfig, decisions: np.ndarray, job: tuple) -> dict:
    seed_seq, size = job
    rng = np.random.default_rng(seed_seq)
    n, horizon, k = cfg.n_sources, cfg.horizon, cfg.k_select
    mus, lambdas = cfg.mus, cfg.lambdas
    sources = np.arange(n)[None, :]
    x = draw_initial(cfg, rng, size)
    y = x.copy()
    errors = np.zeros((size, horizon + 1), dtype=np.int8)
    updates = np.zeros(size, dtype=np.int64)
    pair_count = np.zeros((n, horizon + 1, 4))
    update_count = np.zeros((n, horizon + 1))
    pair_count[:, 0] = np.stack([np.bincount(2 * x[:, i] + y[:, i], minlength=4) for i in range(n)])
    for t in range(1, horizon + 1):
        u = decisions[sources, t, x, y]
        y = np.where(u == 1, x, y)
        x = step_availability(x, mus, lambdas, rng)
        errors[:, t] = top_k_errors(x, y, k)
        updates += u.sum(axis=1)
        update_count[:, t] = u.sum(axis=0)
        pair = 2 * x + y
        pair_count[:, t] = np.stack([np.bincount(pair[:, i], minlength=4) for i in range(n)])
    return {
        "errors": errors,
        "updates": updates,
        "pair_count": pair_count,
        "update_count": update_count,
    }


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(parse_seed(seed))


def run_episode(cfg: SystemConfig, policy: TabularPolicy, seed=None) -> EpisodeResult:
    """One episode on the stream a one-trial ``monte_carlo`` run with the same seed uses."""
    seed_seq = _as_seed_sequence(seed).spawn(1)[0]
    chunk = _simulate_chunk(cfg, policy.decisions, (seed_seq, 1))
    return EpisodeResult(
        per_t_error=chunk["errors"][0, 1:],
        update_count=int(chunk["updates"][0]),
        seed=seed_seq,
    )


def _estimate(samples: np.ndarray) -> Estimate:
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else 0.0
    return Estimate(mean=mean, se=se)


def monte_carlo(
    cfg: SystemConfig,
    policy: TabularPolicy,
    trials: int = None,
    seed=None,
    workers: int = None,
    chunk_size: int = CHUNK_SIZE,
) -> McEstimate:
    """Episodes are generated in fixed-size chunks, one ``SeedSequence`` child per chunk,
    so the estimate does not depend on ``workers``."""
    trials = cfg.trials if trials is None else trials
    workers = cfg.workers if workers is None else workers
    seed = cfg.seed if seed is None else seed
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    sizes = [min(chunk_size, trials - start) for start in range(0, trials, chunk_size)]
    children = _as_seed_sequence(seed).spawn(len(sizes))
    chunks = run_chunks(
        functools.partial(_simulate_chunk, cfg, policy.decisions),
        list(zip(children, sizes)),
        workers,
    )
    errors = np.concatenate([c["errors"] for c in chunks])[:, 1:]
    updates = np.concatenate([c["updates"] for c in chunks])
    horizon = cfg.horizon
    estimate = McEstimate(
        error_prob=_estimate(errors.mean(axis=1)),
        update_rate=_estimate(updates / horizon),
        per_t_error_freq=errors.mean(axis=0),
        trials=trials,
        pair_freq=sum(c["pair_count"] for c in chunks) / trials,
        update_freq=sum(c["update_count"] for c in chunks) / trials,
    )
    log.info(
        "monte carlo finished",
        trials=trials,
        error_prob=estimate.error_prob.mean,
        update_rate=estimate.update_rate.mean,
    )
    return estimate


def _joint_states(n: int) -> typing.Tuple[np.ndarray, np.ndarray]:
    """x and y vectors of every joint pair state, source 1 most significant."""
    codes = np.arange(4 ** n)
    pairs = np.stack([(codes // 4 ** (n - 1 - i)) % 4 for i in range(n)], axis=1)
    return pairs // 2, pairs % 2


def exact_joint_evaluation(cfg: SystemConfig, policy: TabularPolicy) -> ExactEvaluation:
    n, horizon, k = cfg.n_sources, cfg.horizon, cfg.k_select
    if n > EXACT_MAX_SOURCES or horizon > EXACT_MAX_HORIZON:
        raise OracleSizeError(
            f"exact evaluation supports N <= {EXACT_MAX_SOURCES} and T <= {EXACT_MAX_HORIZON}, "
            f"got N={n}, T={horizon}"
        )
    x, y = _joint_states(n)
    mismatch = x != y
    in_prefix = _prefix_mask(x, k)
    first_mismatch = mismatch & (np.cumsum(mismatch, axis=1) == 1)
    events = (first_mismatch & in_prefix).astype(float)

    dist = functools.reduce(np.kron, [initial_pair_dist(p) for p in cfg.sources])
    error_per_t = np.zeros(horizon + 1)
    event_probs = np.zeros((n, horizon + 1))
    expected_updates = np.zeros(horizon + 1)
    event_probs[:, 0] = dist @ events
    error_per_t[0] = event_probs[:, 0].sum()
    for t in range(1, horizon + 1):
        tables = [policy.source_table(i + 1)[t] for i in range(n)]
        u = sum(tables[i][x[:, i], y[:, i]] for i in range(n))
        expected_updates[t] = dist @ u
        transition = functools.reduce(
            np.kron, [pair_transition(p, tables[i]) for i, p in enumerate(cfg.sources)]
        )
        dist = dist @ transition
        event_probs[:, t] = dist @ events
        error_per_t[t] = event_probs[:, t].sum()
    return ExactEvaluation(
        error_per_t=error_per_t, event_probs=event_probs, expected_updates=expected_updates
    )


def exact_error_decomposition(cfg: SystemConfig, policy: TabularPolicy) -> np.ndarray:
    """N x (T+1) array of Pr(first prefix mismatch at source n at slot t)."""
    return exact_joint_evaluation(cfg, policy).event_probs
