"""System parameters, the two-state source law and steady-state quantities.

Sources are numbered from 1 in every public signature; arrays are 0-based inside.
State 1 is *free* and state 0 is *busy*: a free source turns busy with
probability ``lambda`` per slot and a busy source turns free with probability ``mu``.
"""
import typing
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigValidationError, ValidationError
from .utils.helper import parse_seed
from .utils.logger import get_logger
from .validator import ConfigValidator

log = get_logger("vigil.model")


@dataclass(frozen=True)
class SourceParams:
    mu: float
    lambda_: float

    @property
    def zeta(self) -> float:
        return self.mu + self.lambda_

    @property
    def nu(self) -> float:
        return min(self.mu, self.lambda_)

    @property
    def omega(self) -> float:
        return max(self.mu, self.lambda_)

    @property
    def change_rate(self) -> float:
        """Stationary probability that the state flips in a slot, 2*mu*lambda/zeta."""
        return 2.0 * self.mu * self.lambda_ / self.zeta

    @property
    def kernel(self) -> np.ndarray:
        """Row ``a`` is the law of the next state given the current state ``a``."""
        return np.array(
            [[1.0 - self.mu, self.mu], [self.lambda_, 1.0 - self.lambda_]]
        )

    def to_document(self) -> dict:
        return {"mu": self.mu, "lambda": self.lambda_}


@dataclass(frozen=True)
class SystemConfig:
    n_sources: int
    k_select: int
    horizon: int
    rate_budget: float
    sources: typing.Tuple[SourceParams, ...]
    seed: int = 0
    trials: int = 10000
    workers: int = 1

    def source(self, n: int) -> SourceParams:
        return self.sources[n - 1]

    @property
    def mus(self) -> np.ndarray:
        return np.array([p.mu for p in self.sources])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lambda_ for p in self.sources])

    @property
    def change_rates(self) -> np.ndarray:
        return np.array([p.change_rate for p in self.sources])

    @property
    def full_rate(self) -> float:
        """Update rate of updating on every change of every source."""
        return float(self.change_rates.sum())

    def with_rate(self, rate_budget: float) -> "SystemConfig":
        return SystemConfig(
            n_sources=self.n_sources,
            k_select=self.k_select,
            horizon=self.horizon,
            rate_budget=rate_budget,
            sources=self.sources,
            seed=self.seed,
            trials=self.trials,
            workers=self.workers,
        )

    def to_document(self) -> dict:
        return {
            "n_sources": self.n_sources,
            "k_select": self.k_select,
            "horizon": self.horizon,
            "rate_budget": self.rate_budget,
            "sources": [p.to_document() for p in self.sources],
            "seed": self.seed,
            "trials": self.trials,
            "workers": self.workers,
        }


@dataclass(frozen=True)
class AlphaTable:
    """``alpha[n] = Pr(fewer than K of sources 1..n-1 are free)`` for n in 1..N+1,
    with ``alpha[N+1] = 0``."""

    values: np.ndarray

    def __getitem__(self, n: int) -> float:
        if n < 1 or n > len(self.values):
            raise IndexError(f"alpha index {n} outside 1..{len(self.values)}")
        return float(self.values[n - 1])

    def __len__(self):
        return len(self.values)

    @property
    def head(self) -> np.ndarray:
        """alpha_1..alpha_N."""
        return self.values[:-1]


@dataclass
class Trajectory:
    availability: np.ndarray
    seed: typing.Any = field(default=None)


def validate_config(cfg: SystemConfig) -> SystemConfig:
    violations = []
    if cfg.n_sources < 1:
        violations.append(f"n_sources must be >= 1, got {cfg.n_sources}")
    if cfg.k_select < 1:
        violations.append(f"k_select must be >= 1, got {cfg.k_select}")
    if cfg.k_select > cfg.n_sources:
        violations.append(
            f"k_select exceeds n_sources ({cfg.k_select} > {cfg.n_sources})"
        )
    if cfg.horizon < 1:
        violations.append(f"horizon must be >= 1, got {cfg.horizon}")
    if cfg.rate_budget < 0:
        violations.append(f"rate_budget must be >= 0, got {cfg.rate_budget}")
    if len(cfg.sources) != cfg.n_sources:
        violations.append(
            f"sources has {len(cfg.sources)} entries but n_sources is {cfg.n_sources}"
        )
    if cfg.trials < 1:
        violations.append(f"trials must be >= 1, got {cfg.trials}")
    if cfg.workers < 1:
        violations.append(f"workers must be >= 1, got {cfg.workers}")
    for n, p in enumerate(cfg.sources, start=1):
        for name, value in (("mu", p.mu), ("lambda", p.lambda_)):
            if not value > 0:
                violations.append(f"sources[{n}].{name} must be > 0, got {value}")
            if not value < 0.5:
                violations.append(f"sources[{n}].{name}: {name} must be < 0.5, got {value}")
    if violations:
        log.error("invalid system config", violations=violations)
        raise ConfigValidationError(violations)
    return cfg


def load_config(document: dict) -> SystemConfig:
    """Build a validated ``SystemConfig`` from a configuration document."""
    try:
        document = ConfigValidator.validated_message(dict(document))
    except ValidationError as e:
        raise ConfigValidationError([str(e)])
    try:
        seed = parse_seed(document["seed"])
    except ValueError as e:
        raise ConfigValidationError([f"seed: {e}"])
    cfg = SystemConfig(
        n_sources=document["n_sources"],
        k_select=document["k_select"],
        horizon=document["horizon"],
        rate_budget=float(document["rate_budget"]),
        sources=tuple(
            SourceParams(mu=float(s["mu"]), lambda_=float(s["lambda"]))
            for s in document["sources"]
        ),
        seed=seed,
        trials=document["trials"],
        workers=document["workers"],
    )
    return validate_config(cfg)


def steady_state_free_prob(p: SourceParams) -> float:
    return p.mu / p.zeta


def transition_prob(p: SourceParams, from_state: int, to_state: int) -> float:
    return float(p.kernel[from_state, to_state])


def alpha_table(cfg: SystemConfig) -> AlphaTable:
    k = cfg.k_select
    # probability of each free count 0..K-1 among the prefix seen so far
    below = np.zeros(k)
    below[0] = 1.0
    values = np.empty(cfg.n_sources + 1)
    values[0] = 1.0
    for n, p in enumerate(cfg.sources[:-1], start=1):
        q = steady_state_free_prob(p)
        shifted = np.zeros(k)
        shifted[1:] = below[:-1] * q
        below = below * (1.0 - q) + shifted
        values[n] = below.sum()
    values[cfg.n_sources] = 0.0
    return AlphaTable(values=values)


def draw_initial(cfg: SystemConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` x N steady-state draws of the availability vector."""
    free = np.array([steady_state_free_prob(p) for p in cfg.sources])
    return (rng.random((size, cfg.n_sources)) < free).astype(np.int8)


def step_availability(
    x: np.ndarray, mus: np.ndarray, lambdas: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    u = rng.random(x.shape)
    return np.where(x == 1, u >= lambdas, u < mus).astype(np.int8)


def sample_availability(cfg: SystemConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` x (T+1) x N availability paths from one generator."""
    paths = np.empty((size, cfg.horizon + 1, cfg.n_sources), dtype=np.int8)
    paths[:, 0] = draw_initial(cfg, rng, size)
    mus, lambdas = cfg.mus, cfg.lambdas
    for t in range(1, cfg.horizon + 1):
        paths[:, t] = step_availability(paths[:, t - 1], mus, lambdas, rng)
    return paths


def sample_trajectories(
    cfg: SystemConfig, count: int, seed=None
) -> typing.Iterator[Trajectory]:
    """Independent trajectories, one ``SeedSequence`` child each, so any prefix of
    the stream is the same whatever ``count`` is."""
    root = np.random.SeedSequence(parse_seed(seed))
    for child in root.spawn(count):
        rng = np.random.default_rng(child)
        yield Trajectory(availability=sample_availability(cfg, rng, 1)[0], seed=child)
