"""Update policies as decision tables over the pair (X_n, Y_n) seen at t-1.

``decisions[n-1, t, x, y]`` is U_n(t) for t in 1..T; row t=0 is unused and zero.
"""
import typing
from dataclasses import dataclass

import numpy as np

from .exceptions import PolicyError, ValidationError
from .model import SourceParams, SystemConfig
from .validator import PolicyTableValidator, ThreeStageValidator

MISMATCH_PAIRS = ((0, 1), (1, 0))


def persistent_state_of(p: SourceParams) -> typing.Tuple[int, int]:
    """Mismatch pair still worth updating after the switch time; ties go to (0, 1)."""
    return (0, 1) if p.lambda_ >= p.mu else (1, 0)


@dataclass(frozen=True)
class TabularPolicy:
    decisions: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.decisions)
        if d.ndim != 4 or d.shape[2:] != (2, 2) or d.shape[1] < 2:
            raise PolicyError(f"Decision table must have shape (N, T+1, 2, 2), got {d.shape}")
        if not np.isin(d, (0, 1)).all():
            raise PolicyError("Decisions must be 0 or 1")
        if d[:, :, 0, 0].any() or d[:, :, 1, 1].any():
            raise PolicyError("A policy never updates a matched pair")
        d = d.astype(np.int8)
        d[:, 0] = 0
        d.setflags(write=False)
        object.__setattr__(self, "decisions", d)

    @property
    def n_sources(self) -> int:
        return self.decisions.shape[0]

    @property
    def horizon(self) -> int:
        return self.decisions.shape[1] - 1

    def source_table(self, n: int) -> np.ndarray:
        """(T+1) x 2 x 2 table of source ``n``."""
        if not 1 <= n <= self.n_sources:
            raise PolicyError(f"Source index {n} outside 1..{self.n_sources}")
        return self.decisions[n - 1]

    def __eq__(self, other):
        return isinstance(other, TabularPolicy) and np.array_equal(
            self.decisions, other.decisions
        )


@dataclass(frozen=True)
class ThreeStageSpec:
    switch_times: typing.Tuple[int, ...]
    persistent_states: typing.Tuple[typing.Tuple[int, int], ...]

    @classmethod
    def for_config(cls, cfg: SystemConfig, switch_times: typing.Sequence[int]) -> "ThreeStageSpec":
        return cls(
            switch_times=tuple(int(t) for t in switch_times),
            persistent_states=tuple(persistent_state_of(p) for p in cfg.sources),
        )


def empty_table(n_sources: int, horizon: int) -> np.ndarray:
    return np.zeros((n_sources, horizon + 1, 2, 2), dtype=np.int8)


def compile_three_stage(cfg: SystemConfig, spec: ThreeStageSpec) -> TabularPolicy:
    if len(spec.switch_times) != cfg.n_sources or len(spec.persistent_states) != cfg.n_sources:
        raise PolicyError(
            f"Three-stage spec lists {len(spec.switch_times)} switch times for {cfg.n_sources} sources"
        )
    table = empty_table(cfg.n_sources, cfg.horizon)
    for i, (switch, state) in enumerate(zip(spec.switch_times, spec.persistent_states)):
        if not 0 <= switch <= cfg.horizon:
            raise PolicyError(f"Switch time {switch} of source {i + 1} outside 0..{cfg.horizon}")
        if tuple(state) not in MISMATCH_PAIRS:
            raise PolicyError(f"Persistent state {state} of source {i + 1} is not a mismatch pair")
        table[i, 1 : switch + 1, 0, 1] = 1
        table[i, 1 : switch + 1, 1, 0] = 1
        table[i, switch + 1 :, state[0], state[1]] = 1
    return TabularPolicy(decisions=table)


def always_update_policy(cfg: SystemConfig) -> TabularPolicy:
    table = empty_table(cfg.n_sources, cfg.horizon)
    table[:, 1:, 0, 1] = 1
    table[:, 1:, 1, 0] = 1
    return TabularPolicy(decisions=table)


def never_update_policy(cfg: SystemConfig) -> TabularPolicy:
    return TabularPolicy(decisions=empty_table(cfg.n_sources, cfg.horizon))


def decide(policy: TabularPolicy, n: int, t: int, x: int, y: int) -> int:
    if not 1 <= t <= policy.horizon:
        raise PolicyError(f"Slot {t} outside 1..{policy.horizon}")
    if x not in (0, 1) or y not in (0, 1):
        raise PolicyError(f"Pair ({x}, {y}) is not binary")
    return int(policy.source_table(n)[t, x, y])


def dump_policy(policy: typing.Union[TabularPolicy, ThreeStageSpec]) -> dict:
    if isinstance(policy, ThreeStageSpec):
        return {
            "switch_times": list(policy.switch_times),
            "persistent_states": [list(s) for s in policy.persistent_states],
        }
    return {"decisions": policy.decisions.tolist()}


def load_policy(document: dict, cfg: SystemConfig) -> TabularPolicy:
    """Accepts either a three-stage document or a full decision table."""
    try:
        if "decisions" in document:
            document = PolicyTableValidator.validated_message(dict(document))
            policy = TabularPolicy(decisions=np.array(document["decisions"], dtype=np.int8))
        else:
            document = ThreeStageValidator.validated_message(dict(document))
            spec = ThreeStageSpec(
                switch_times=tuple(document["switch_times"]),
                persistent_states=tuple(tuple(s) for s in document["persistent_states"]),
            )
            policy = compile_three_stage(cfg, spec)
    except (ValidationError, ValueError) as e:
        raise PolicyError(f"Malformed policy document: {e}")
    if policy.n_sources != cfg.n_sources or policy.horizon != cfg.horizon:
        raise PolicyError(
            f"Policy covers {policy.n_sources} sources over {policy.horizon} slots, "
            f"config has {cfg.n_sources} over {cfg.horizon}"
        )
    return policy
