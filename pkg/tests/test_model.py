import itertools
import math

import numpy as np
import pytest

from vigil.exceptions import ConfigValidationError
from vigil.model import (
    SourceParams,
    alpha_table,
    load_config,
    sample_availability,
    sample_trajectories,
    steady_state_free_prob,
    transition_prob,
    validate_config,
)
from vigil.verify import random_config
from .helper import config_document, make_config, rng


def test_source_quantities():
    p = SourceParams(mu=0.1, lambda_=0.3)
    assert p.zeta == pytest.approx(0.4)
    assert p.nu == 0.1
    assert p.omega == 0.3
    assert p.change_rate == pytest.approx(2 * 0.1 * 0.3 / 0.4)
    assert steady_state_free_prob(p) == pytest.approx(0.25)
    assert transition_prob(p, 0, 1) == pytest.approx(0.1)
    assert transition_prob(p, 1, 0) == pytest.approx(0.3)
    assert np.allclose(p.kernel.sum(axis=1), 1.0)


def test_alpha_single_source():
    cfg = make_config([0.2], [0.3])
    assert list(alpha_table(cfg).values) == [1.0, 0.0]


def test_alpha_top_one():
    cfg = make_config([0.1, 0.2, 0.3], [0.3, 0.2, 0.1])
    q = [steady_state_free_prob(p) for p in cfg.sources]
    alpha = alpha_table(cfg)
    assert alpha[1] == 1.0
    assert alpha[2] == pytest.approx(1 - q[0])
    assert alpha[3] == pytest.approx((1 - q[0]) * (1 - q[1]))
    assert alpha[4] == 0.0
    assert len(alpha.head) == 3


def test_alpha_top_two():
    cfg = make_config([0.1, 0.2, 0.3], [0.3, 0.2, 0.1], k_select=2)
    q = [steady_state_free_prob(p) for p in cfg.sources]
    alpha = alpha_table(cfg)
    assert alpha[2] == pytest.approx(1.0)
    assert alpha[3] == pytest.approx(1 - q[0] * q[1])


def test_alpha_index_out_of_range():
    alpha = alpha_table(make_config([0.2], [0.3]))
    with pytest.raises(IndexError):
        alpha[3]


def test_validate_reports_every_violation():
    cfg = make_config([0.6, 0.2], [0.3, 0.2], k_select=3)
    with pytest.raises(ConfigValidationError) as e:
        validate_config(cfg)
    assert any("k_select" in v for v in e.value.violations)
    assert any("sources[1].mu" in v for v in e.value.violations)
    assert len(e.value.violations) == 2


def test_load_config_document():
    cfg = load_config(config_document([0.1, 0.2], [0.3, 0.4], rate_budget=0.1, seed="0x2a"))
    assert cfg.n_sources == 2
    assert cfg.sources[1].lambda_ == 0.4
    assert cfg.seed == 42
    assert cfg.trials == 10000
    assert cfg.workers == 1


def test_load_config_missing_field():
    document = config_document([0.1], [0.3])
    del document["horizon"]
    with pytest.raises(ConfigValidationError):
        load_config(document)


def test_load_config_bad_seed():
    with pytest.raises(ConfigValidationError):
        load_config(config_document([0.1], [0.3], seed="not-hex"))


def test_with_rate_keeps_everything_else():
    cfg = make_config([0.1, 0.2], [0.3, 0.4], rate_budget=0.1, seed=7)
    other = cfg.with_rate(0.2)
    assert other.rate_budget == 0.2
    assert other.sources == cfg.sources
    assert other.seed == 7


def test_sample_availability_shape_and_steady_state():
    cfg = make_config([0.1, 0.3], [0.3, 0.2], horizon=5)
    paths = sample_availability(cfg, rng(3), 20000)
    assert paths.shape == (20000, 6, 2)
    assert paths.dtype == np.int8
    for i, p in enumerate(cfg.sources):
        assert paths[:, :, i].mean() == pytest.approx(steady_state_free_prob(p), abs=0.02)


def test_trajectory_stream_prefix_is_stable():
    cfg = make_config([0.1, 0.3], [0.3, 0.2], horizon=8)
    short = list(sample_trajectories(cfg, 3, seed=11))
    long = list(sample_trajectories(cfg, 5, seed=11))
    for a, b in zip(short, long):
        assert np.array_equal(a.availability, b.availability)


def _alpha_by_enumeration(cfg, n):
    q = [steady_state_free_prob(p) for p in cfg.sources[: n - 1]]
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=n - 1):
        if sum(outcome) < cfg.k_select:
            total += math.prod(qi if free else 1.0 - qi for qi, free in zip(q, outcome))
    return total


def test_alpha_matches_enumeration_and_is_non_increasing():
    generator = rng(21)
    for _ in range(60):
        n = int(generator.integers(1, 9))
        cfg = random_config(generator, n, int(generator.integers(1, n + 1)), horizon=10)
        alpha = alpha_table(cfg)
        for m in range(1, n + 1):
            assert abs(alpha[m] - _alpha_by_enumeration(cfg, m)) <= 1e-12
        assert np.all(np.diff(alpha.head) <= 1e-15)
        assert alpha[n + 1] == 0.0


def test_one_step_flip_frequency_from_free():
    cfg = make_config([0.1, 0.3], [0.3, 0.2], horizon=20)
    paths = sample_availability(cfg, rng(8), 5000)
    for i, p in enumerate(cfg.sources):
        before, after = paths[:, :-1, i], paths[:, 1:, i]
        visits = int((before == 1).sum())
        flips = int(((before == 1) & (after == 0)).sum())
        se = math.sqrt(p.lambda_ * (1 - p.lambda_) / visits)
        assert abs(flips / visits - p.lambda_) <= 3 * se


def test_long_chain_stationary_mean():
    p = SourceParams(mu=0.2, lambda_=0.3)
    cfg = make_config([p.mu], [p.lambda_], horizon=100000)
    (trajectory,) = list(sample_trajectories(cfg, 1, seed=19))
    free = trajectory.availability[:, 0]
    q = p.mu / p.zeta
    # lag-one correlation of the two-state chain inflates the variance of the mean
    rho = 1.0 - p.mu - p.lambda_
    se = math.sqrt(q * (1 - q) / len(free) * (1 + rho) / (1 - rho))
    assert abs(free.mean() - q) <= 3 * se


def test_same_seed_same_samples():
    cfg = make_config([0.1, 0.3, 0.2], [0.3, 0.2, 0.25], horizon=15)
    assert np.array_equal(sample_availability(cfg, rng(4), 50), sample_availability(cfg, rng(4), 50))
    first = [t.availability for t in sample_trajectories(cfg, 4, seed="0x1f")]
    second = [t.availability for t in sample_trajectories(cfg, 4, seed="0x1f")]
    assert all(np.array_equal(a, b) for a, b in zip(first, second))
