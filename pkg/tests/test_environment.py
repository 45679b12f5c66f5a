import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fasisac.beamforming import Covariance, design_beamformer
from fasisac.channel import AntennaLayout, channel_vector, communication_rate, target_matrices
from fasisac.environment import (LITERAL, FasIsacEnv, RewardWeights, action_dim, apply_action,
                                 build_state, fpa_grid, initial_layout, reset, reward_terms,
                                 state_dim)
from fasisac.errors import ConfigurationError


@pytest.fixture
def cov(scenario):
    lay = initial_layout(4, scenario, "fpa_grid")
    _, c, _ = design_beamformer(channel_vector(lay, scenario), target_matrices(lay, scenario),
                                scenario.p_max, scenario.gamma, scenario.noise_power,
                                np.random.default_rng(0))
    return c


def test_dims():
    assert state_dim(4) == 13 and action_dim(4) == 10


def test_fpa_grid(scenario):
    pos = fpa_grid(4, scenario)
    np.testing.assert_allclose(pos, [[-0.25, -0.25], [0.25, -0.25], [-0.25, 0.25], [0.25, 0.25]])
    assert fpa_grid(3, scenario).shape == (3, 2)
    with pytest.raises(ConfigurationError):
        fpa_grid(100, scenario)


def test_state_features(scenario, cov):
    lay = initial_layout(4, scenario, "fpa_grid")
    s = build_state(lay, cov)
    assert s.shape == (13,)
    assert s[-3] == pytest.approx(cov.power)
    assert s[-2] == pytest.approx(cov.power, rel=1e-9)  # rank one: lambda_max = trace


def test_zero_action_keeps_layout(scenario, cov):
    env = FasIsacEnv(scenario, cov, initial_layout(4, scenario))
    s0 = env.reset()
    res = env.step(np.zeros(10))
    np.testing.assert_array_equal(res.next_state, s0)
    r0, rate, _ = env.evaluate(env.start_layout)
    assert res.reward == pytest.approx(r0)
    assert rate == pytest.approx(communication_rate(channel_vector(env.start_layout, scenario), cov,
                                                    scenario.noise_power))


def test_actions_are_clipped(scenario, cov):
    lay = initial_layout(4, scenario)
    after = apply_action(lay, np.full(10, 100.0), scenario)
    assert np.all(after.bs_positions <= scenario.region_bs.upper + 1e-12)
    assert np.all(after.ut_position - lay.ut_position <= scenario.action_bound + 1e-12)


def test_spacing_rejection(scenario):
    lay = AntennaLayout([[0.0, 0.0], [1.0, 0.0]], [0, 0])
    # antenna 0 tries to land 0.2 from antenna 1: rejected; antenna 1 moves away freely
    after = apply_action(lay, np.array([0.8, 0.0, 0.5, 0.0, 0, 0]), scenario)
    np.testing.assert_allclose(after.bs_positions, [[0.0, 0.0], [1.5, 0.0]])
    bad = AntennaLayout([[0.0, 0.0], [0.1, 0.0]], [0, 0])
    with pytest.raises(ConfigurationError):
        apply_action(bad, np.zeros(6), scenario)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_step_preserves_constraints(seed):
    from fasisac.channel import ScenarioConfig, layout_valid, scenario_sample
    rng = np.random.default_rng(seed)
    sc = scenario_sample(rng, ScenarioConfig())
    lay = initial_layout(4, sc, "random_valid", rng)
    for _ in range(5):
        lay = apply_action(lay, rng.uniform(-1.5, 1.5, 10), sc)
        assert layout_valid(lay, sc)


def test_reward_sign_conventions(scenario):
    lay = initial_layout(4, scenario)
    U = np.eye(4) * 2.0  # power 8 > p_max = 1: penalized under prose convention
    zero = np.zeros(10)
    r_prose, rate, gains = reward_terms(lay, U, scenario, RewardWeights(), zero)
    expected = rate - sum(max(0, scenario.gamma - g) for g in gains) - (8.0 - scenario.p_max)
    assert r_prose == pytest.approx(expected)
    r_lit, _, _ = reward_terms(lay, U, scenario, RewardWeights(sign_convention=LITERAL), zero)
    assert r_lit == pytest.approx(rate - sum(max(0, g - scenario.gamma) for g in gains))


def test_movement_penalty(scenario, cov):
    lay = initial_layout(4, scenario)
    moved = np.zeros(10)
    moved[0] = 0.3
    r0, _, _ = reward_terms(lay, cov, scenario, RewardWeights(), np.zeros(10))
    r1, _, _ = reward_terms(lay, cov, scenario, RewardWeights(), moved)
    assert r0 - r1 == pytest.approx(0.1 * 0.3 / 5)


def test_episode_done_and_reset(scenario, cov):
    env = reset(scenario, cov, 4, episode_length=3)
    assert not env.step(np.zeros(10)).done
    env.step(np.zeros(10))
    assert env.step(np.zeros(10)).done
    env.reset()
    assert env.t == 0


def test_env_accepts_raw_matrix(scenario, cov):
    env = FasIsacEnv(scenario, cov.matrix, initial_layout(4, scenario))
    assert isinstance(env.covariance, Covariance)
