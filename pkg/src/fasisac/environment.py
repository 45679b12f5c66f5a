"""Antenna-positioning MDP with the covariance held fixed.

State: BS coordinates, UT coordinates, then (tr U, lambda_max U, mean eigenvalue U).
Action: per-antenna displacements (dx1, dy1, ..., dxN, dyN, dx_r, dy_r), each
component bounded by A/4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .beamforming import Covariance
from .channel import (AntennaLayout, Scenario, SPACING_RTOL, channel_vector,
                      communication_rate, layout_valid, min_distance_ok, sensing_gain,
                      target_matrices)
from .errors import ConfigurationError

PROSE = "prose"
LITERAL = "literal"


@dataclass
class RewardWeights:
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 0.1
    # "prose": penalize shortfalls (Gamma - gain, Tr U - P_max);
    # "literal": the printed formula's max(0, gain - Gamma), max(0, P_max - Tr U)
    sign_convention: str = PROSE

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.alpha3) < 0:
            raise ConfigurationError("reward weights must be nonnegative")
        if self.sign_convention not in (PROSE, LITERAL):
            raise ConfigurationError(f"unknown sign convention {self.sign_convention!r}")


@dataclass
class StepResult:
    next_state: np.ndarray
    reward: float
    rate: float
    sensing_gains: list[float]
    violated: dict = field(default_factory=dict)
    done: bool = False
    layout: AntennaLayout | None = None


def state_dim(num_antennas: int) -> int:
    return 2 * (num_antennas + 1) + 3


def action_dim(num_antennas: int) -> int:
    return 2 * (num_antennas + 1)


def build_state(layout: AntennaLayout, covariance) -> np.ndarray:
    U = np.asarray(getattr(covariance, "matrix", covariance))
    eig = np.clip(np.linalg.eigvalsh(0.5 * (U + U.conj().T)), 0.0, None)
    feats = [float(np.trace(U).real), float(eig[-1]), float(eig.mean())]
    return np.concatenate([layout.as_vector(), feats])


def apply_action(layout: AntennaLayout, action, scenario: Scenario) -> AntennaLayout:
    """Clip, move inside the regions, then settle BS antennas in index order.

    A BS move that would land within D_s of any other antenna's current position
    is rejected and that antenna keeps its previous position.
    """
    n = layout.num_antennas
    a = np.asarray(action, dtype=np.float64).ravel()
    if a.size != action_dim(n):
        raise ConfigurationError(f"action length {a.size}, expected {action_dim(n)}")
    if not min_distance_ok(layout, scenario.d_s):
        raise ConfigurationError("input layout violates the minimum antenna spacing")
    bound = scenario.action_bound
    a = np.clip(a, -bound, bound)
    tentative = scenario.region_bs.clip(layout.bs_positions + a[:-2].reshape(n, 2))
    ut = scenario.region_ut.clip(layout.ut_position + a[-2:])
    settled = kernels.settle_positions(layout.bs_positions,
                                       np.ascontiguousarray(tentative),
                                       scenario.d_s * (1.0 - SPACING_RTOL))
    return AntennaLayout(settled, ut)


def displacement(before: AntennaLayout, after: AntennaLayout) -> np.ndarray:
    return after.as_vector() - before.as_vector()


def reward_terms(layout: AntennaLayout, covariance, scenario: Scenario, weights: RewardWeights,
                 action):
    """Return (reward, rate, sensing gains). ``action`` is the realized displacement."""
    U = getattr(covariance, "matrix", covariance)
    f = channel_vector(layout, scenario)
    rate = communication_rate(f, U, scenario.noise_power)
    gains = [sensing_gain(E, U) for E in target_matrices(layout, scenario)]
    power = float(np.trace(U).real)
    if weights.sign_convention == PROSE:
        sense_pen = sum(max(0.0, scenario.gamma - g) for g in gains)
        power_pen = max(0.0, power - scenario.p_max)
    else:
        sense_pen = sum(max(0.0, g - scenario.gamma) for g in gains)
        power_pen = max(0.0, scenario.p_max - power)
    moves = np.asarray(action, dtype=float).reshape(-1, 2)
    move_pen = float(np.linalg.norm(moves, axis=1).sum()) / moves.shape[0]
    r = rate - weights.alpha1 * sense_pen - weights.alpha2 * power_pen - weights.alpha3 * move_pen
    return float(r), rate, gains


def reward(layout, covariance, scenario, weights, action) -> float:
    return reward_terms(layout, covariance, scenario, weights, action)[0]


def fpa_grid(num_antennas: int, scenario: Scenario, spacing: float | None = None) -> np.ndarray:
    """Centered lambda/2-spaced grid, filled row by row, ceil(sqrt N) columns."""
    spacing = scenario.wavelength / 2.0 if spacing is None else spacing
    cols = int(math.ceil(math.sqrt(num_antennas)))
    rows = int(math.ceil(num_antennas / cols))
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    pos = np.array([(x, y) for y in ys for x in xs][:num_antennas]) + np.asarray(scenario.region_bs.center)
    if not all(scenario.region_bs.contains(p) for p in pos):
        raise ConfigurationError(f"a {rows}x{cols} grid at spacing {spacing} does not fit the BS region")
    if spacing < scenario.d_s * (1.0 - SPACING_RTOL):
        raise ConfigurationError("grid spacing is below the minimum antenna distance")
    return pos


def initial_layout(num_antennas: int, scenario: Scenario, policy: str = "fpa_grid",
                   rng: np.random.Generator | None = None, max_attempts: int = 10_000) -> AntennaLayout:
    ut = np.asarray(scenario.region_ut.center, dtype=float)
    if policy == "fpa_grid":
        return AntennaLayout(fpa_grid(num_antennas, scenario), ut)
    if policy == "random_valid":
        if rng is None:
            raise ConfigurationError("random_valid needs a random generator")
        lo, hi = scenario.region_bs.lower, scenario.region_bs.upper
        for _ in range(max_attempts):
            pos = rng.uniform(lo, hi, (num_antennas, 2))
            cand = AntennaLayout(pos, ut)
            if min_distance_ok(cand, scenario.d_s):
                return cand
        raise ConfigurationError(
            f"no valid layout for N={num_antennas} at spacing {scenario.d_s} after {max_attempts} draws")
    raise ConfigurationError(f"unknown initial layout policy {policy!r}")


class FasIsacEnv:
    """Mutable single-threaded environment; the covariance stays fixed within episodes."""

    def __init__(self, scenario: Scenario, covariance, start_layout: AntennaLayout,
                 weights: RewardWeights | None = None, episode_length: int = 100):
        if episode_length < 1:
            raise ConfigurationError("episode_length must be >= 1")
        if not layout_valid(start_layout, scenario):
            raise ConfigurationError("start layout violates region or spacing constraints")
        self.scenario = scenario
        self.covariance = covariance if isinstance(covariance, Covariance) else Covariance(covariance)
        self.start_layout = start_layout.copy()
        self.weights = weights or RewardWeights()
        self.episode_length = episode_length
        self.layout = start_layout.copy()
        self.t = 0

    @property
    def num_antennas(self) -> int:
        return self.start_layout.num_antennas

    @property
    def state_dim(self) -> int:
        return state_dim(self.num_antennas)

    @property
    def action_dim(self) -> int:
        return action_dim(self.num_antennas)

    @property
    def action_bound(self) -> float:
        return self.scenario.action_bound

    def reset(self, layout: AntennaLayout | None = None) -> np.ndarray:
        if layout is not None:
            self.start_layout = layout.copy()
        self.layout = self.start_layout.copy()
        self.t = 0
        return build_state(self.layout, self.covariance)

    def evaluate(self, layout: AntennaLayout, moved=None):
        moved = np.zeros(action_dim(layout.num_antennas)) if moved is None else moved
        return reward_terms(layout, self.covariance, self.scenario, self.weights, moved)

    def step(self, action) -> StepResult:
        before = self.layout
        after = apply_action(before, action, self.scenario)
        moved = displacement(before, after)
        r, rate, gains = self.evaluate(after, moved)
        self.layout = after
        self.t += 1
        power = self.covariance.power
        violated = {
            "sensing": [g < self.scenario.gamma for g in gains],
            "power": power > self.scenario.p_max * (1 + 1e-9),
            "spacing": not min_distance_ok(after, self.scenario.d_s),
        }
        return StepResult(build_state(after, self.covariance), r, rate, gains, violated,
                          done=self.t >= self.episode_length, layout=after.copy())


def reset(scenario: Scenario, covariance, num_antennas: int, policy: str = "fpa_grid",
          rng: np.random.Generator | None = None, weights: RewardWeights | None = None,
          episode_length: int = 100) -> FasIsacEnv:
    layout = initial_layout(num_antennas, scenario, policy, rng)
    return FasIsacEnv(scenario, covariance, layout, weights, episode_length)
