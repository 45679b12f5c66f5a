"""Alternate covariance design and DDPG antenna positioning; fixed-array baseline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamforming import (INFEASIBLE, OPTIMAL, Covariance, SolveReport, SolverConfig,
                          design_beamformer)
from .channel import (AntennaLayout, Scenario, channel_vector, communication_rate,
                      layout_valid, target_matrices)
from .ddpg import AgentConfig, DdpgAgent, OuNoise, ReplayBuffer, run_episodes
from .environment import FasIsacEnv, RewardWeights, action_dim, initial_layout, state_dim
from .errors import ConfigurationError


@dataclass
class BcdConfig:
    num_antennas: int = 4
    max_outer_iters: int = 10
    rate_tolerance: float = 1e-3
    episodes_per_iter: int = 10
    steps_per_episode: int = 100
    num_candidates: int = 8
    initial_layout: str = "fpa_grid"
    solver: SolverConfig = field(default_factory=SolverConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    reward: RewardWeights = field(default_factory=RewardWeights)

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ConfigurationError("max_outer_iters must be >= 1")
        if not self.rate_tolerance > 0:
            raise ConfigurationError("rate_tolerance must be positive")
        if self.num_candidates < 1:
            raise ConfigurationError("num_candidates must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    relaxed_rate: float
    recovered_rate: float | None
    sensing_slacks: list
    status: str
    adopted: bool
    best_rate: float


@dataclass
class OptResult:
    status: str
    best_layout: AntennaLayout | None
    best_covariance: Covariance | None
    best_rate: float
    relaxed_rate: float
    sensing_slacks: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    certificate: np.ndarray | None = None
    train_steps: int = 0


def _design(layout, scenario, rng, cfg):
    f = channel_vector(layout, scenario)
    E = target_matrices(layout, scenario)
    _, cov1, rep = design_beamformer(f, E, scenario.p_max, scenario.gamma, scenario.noise_power,
                                     rng, cfg.solver)
    return f, cov1, rep


def optimize(scenario: Scenario, config: BcdConfig, rng: np.random.Generator,
             start_layout: AntennaLayout | None = None) -> OptResult:
    cfg = config
    layout = start_layout.copy() if start_layout is not None else \
        initial_layout(cfg.num_antennas, scenario, cfg.initial_layout, rng)
    if not layout_valid(layout, scenario):
        raise ConfigurationError("start layout violates region or spacing constraints")

    f, cov, rep = _design(layout, scenario, rng, cfg)
    if rep.status == INFEASIBLE:
        # rerun only the relaxed solve for its certificate
        from .beamforming import solve_covariance
        _, srep = solve_covariance(f, target_matrices(layout, scenario), scenario.p_max,
                                   scenario.gamma, scenario.noise_power, cfg.solver)
        return OptResult(INFEASIBLE, None, None, 0.0, 0.0, rep.constraint_slacks,
                         certificate=srep.certificate)

    best = None  # (rate, layout, cov, report)
    trace = []
    agent = buffer = noise = None
    budget = cfg.episodes_per_iter * cfg.steps_per_episode
    total_episodes = cfg.episodes_per_iter * cfg.max_outer_iters
    train_steps = 0

    def accept(layout_, cov_, rep_):
        nonlocal best
        if rep_.status != OPTIMAL:
            return False
        r = communication_rate(channel_vector(layout_, scenario), cov_, scenario.noise_power)
        if best is None or r > best[0]:
            best = (r, layout_.copy(), cov_, rep_)
            return True
        return False

    accept(layout, cov, rep)
    last_status = rep.status
    for it in range(cfg.max_outer_iters):
        prev_best = best[0] if best is not None else -np.inf
        adopted = False
        if budget > 0 and cov is not None:
            if agent is None:
                n = layout.num_antennas
                agent = DdpgAgent(state_dim(n), action_dim(n), scenario.action_bound, cfg.agent, rng)
                buffer = ReplayBuffer(agent.state_dim, agent.action_dim, cfg.agent.buffer_capacity)
                noise = OuNoise(agent.action_dim, cfg.agent.ou_xi,
                                cfg.agent.ou_sigma_start * scenario.action_bound)
            env = FasIsacEnv(scenario, cov, layout, cfg.reward, cfg.steps_per_episode)
            log = run_episodes(agent, env, cfg.episodes_per_iter, cfg.steps_per_episode, rng,
                               buffer, noise, cfg.num_candidates, total_episodes,
                               it * cfg.episodes_per_iter)
            train_steps += log.train_steps
            # re-solve at each candidate; adopt only feasible improvements
            for _, cand in log.candidates:
                if np.array_equal(cand.as_vector(), layout.as_vector()):
                    continue
                _, ccov, crep = _design(cand, scenario, rng, cfg)
                if accept(cand, ccov, crep):
                    adopted = True
            if adopted:
                layout = best[1].copy()
                cov, rep = best[2], best[3]
                last_status = rep.status
        best_rate = best[0] if best is not None else float("nan")
        trace.append(IterationRecord(it, rep.relaxed_rate, rep.recovered_rate,
                                     list(rep.constraint_slacks), rep.status, adopted, best_rate))
        if best is not None and best[0] - prev_best < cfg.rate_tolerance and it > 0:
            break
        if budget == 0:
            break

    if best is None:
        return OptResult(last_status, layout, cov, float("nan"), rep.relaxed_rate,
                         rep.constraint_slacks, trace, train_steps=train_steps)
    rate, blayout, bcov, brep = best
    return OptResult(OPTIMAL, blayout, bcov, rate, brep.relaxed_rate, list(brep.constraint_slacks),
                     trace, train_steps=train_steps)


def fpa_baseline(scenario: Scenario, config: BcdConfig, rng: np.random.Generator) -> OptResult:
    """Beamforming only, on the centered lambda/2 grid with the UT at its region center."""
    from dataclasses import replace
    base = replace(config, max_outer_iters=1, episodes_per_iter=0, initial_layout="fpa_grid")
    return optimize(scenario, base, rng)
