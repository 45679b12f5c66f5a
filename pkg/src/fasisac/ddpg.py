"""DDPG for antenna positioning: replay buffer, OU noise, agent, interaction loop."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .nn import AdamState, Mlp, adam_step, backward, forward, soft_update


class ReplayBuffer:
    """Fixed-capacity ring of (s, a, r, s') transitions stored in flat arrays."""

    def __init__(self, state_dim: int, action_dim: int, capacity: int = 10_000):
        if capacity < 1:
            raise ConfigurationError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def push(self, state, action, reward, next_state):
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def order(self) -> np.ndarray:
        """Slot indices from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def transitions(self):
        idx = self.order()
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx]

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = self.sample_indices(batch_size, rng)
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx]


@dataclass
class OuNoise:
    """Z <- Z + xi * (0 - Z) + varsigma * N(0, 1), elementwise."""
    dim: int
    xi: float = 0.15
    varsigma: float = 0.2
    state: np.ndarray = None

    def __post_init__(self):
        if not 0.0 < self.xi <= 1.0:
            raise ConfigurationError("xi must lie in (0, 1]")
        if self.varsigma < 0:
            raise ConfigurationError("varsigma must be >= 0")
        if self.state is None:
            self.state = np.zeros(self.dim)
        else:
            self.state = np.asarray(self.state, dtype=float).copy()

    def reset(self):
        self.state = np.zeros(self.dim)

    def step(self, rng: np.random.Generator) -> np.ndarray:
        self.state = self.state - self.xi * self.state + self.varsigma * rng.standard_normal(self.dim)
        return self.state.copy()


def ou_step(noise: OuNoise, rng: np.random.Generator) -> np.ndarray:
    return noise.step(rng)


@dataclass
class AgentConfig:
    actor_hidden: tuple = (400, 300)
    critic_hidden: tuple = (400, 300)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    gamma: float = 0.99
    tau: float = 0.001
    batch_size: int = 64
    buffer_capacity: int = 10_000
    warmup: int = 1000
    ou_xi: float = 0.15
    ou_sigma_start: float = 0.2  # fraction of the action bound
    ou_sigma_end: float = 0.02
    critic_weight_decay: float = 0.0


@dataclass
class TrainReport:
    status: str
    critic_loss: float = float("nan")
    actor_objective: float = float("nan")


class DdpgAgent:
    def __init__(self, state_dim: int, action_dim: int, action_bound: float,
                 config: AgentConfig | None = None, rng: np.random.Generator | None = None):
        cfg = config or AgentConfig()
        if not 0.0 <= cfg.gamma < 1.0:
            raise ConfigurationError("discount must lie in [0, 1)")
        rng = rng if rng is not None else np.random.default_rng()
        self.config = cfg
        self.state_dim, self.action_dim = state_dim, action_dim
        self.action_bound = float(action_bound)
        a1, a2 = cfg.actor_hidden
        c1, c2 = cfg.critic_hidden
        self.actor = Mlp([state_dim, a1, a2, action_dim], "tanh", self.action_bound, rng=rng)
        self.critic = Mlp([state_dim, c1, c2, 1], "linear", late_concat_dim=action_dim, rng=rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = AdamState.for_params(self.actor.params(), cfg.actor_lr)
        self.critic_opt = AdamState.for_params(self.critic.params(), cfg.critic_lr)
        self.gamma, self.tau, self.batch_size = cfg.gamma, cfg.tau, cfg.batch_size

    def act(self, state, noise: OuNoise | None = None, rng: np.random.Generator | None = None):
        a = forward(self.actor, state)[0]
        if noise is not None:
            a = np.clip(a + noise.step(rng), -self.action_bound, self.action_bound)
        return a

    def critic_batch_loss(self, s, a, r, s2):
        """(loss, d loss / d Q, cache, y) for the current critic on one batch."""
        a2 = forward(self.actor_target, s2)[0]
        q2 = forward(self.critic_target, s2, a2)[0][:, 0]
        y = r + self.gamma * q2
        q, cache = forward(self.critic, s, a)
        diff = q[:, 0] - y
        return float(np.mean(diff ** 2)), (2.0 / diff.size) * diff[:, None], cache, y

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> TrainReport:
        if len(buffer) < self.batch_size:
            return TrainReport("insufficient_buffer")
        s, a, r, s2 = buffer.sample(self.batch_size, rng)
        loss, dq, cache, _ = self.critic_batch_loss(s, a, r, s2)
        g = backward(self.critic, cache, dq)
        grads = g.params()
        wd = self.config.critic_weight_decay
        if wd:
            grads = [gr + wd * p for gr, p in zip(grads, self.critic.params())]
        adam_step(self.critic_opt, self.critic.params(), grads)
        self.critic.touch()

        # actor ascends mean Q(s, mu(s)); descend its negative
        mu, acache = forward(self.actor, s)
        q, ccache = forward(self.critic, s, mu)
        dq_da = backward(self.critic, ccache, np.full_like(q, -1.0 / q.shape[0])).aux
        ga = backward(self.actor, acache, dq_da)
        adam_step(self.actor_opt, self.actor.params(), ga.params())
        self.actor.touch()

        soft_update(self.actor_target.params(), self.actor.params(), self.tau)
        soft_update(self.critic_target.params(), self.critic.params(), self.tau)
        self.actor_target.touch()
        self.critic_target.touch()
        return TrainReport("ok", loss, float(q.mean()))

    def networks(self) -> dict:
        return {"actor": self.actor, "critic": self.critic,
                "actor_target": self.actor_target, "critic_target": self.critic_target}

    def optimizers(self) -> dict:
        return {"actor": self.actor_opt, "critic": self.critic_opt}


@dataclass
class EpisodeRecord:
    episode: int
    episode_return: float
    final_rate: float
    best_rate: float
    min_sensing_slack: float
    power_slack: float


@dataclass
class TrainingLog:
    episodes: list = field(default_factory=list)
    best_reward: float = -np.inf
    best_layout: object = None
    candidates: list = field(default_factory=list)  # [(reward, layout)], best first
    train_steps: int = 0

    def rows(self):
        return [vars(e) for e in self.episodes]


def run_episodes(agent: DdpgAgent, env, episodes: int, steps_per_episode: int,
                 rng: np.random.Generator, buffer: ReplayBuffer | None = None,
                 noise: OuNoise | None = None, num_candidates: int = 1,
                 total_episodes: int | None = None, episode_offset: int = 0) -> TrainingLog:
    """Act with OU noise, step, store, train; keep the highest-reward layouts seen.

    The start layout (scored at zero movement) is always a candidate, so with
    ``episodes=0`` it is returned unchanged. ``total_episodes`` / ``episode_offset``
    place this call inside a longer noise-annealing schedule.
    """
    cfg = agent.config
    if buffer is None:
        buffer = ReplayBuffer(agent.state_dim, agent.action_dim, cfg.buffer_capacity)
    bound = agent.action_bound
    if noise is None:
        noise = OuNoise(agent.action_dim, cfg.ou_xi, cfg.ou_sigma_start * bound)
    total = total_episodes if total_episodes is not None else max(episodes, 1)
    log = TrainingLog()

    start = env.start_layout.copy()
    r0, _, _ = env.evaluate(start)
    heap: list = []  # min-heap of (reward, tiebreak, layout)
    counter = 0

    def offer(reward_value, layout):
        nonlocal counter
        item = (reward_value, -counter, layout.copy())
        counter += 1
        if len(heap) < num_candidates:
            heapq.heappush(heap, item)
        elif reward_value > heap[0][0]:
            heapq.heapreplace(heap, item)

    offer(r0, start)
    for ep in range(episodes):
        frac = min(1.0, (episode_offset + ep) / max(total - 1, 1))
        noise.varsigma = bound * (cfg.ou_sigma_start + (cfg.ou_sigma_end - cfg.ou_sigma_start) * frac)
        noise.reset()
        state = env.reset()
        ret, best_rate = 0.0, -np.inf
        res = None
        for _ in range(steps_per_episode):
            action = agent.act(state, noise, rng)
            res = env.step(action)
            buffer.push(state, action, res.reward, res.next_state)
            ret += res.reward
            best_rate = max(best_rate, res.rate)
            offer(res.reward, res.layout)
            state = res.next_state
            if len(buffer) >= max(cfg.warmup, agent.batch_size):
                agent.train_step(buffer, rng)
                log.train_steps += 1
        if res is None:
            continue
        gamma = env.scenario.gamma
        log.episodes.append(EpisodeRecord(
            episode=episode_offset + ep, episode_return=ret, final_rate=res.rate, best_rate=best_rate,
            min_sensing_slack=min((g - gamma for g in res.sensing_gains), default=float("inf")),
            power_slack=env.scenario.p_max - env.covariance.power))
    ranked = sorted(heap, key=lambda it: (-it[0], -it[1]))
    log.candidates = [(r, lay) for r, _, lay in ranked]
    log.best_reward, log.best_layout = log.candidates[0]
    return log
