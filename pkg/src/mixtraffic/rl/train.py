"""Episode environment, training loop and evaluation for the TD3 agent."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..dynamics import KinematicState, Trajectory, clamp_accel, jerk, step, time_to_collision
from ..fuel import FuelParams, driveline_power, fuel_rate
from ..platoon import FollowerInit, init_follower
from ..reward import (RewardBreakdown, RewardConfig, f_eff, f_fuel, f_jerk, f_speed,
                      f_ttc, total_reward)
from .buffer import ReplayBuffer
from .policy import Normalizer, Policy
from .td3 import Td3, TrainerConfig

log = logging.getLogger(__name__)


class CarFollowingEnv:
    """Two-vehicle episode behind a recorded leader trajectory.

    The reward for a step is evaluated on the post-step state; the fuel
    term uses the pre-step speed with the applied acceleration, matching
    the per-sample accounting of :func:`mixtraffic.fuel.trajectory_fuel`.
    """

    def __init__(self, reward_cfg: RewardConfig = RewardConfig(),
                 fuel_params: FuelParams = FuelParams(), gap_cutoff: float = 200.0):
        self.reward_cfg = reward_cfg
        self.fuel_params = fuel_params
        self.gap_cutoff = gap_cutoff
        self.leader: Optional[Trajectory] = None
        self.state: Optional[KinematicState] = None

    def reset(self, leader: Trajectory, time_gap: float, init: FollowerInit) -> KinematicState:
        if len(leader) < 2:
            raise ValueError("leader trajectory is too short for an episode")
        self.leader = leader
        self.k = 0
        self.a_prev = init.a
        self.state = KinematicState(init.v, float(leader.v[0]) - init.v, init.gap, time_gap)
        return self.state

    def reward(self, prev: KinematicState, new: KinematicState, a_eff: float) -> RewardBreakdown:
        cfg = self.reward_cfg
        collided = new.gap <= 0
        dt = self.leader.dt
        if collided:
            return total_reward(0.0, 0.0, 0.0, 0.0, 0.0, True, cfg)
        rate = float(fuel_rate(driveline_power(prev.v, a_eff, self.fuel_params)))
        return total_reward(
            f_ttc(time_to_collision(new), cfg),
            f_eff(new.gap, new.v, new.time_gap, cfg),
            f_jerk(jerk(a_eff, self.a_prev, dt), cfg),
            f_speed(new.v, cfg),
            f_fuel(prev.v * dt, rate, cfg),
            False, cfg)

    def step(self, accel: float):
        """Apply ``accel``; returns ``(state, breakdown, terminal, truncated)``."""
        prev = self.state
        dt = self.leader.dt
        new = step(prev, clamp_accel(accel), float(self.leader.v[self.k + 1]), dt)
        a_eff = (new.v - prev.v) / dt
        br = self.reward(prev, new, a_eff)
        self.k += 1
        self.a_prev = a_eff
        self.state = new
        terminal = br.collided or new.gap > self.gap_cutoff
        truncated = not terminal and self.k >= len(self.leader) - 1
        return new, br, terminal, truncated


@dataclass
class EpisodeStats:
    total_reward: float
    steps: int
    collided: bool
    runaway: bool
    min_ttc: float


def rolling_normalized(rewards: Sequence[float], window: int = 100) -> np.ndarray:
    """Trailing rolling mean of episode rewards, min-max scaled to [0, 1]."""
    r = np.asarray(rewards, dtype=float)
    if r.size == 0:
        return r
    c = np.concatenate(([0.0], np.cumsum(r)))
    idx = np.arange(1, r.size + 1)
    lo = np.maximum(0, idx - window)
    roll = (c[idx] - c[lo]) / (idx - lo)
    span = roll.max() - roll.min()
    if span == 0:
        return np.zeros_like(roll)
    return (roll - roll.min()) / span


@dataclass
class TrainingResult:
    policy: Policy
    episode_rewards: np.ndarray
    normalized_rolling: np.ndarray
    collisions: np.ndarray
    agent: Td3

    @property
    def reward_curve(self) -> np.ndarray:
        return self.episode_rewards


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def train(leader_episodes: Sequence[Trajectory], reward_cfg: RewardConfig = RewardConfig(),
          cfg: TrainerConfig = TrainerConfig(), fuel_params: FuelParams = FuelParams(),
          norm: Normalizer = Normalizer(),
          progress: Optional[Callable[[int, EpisodeStats], None]] = None) -> TrainingResult:
    """Train a TD3 car-following policy.

    Each episode draws a leader from ``leader_episodes`` and a time gap
    from ``cfg.time_gaps``. An episode ends when the leader runs out
    (bootstrapped, not terminal), on collision, or when the gap exceeds
    ``cfg.gap_cutoff``.
    """
    if not leader_episodes:
        raise ValueError("training needs at least one leader trajectory")
    rng_init, rng_explore, rng_buffer, rng_episode = _streams(cfg.seed)
    agent = Td3(cfg, rng_init)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    env = CarFollowingEnv(reward_cfg, fuel_params, cfg.gap_cutoff)
    rewards = np.zeros(cfg.episodes)
    collisions = np.zeros(cfg.episodes, dtype=bool)
    total_steps = 0
    updates = 0
    for ep in range(cfg.episodes):
        leader = leader_episodes[int(rng_episode.integers(len(leader_episodes)))]
        time_gap = float(cfg.time_gaps[int(rng_episode.integers(len(cfg.time_gaps)))])
        if len(leader) < 2:
            log.warning("episode %d: leader with %d samples skipped", ep, len(leader))
            continue
        init = init_follower(leader, rng_episode, cfg.init_gap_range)
        state = env.reset(leader, time_gap, init)
        z = norm.state(state)
        ep_reward = 0.0
        while True:
            if total_steps < cfg.warmup_steps:
                u = float(rng_explore.uniform(-1.0, 1.0))
            else:
                u = float(agent.actor.forward(z[None, :])[0, 0])
                u = min(max(u + cfg.explore_sigma * rng_explore.standard_normal(), -1.0), 1.0)
            state, br, terminal, truncated = env.step(float(norm.action(u)))
            z_next = norm.state(state)
            buffer.add(z, u, br.total, z_next, terminal)
            ep_reward += br.total
            total_steps += 1
            if total_steps >= cfg.warmup_steps and len(buffer) >= cfg.batch_size:
                updates += 1
                agent.update(buffer, updates, rng_buffer)
            z = z_next
            if terminal or truncated:
                break
        rewards[ep] = ep_reward
        collisions[ep] = br.collided
        if progress is not None:
            progress(ep, EpisodeStats(ep_reward, env.k, br.collided,
                                      state.gap > cfg.gap_cutoff, math.nan))
    meta = {"trainer": cfg.to_dict(), "reward": reward_cfg.to_dict(),
            "episodes": int(cfg.episodes), "updates": int(updates)}
    policy = agent.policy(norm, meta)
    return TrainingResult(policy, rewards, rolling_normalized(rewards), collisions, agent)


def run_episode(policy, leader: Trajectory, time_gap: float, init: FollowerInit,
                env: CarFollowingEnv) -> EpisodeStats:
    """Deterministic rollout of ``policy`` (anything with ``act``)."""
    state = env.reset(leader, time_gap, init)
    total = 0.0
    min_ttc = math.inf
    br = None
    while True:
        state, br, terminal, truncated = env.step(policy.act(state))
        total += br.total
        if not br.collided:
            min_ttc = min(min_ttc, time_to_collision(state))
        if terminal or truncated:
            break
    return EpisodeStats(total, env.k, br.collided, state.gap > env.gap_cutoff, min_ttc)


def evaluate(policy, test_episodes: Sequence[Trajectory],
             reward_cfg: RewardConfig = RewardConfig(), fuel_params: FuelParams = FuelParams(),
             time_gaps: Sequence[float] = (1.0, 1.5, 2.0), seed: int = 12345,
             gap_range=(10.0, 50.0), gap_cutoff: float = 200.0, ttc_cap: float = 100.0) -> dict:
    """Roll out without exploration over ``test_episodes``.

    Time gaps cycle through ``time_gaps``; initial gaps are seeded.
    ``mean_ttc_margin`` averages each episode's minimum TTC (capped at
    ``ttc_cap``) minus the TTC threshold.
    """
    if not test_episodes:
        raise ValueError("evaluation needs at least one episode")
    rng = np.random.default_rng(seed)
    env = CarFollowingEnv(reward_cfg, fuel_params, gap_cutoff)
    stats = []
    for i, leader in enumerate(test_episodes):
        init = init_follower(leader, rng, gap_range)
        stats.append(run_episode(policy, leader, time_gaps[i % len(time_gaps)], init, env))
    margins = [min(s.min_ttc, ttc_cap) - reward_cfg.ttc_threshold for s in stats]
    return {
        "episodes": len(stats),
        "collisions": int(sum(s.collided for s in stats)),
        "runaways": int(sum(s.runaway for s in stats)),
        "mean_reward": float(np.mean([s.total_reward for s in stats])),
        "mean_ttc_margin": float(np.mean(margins)),
        "per_episode": stats,
    }
