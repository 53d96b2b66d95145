"""Twin Delayed DDPG update rule on top of :class:`~mixtraffic.rl.mlp.Mlp`."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .buffer import ReplayBuffer
from .mlp import Adam, Mlp
from .policy import Normalizer, Policy

STATE_DIM = 4
ACTION_DIM = 1


@dataclass(frozen=True)
class TrainerConfig:
    """TD3 hyperparameters plus the episode protocol used by ``train``.

    Noise scales are in the normalised action space ``[-1, 1]``.
    """

    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    explore_sigma: float = 0.1
    smooth_sigma: float = 0.2
    smooth_clip: float = 0.5
    batch_size: int = 256
    buffer_capacity: int = 200_000
    episodes: int = 2000
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    seed: int = 0
    hidden: tuple = (256, 256)
    warmup_steps: int = 5000
    time_gaps: tuple = (1.0, 1.5, 2.0)
    gap_cutoff: float = 200.0
    init_gap_range: tuple = (10.0, 50.0)

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be at least 1")
        if self.smooth_clip <= 0:
            raise ValueError("smooth_clip must be positive")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("buffer must hold at least one batch")
        for name in ("hidden", "time_gaps", "init_gap_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("hidden", "time_gaps", "init_gap_range"):
            d[k] = list(d[k])
        return d

    def replace(self, **kw) -> "TrainerConfig":
        return replace(self, **kw)


class Td3:
    """Actor, twin critics, their targets and optimisers."""

    def __init__(self, cfg: TrainerConfig, rng: np.random.Generator):
        h = cfg.hidden
        self.cfg = cfg
        self.actor = Mlp((STATE_DIM, *h, ACTION_DIM), "tanh", rng)
        self.critic1 = Mlp((STATE_DIM + ACTION_DIM, *h, 1), "identity", rng)
        self.critic2 = Mlp((STATE_DIM + ACTION_DIM, *h, 1), "identity", rng)
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_opt = Adam(self.actor.params, lr=cfg.lr_actor)
        self.critic1_opt = Adam(self.critic1.params, lr=cfg.lr_critic)
        self.critic2_opt = Adam(self.critic2.params, lr=cfg.lr_critic)

    def target_values(self, batch, rng: np.random.Generator) -> np.ndarray:
        """Clipped double-Q target with target-policy smoothing."""
        cfg = self.cfg
        noise = np.clip(cfg.smooth_sigma * rng.standard_normal(batch.action.shape),
                        -cfg.smooth_clip, cfg.smooth_clip)
        a2 = np.clip(self.actor_target.forward(batch.next_state) + noise, -1.0, 1.0)
        sa2 = np.concatenate([batch.next_state, a2], axis=1)
        q_min = np.minimum(self.critic1_target.forward(sa2), self.critic2_target.forward(sa2))
        return batch.reward + cfg.gamma * (1.0 - batch.done) * q_min

    def update(self, buffer: ReplayBuffer, step_index: int, rng: np.random.Generator) -> Optional[dict]:
        """One gradient step; returns losses or ``None`` if the buffer is short."""
        cfg = self.cfg
        if len(buffer) < cfg.batch_size:
            return None
        batch = buffer.sample(cfg.batch_size, rng)
        y = self.target_values(batch, rng)
        sa = np.concatenate([batch.state, batch.action], axis=1)
        n = cfg.batch_size
        losses = {}
        for name, critic, opt in (("critic1", self.critic1, self.critic1_opt),
                                  ("critic2", self.critic2, self.critic2_opt)):
            q, acts = critic.forward(sa, keep=True)
            err = q - y
            grads, _ = critic.backward(acts, 2.0 * err / n)
            opt.step(grads)
            losses[name] = float(np.mean(err ** 2))

        if step_index % cfg.policy_delay == 0:
            a, acts_a = self.actor.forward(batch.state, keep=True)
            q, acts_q = self.critic1.forward(np.concatenate([batch.state, a], axis=1), keep=True)
            # ascend Q1: minimise -mean(Q1)
            _, g_in = self.critic1.backward(acts_q, np.full_like(q, -1.0 / n))
            grads, _ = self.actor.backward(acts_a, g_in[:, STATE_DIM:])
            self.actor_opt.step(grads)
            losses["actor"] = float(-np.mean(q))
            for target, online in ((self.actor_target, self.actor),
                                   (self.critic1_target, self.critic1),
                                   (self.critic2_target, self.critic2)):
                target.soft_update(online, cfg.tau)
        return losses

    def policy(self, norm: Normalizer = Normalizer(), meta: Optional[dict] = None) -> Policy:
        return Policy(self.actor.copy(), norm, self.cfg.explore_sigma, meta)
