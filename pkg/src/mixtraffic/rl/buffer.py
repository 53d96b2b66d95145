from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Batch(NamedTuple):
    state: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_state: np.ndarray
    done: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO store of transitions in normalised units."""

    def __init__(self, capacity: int, state_dim: int = 4, action_dim: int = 1):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.state = np.zeros((capacity, state_dim))
        self.action = np.zeros((capacity, action_dim))
        self.reward = np.zeros((capacity, 1))
        self.next_state = np.zeros((capacity, state_dim))
        self.done = np.zeros((capacity, 1))
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, state, action, reward, next_state, done) -> None:
        i = self._next
        self.state[i] = state
        self.action[i] = action
        self.reward[i] = reward
        self.next_state[i] = next_state
        self.done[i] = float(done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform sample, without replacement inside the batch."""
        if batch_size > self.size:
            raise ValueError("not enough transitions to sample a batch")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return Batch(self.state[idx], self.action[idx], self.reward[idx],
                     self.next_state[idx], self.done[idx])
