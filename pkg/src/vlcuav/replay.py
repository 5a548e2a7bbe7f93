"""FIFO experience replay with uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: float


class ReplayBuffer:
    """Ring buffer over preallocated float64 arrays; eviction is FIFO."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int = 2):
        if capacity < 1:
            raise InvalidParameterError("capacity must be >= 1")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.pos = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward, next_obs, done):
        action = np.asarray(action, dtype=np.float64)
        if not np.isfinite(action).all():
            raise InvalidParameterError("non-finite action pushed to replay buffer")
        if done not in (0, 1, 0.0, 1.0, True, False):
            raise InvalidParameterError("done flag must be 0 or 1")
        i = self.pos
        self.obs[i] = obs
        self.act[i] = action
        self.rew[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample with replacement; returns (obs, act, rew, next_obs, done)."""
        idx = rng.integers(0, self.size, size=batch_size)
        return (
            self.obs[idx],
            self.act[idx],
            self.rew[idx],
            self.next_obs[idx],
            self.done[idx],
        )

    def snapshot(self) -> list[Transition]:
        """Current contents, oldest first (test and debugging aid)."""
        if self.size < self.capacity:
            order = range(self.size)
        else:
            order = [(self.pos + k) % self.capacity for k in range(self.capacity)]
        return [
            Transition(
                obs=self.obs[i].copy(),
                action=self.act[i].copy(),
                reward=float(self.rew[i]),
                next_obs=self.next_obs[i].copy(),
                done=float(self.done[i]),
            )
            for i in order
        ]
