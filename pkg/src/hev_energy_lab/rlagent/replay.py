"""Fixed-capacity FIFO experience store with uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hev_energy_lab.errors import DimensionError, ModelStateError


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(frozen=True, eq=False)
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return self.rewards.shape[0]


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int, action_dim: int = 1) -> None:
        if capacity < 1:
            raise DimensionError("replay capacity must be positive")
        self.capacity = capacity
        self.state_dim = state_dim
        self.action_dim = action_dim
        self._allocate(min(capacity, 4096))
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def _allocate(self, rows: int) -> None:
        """Grow storage geometrically up to the capacity."""

        old = getattr(self, "_states", None)
        states = np.zeros((rows, self.state_dim))
        actions = np.zeros((rows, self.action_dim))
        rewards = np.zeros(rows)
        next_states = np.zeros((rows, self.state_dim))
        dones = np.zeros(rows)
        if old is not None:
            used = old.shape[0]
            states[:used] = self._states
            actions[:used] = self._actions
            rewards[:used] = self._rewards
            next_states[:used] = self._next_states
            dones[:used] = self._dones
        self._states, self._actions, self._rewards = states, actions, rewards
        self._next_states, self._dones = next_states, dones

    def push(self, item: Experience) -> None:
        state = np.asarray(item.state, dtype=np.float64).ravel()
        action = np.asarray(item.action, dtype=np.float64).ravel()
        if state.size != self.state_dim or action.size != self.action_dim:
            raise DimensionError("experience shape does not match the buffer")
        slot = self._cursor
        if slot >= self._states.shape[0]:
            self._allocate(min(2 * self._states.shape[0], self.capacity))
        self._states[slot] = state
        self._actions[slot] = action
        self._rewards[slot] = item.reward
        self._next_states[slot] = np.asarray(item.next_state, dtype=np.float64).ravel()
        self._dones[slot] = float(item.done)
        self._cursor = (slot + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if self._size == 0:
            raise ModelStateError("cannot sample from an empty replay buffer")
        index = rng.integers(0, self._size, size=n)
        return Batch(
            states=self._states[index],
            actions=self._actions[index],
            rewards=self._rewards[index],
            next_states=self._next_states[index],
            dones=self._dones[index],
        )

    def contents(self) -> list[Experience]:
        """Stored experiences from oldest to newest."""

        start = self._cursor if self._size == self.capacity else 0
        order = [(start + k) % self.capacity for k in range(self._size)]
        return [
            Experience(self._states[k].copy(), self._actions[k].copy(), float(self._rewards[k]), self._next_states[k].copy(), bool(self._dones[k]))
            for k in order
        ]
