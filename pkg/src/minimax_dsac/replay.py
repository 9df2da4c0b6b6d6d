"""Fixed-capacity FIFO replay of environment transitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .critic import ADVERSARY_ACTION_DIM, OBS_DIM, PROTAGONIST_ACTION_DIM


@dataclass(frozen=True)
class Transition:
    """One interaction: (s, a, u, r, s', done), actions normalized to [-1, 1].

    done marks true termination (collision or pass); time-limit truncation
    stores done=False so bootstrapping continues through it.
    """

    s: np.ndarray
    a: np.ndarray
    u: np.ndarray
    r: float
    s2: np.ndarray
    done: bool


class ReplayBuffer:
    """Ring buffer with uniform with-replacement mini-batch sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"buffer capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._s = np.zeros((capacity, OBS_DIM))
        self._a = np.zeros((capacity, PROTAGONIST_ACTION_DIM))
        self._u = np.zeros((capacity, ADVERSARY_ACTION_DIM))
        self._r = np.zeros(capacity)
        self._s2 = np.zeros((capacity, OBS_DIM))
        self._done = np.zeros(capacity, dtype=bool)
        self._ptr = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, t: Transition) -> None:
        i = self._ptr
        self._s[i] = t.s
        self._a[i] = t.a
        self._u[i] = t.u
        self._r[i] = t.r
        self._s2[i] = t.s2
        self._done[i] = t.done
        self._ptr = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample_batch(self, n: int, rng: np.random.Generator):
        """n transitions drawn uniformly with replacement, as column arrays."""
        if self._size < n:
            raise ValueError(
                f"buffer holds {self._size} transitions, cannot sample {n} "
                "(warm-up incomplete)"
            )
        idx = rng.integers(0, self._size, size=n)
        return {
            "s": self._s[idx].copy(),
            "a": self._a[idx].copy(),
            "u": self._u[idx].copy(),
            "r": self._r[idx].copy(),
            "s2": self._s2[idx].copy(),
            "done": self._done[idx].copy(),
        }

    def transitions(self):
        """Stored transitions in insertion order (oldest first)."""
        order = (
            range(self._size)
            if self._size < self.capacity
            else [(self._ptr + k) % self.capacity for k in range(self.capacity)]
        )
        return [
            Transition(
                self._s[i].copy(), self._a[i].copy(), self._u[i].copy(),
                float(self._r[i]), self._s2[i].copy(), bool(self._done[i]),
            )
            for i in order
        ]
