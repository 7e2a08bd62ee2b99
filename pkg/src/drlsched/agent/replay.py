from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if np.any(a < -1e-12) or abs(a.sum() - 1.0) > 1e-6:
            raise ContractViolation("transition action is not on the probability simplex")


class NotReady(Exception):
    """The buffer holds fewer transitions than the requested batch."""


class ReplayBuffer:
    """Fixed-capacity ring of transitions stored column-wise."""

    def __init__(self, capacity, state_dim, action_dim, rng=None):
        if capacity < 1:
            raise ContractViolation("replay capacity must be >= 1")
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.rng = rng if rng is not None else np.random.default_rng()
        self._pos = 0
        self.size = 0

    def __len__(self):
        return self.size

    def store(self, t):
        i = self._pos
        self.s[i] = t.s
        self.a[i] = t.a
        self.r[i] = t.r
        self.s_next[i] = t.s_next
        self._pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def store_many(self, s, a, r, s_next):
        """Insert a batch of rows; skips per-row simplex validation."""
        for row in range(len(r)):
            i = self._pos
            self.s[i] = s[row]
            self.a[i] = a[row]
            self.r[i] = r[row]
            self.s_next[i] = s_next[row]
            self._pos = (i + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size):
        if self.size < batch_size:
            raise NotReady(f"buffer holds {self.size} < {batch_size} transitions")
        return self.rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size):
        idx = self.sample_indices(batch_size)
        return self.s[idx], self.a[idx], self.r[idx], self.s_next[idx]

    def state_dict(self):
        return {
            "s": self.s.copy(), "a": self.a.copy(), "r": self.r.copy(), "s_next": self.s_next.copy(),
            "pos": self._pos, "size": self.size,
        }


def store(buffer, t):
    buffer.store(t)


def sample(buffer, batch_size, rng=None):
    if rng is not None:
        buffer.rng = rng
    return buffer.sample(batch_size)
