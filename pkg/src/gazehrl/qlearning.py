"""Tabular Q-learning with epsilon-greedy action selection."""
from __future__ import annotations

import random
from typing import Hashable


class QTable:
    """Sparse action-value table; unseen states read as all zeros."""

    def __init__(self, n_actions: int = 8, lr: float = 0.1, discount: float = 0.99):
        self.n_actions = n_actions
        self.lr = lr
        self.discount = discount
        self.values: dict[Hashable, list[float]] = {}

    def __len__(self):
        return len(self.values)

    def row(self, s) -> list[float]:
        v = self.values.get(s)
        if v is None:
            v = self.values[s] = [0.0] * self.n_actions
        return v

    def get(self, s, a) -> float:
        v = self.values.get(s)
        return 0.0 if v is None else v[a]

    def max(self, s) -> float:
        v = self.values.get(s)
        return 0.0 if v is None else max(v)

    def greedy(self, s, rng: random.Random | None = None) -> int:
        """Argmax action; ties broken uniformly when ``rng`` is given, else by lowest id."""
        v = self.values.get(s)
        if v is None:
            return rng.randrange(self.n_actions) if rng else 0
        best = max(v)
        if rng is None:
            return v.index(best)
        ties = [a for a, q in enumerate(v) if q == best]
        return ties[0] if len(ties) == 1 else rng.choice(ties)

    def act(self, s, eps: float, rng: random.Random) -> int:
        if rng.random() < eps:
            return rng.randrange(self.n_actions)
        return self.greedy(s, rng)

    def copy(self) -> "QTable":
        q = QTable(self.n_actions, self.lr, self.discount)
        q.values = {k: list(v) for k, v in self.values.items()}
        return q


def q_update(table: QTable, s, a: int, r: float, s_next, done: bool) -> QTable:
    """One-step Q-learning backup, in place; returns ``table`` for chaining."""
    target = r if done else r + table.discount * table.max(s_next)
    row = table.row(s)
    row[a] += table.lr * (target - row[a])
    return table
