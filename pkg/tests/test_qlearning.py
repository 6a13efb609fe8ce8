import random

import numpy as np
import pytest

from gazehrl.qlearning import QTable, q_update
from oracles import value_iteration


def test_terminal_update():
    q = q_update(QTable(lr=0.1), "s", 2, 1.0, "t", True)
    assert q.get("s", 2) == pytest.approx(0.1, abs=1e-15)


def test_zero_reward_is_fixed_point():
    q = QTable()
    q.row("s")
    before = {k: list(v) for k, v in q.values.items()}
    q_update(q, "s", 0, 0.0, "s2", False)
    assert q.values == before | {"s": [0.0] * 8}


def test_non_terminal_uses_max_next():
    q = QTable(n_actions=2, lr=0.5, discount=0.9)
    q.row("b")[1] = 2.0
    q_update(q, "a", 0, 1.0, "b", False)
    assert q.get("a", 0) == pytest.approx(0.5 * (1 + 0.9 * 2.0))
    q_update(q, "c", 0, 1.0, "b", True)
    assert q.get("c", 0) == pytest.approx(0.5)


def test_two_state_chain_geometric_series():
    # state 0 loops on itself with reward 1; fixed point 1 / (1 - discount)
    q = QTable(n_actions=1, lr=0.5, discount=0.9)
    for _ in range(400):
        q_update(q, 0, 0, 1.0, 0, False)
    assert q.get(0, 0) == pytest.approx(10.0, abs=1e-6)
    # state 1 -> 0 with reward 0
    q_update(q, 1, 0, 0.0, 0, False)
    for _ in range(100):
        q_update(q, 1, 0, 0.0, 0, False)
    assert q.get(1, 0) == pytest.approx(9.0, abs=1e-6)


def chain(n):
    """Left/right walk on n states; reaching the right end pays 1 and ends."""

    def transition(s, a):
        s2 = max(0, s - 1) if a == 0 else s + 1
        if s2 == n:
            return s2, 1.0, True
        return s2, -0.01, False

    return transition


def test_ten_state_chain_matches_value_iteration():
    n, gamma = 10, 0.9
    t = chain(n)
    ref = value_iteration(n, 2, t, gamma)
    q = QTable(n_actions=2, lr=0.5, discount=gamma)
    rng = random.Random(0)
    for _ in range(100_000):
        s, a = rng.randrange(n), rng.randrange(2)
        s2, r, done = t(s, a)
        q_update(q, s, a, r, s2, done)
    got = np.array([[q.get(s, a) for a in range(2)] for s in range(n)])
    assert np.max(np.abs(got - ref)) < 1e-6


def test_greedy_ties():
    q = QTable(n_actions=3)
    assert q.greedy("x") == 0
    q.row("x")[:] = [0.0, 1.0, 1.0]
    assert q.greedy("x") == 1
    picks = {q.greedy("x", random.Random(s)) for s in range(20)}
    assert picks == {1, 2}


def test_act_is_greedy_at_zero_epsilon():
    q = QTable(n_actions=4)
    q.row("s")[3] = 1.0
    rng = random.Random(1)
    assert all(q.act("s", 0.0, rng) == 3 for _ in range(20))


def test_copy_is_independent():
    q = QTable()
    q.row("s")[0] = 1.0
    c = q.copy()
    c.row("s")[0] = 5.0
    assert q.get("s", 0) == 1.0
