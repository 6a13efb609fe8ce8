"""Hierarchical training over an ordered sub-goal plan.

A DAgger-trained meta-controller picks the next sub-goal, one tabular
Q-learner per plan step tries to reach it, and a wrong meta choice ends the
episode.  Flat single-agent baselines see the plan index as part of their
state instead.
"""
from __future__ import annotations

import random
from collections import Counter, deque
from dataclasses import dataclass, field

from .env import CellGoal, EnvState, RoomEnv, subgoal_reached
from .qlearning import QTable, q_update
from .rewards import RewardConfig, epsilon, shaped_reward

# flat agents get the plan step as a state feature and the game reward, not the
# sub-goal pseudo reward; the dense terms come on top of the step penalty
VARIANTS = {
    "fullmodel": RewardConfig(),
    "singlegoal": RewardConfig(gamma=1.0, subgoal_bonus=0.0, extrinsic=1.0),
    "singledist": RewardConfig(beta=1.0, gamma=1.0, subgoal_bonus=0.0, extrinsic=1.0),
    "singledir": RewardConfig(alpha=1.0, gamma=1.0, subgoal_bonus=0.0, extrinsic=1.0),
}
STEP_CAP = 500
WINDOW = 100
LEARNED_THRESHOLD = 0.9


class UnknownVariant(ValueError):
    pass


def trailing_performance(outcomes, window: int = WINDOW) -> list[float]:
    """Success ratio over the last ``window`` trials at every index.

    Before ``window`` trials exist the ratio is taken over what is available.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    out, buf, hits = [], deque(), 0
    for o in outcomes:
        buf.append(bool(o))
        hits += bool(o)
        if len(buf) > window:
            hits -= buf.popleft()
        out.append(hits / len(buf))
    return out


@dataclass
class TrainStats:
    """Learning curve of one run.

    ``learned_at[k]`` is the total env-step count at which plan step ``k``
    first had more than 90% successes over a full window of attempts.
    """

    n_goals: int
    learned_at: list[int | None] = field(default_factory=list)
    trailing: list[tuple[int, int, float]] = field(default_factory=list)
    total_steps: int = 0
    episodes: int = 0
    status: str = "ok"
    variant: str = ""

    def __post_init__(self):
        if not self.learned_at:
            self.learned_at = [None] * self.n_goals

    def peak_trailing(self, k: int, window: int = WINDOW, full_window: bool = True) -> float:
        """Highest trailing performance of plan step ``k``.

        With ``full_window`` only ratios over a full window of attempts count.
        """
        n, best = 0, 0.0
        for _, j, r in self.trailing:
            if j != k:
                continue
            n += 1
            if n >= window or not full_window:
                best = max(best, r)
        return best

    @property
    def progress(self) -> int:
        """Number of leading plan steps learned."""
        n = 0
        for v in self.learned_at:
            if v is None:
                break
            n += 1
        return n


class _Tracker:
    """Per-plan-step attempt outcomes with learned-at bookkeeping."""

    def __init__(self, stats: TrainStats, window: int):
        self.stats = stats
        self.window = window
        self.buffers = [deque(maxlen=window) for _ in range(stats.n_goals)]

    def record(self, k: int, success: bool, step: int) -> None:
        buf = self.buffers[k]
        buf.append(success)
        ratio = sum(buf) / len(buf)
        self.stats.trailing.append((step, k, ratio))
        if (
            self.stats.learned_at[k] is None
            and len(buf) == self.window
            and ratio > LEARNED_THRESHOLD
        ):
            self.stats.learned_at[k] = step

    def learned(self, k: int) -> bool:
        return self.stats.learned_at[k] is not None


def goal_anchors(env: RoomEnv, goals: list[CellGoal], plan: list[int]):
    """(G_prev, G_next) centre pairs for every plan step; spawn precedes step 0."""
    prev = tuple(float(v) for v in env.layout.spawn)
    out = []
    for gid in plan:
        nxt = goals[gid].center
        out.append((prev, nxt))
        prev = nxt
    return out


class MetaPolicy:
    """Majority-label lookup from meta state ``(last_step, has_key)`` to goal id.

    Unseen states fall back to the most frequent label in the dataset.
    """

    def __init__(self):
        self.dataset: list[tuple[tuple[int, bool], int]] = []
        self.table: dict[tuple[int, bool], int] = {}
        self.default: int | None = None

    def aggregate(self, state, label: int) -> None:
        self.dataset.append((tuple(state), int(label)))

    def fit(self) -> "MetaPolicy":
        by_state: dict = {}
        for s, y in self.dataset:
            by_state.setdefault(s, Counter())[y] += 1
        self.table = {s: min(c, key=lambda y: (-c[y], y)) for s, c in by_state.items()}
        if self.dataset:
            total = Counter(y for _, y in self.dataset)
            self.default = min(total, key=lambda y: (-total[y], y))
        return self

    @property
    def trained(self) -> bool:
        return self.default is not None

    def predict(self, state) -> int | None:
        return self.table.get(tuple(state), self.default)


class HierarchicalTrainer:
    """DAgger-style training loop with one Q-table per plan step.

    Each agent explores with its own linear schedule (counted in its own
    steps).  Once a step is learned its agent acts greedily and stops
    updating, so later agents see a fixed start distribution.
    """

    def __init__(
        self,
        env: RoomEnv,
        goals: list[CellGoal],
        plan: list[int],
        cfg: RewardConfig = RewardConfig(),
        seed: int = 0,
        eps_horizon: int = 2_000,
        lr: float = 0.1,
        discount: float = 0.99,
        step_cap: int = STEP_CAP,
        window: int = WINDOW,
        agents: list[QTable] | None = None,
        meta: MetaPolicy | None = None,
        freeze_learned: bool = True,
    ):
        if not plan:
            raise ValueError("plan must be non-empty")
        self.env, self.goals, self.plan, self.cfg = env, goals, list(plan), cfg
        self.rng = random.Random(seed)
        self.eps_horizon = eps_horizon
        self.step_cap = step_cap
        self.agents = agents or [QTable(lr=lr, discount=discount) for _ in plan]
        self.agent_steps = [0] * len(plan)
        self.meta = meta or MetaPolicy()
        self.anchors = goal_anchors(env, goals, plan)
        self.stats = TrainStats(len(plan), variant="fullmodel")
        self.tracker = _Tracker(self.stats, window)
        self.frozen = [False] * len(plan)
        self.freeze_learned = freeze_learned
        self.wrong_choices = 0

    def freeze(self, k: int) -> None:
        self.frozen[k] = True

    def _attempt(self, state: EnvState, k: int, budget: int) -> tuple[EnvState, bool]:
        env, agent, goal = self.env, self.agents[k], self.goals[self.plan[k]]
        g_prev, g_next = self.anchors[k]
        learn = not self.frozen[k]
        for _ in range(self.step_cap):
            if self.stats.total_steps >= budget:
                return state, False
            s = state.key
            if learn:
                a = agent.act(s, epsilon(self.agent_steps[k], horizon=self.eps_horizon), self.rng)
            else:
                a = agent.greedy(s)
            nxt, ev = env.step(state, a)
            self.stats.total_steps += 1
            reached = subgoal_reached(nxt, goal, ev)
            if learn:
                self.agent_steps[k] += 1
                r = shaped_reward(reached, a, nxt.agent, g_prev, g_next, self.cfg, ev)
                q_update(agent, s, a, r, nxt.key, reached or nxt.terminal)
            state = nxt
            if reached:
                return state, True
            if nxt.terminal:
                return state, False
        return state, False

    def episode(self, budget: int, last_step: int | None = None, use_expert: bool = False) -> int:
        """Run one episode from spawn; returns the number of plan steps completed."""
        last = len(self.plan) - 1 if last_step is None else last_step
        state = self.env.reset()
        self.stats.episodes += 1
        done = 0
        for k in range(last + 1):
            meta_state = (k - 1, state.has_key)
            expert = self.plan[k]
            choice = expert if use_expert or not self.meta.trained else self.meta.predict(meta_state)
            self.meta.aggregate(meta_state, expert)
            if choice != expert:
                self.wrong_choices += 1
                break
            state, ok = self._attempt(state, k, budget)
            if self.stats.total_steps >= budget and not ok:
                break
            self.tracker.record(k, ok, self.stats.total_steps)
            if self.freeze_learned and self.tracker.learned(k) and not self.frozen[k]:
                self.freeze(k)
            if not ok:
                break
            done += 1
        self.meta.fit()
        return done

    def train(self, budget: int, last_step: int | None = None) -> TrainStats:
        last = len(self.plan) - 1 if last_step is None else last_step
        while self.stats.total_steps < budget and not self.tracker.learned(last):
            self.episode(budget, last)
        if not self.tracker.learned(last):
            self.stats.status = "budget_exhausted"
        return self.stats


def train_low_level(
    env: RoomEnv,
    k: int,
    plan: list[int],
    goals: list[CellGoal],
    cfg: RewardConfig = RewardConfig(),
    budget: int = 100_000,
    seed: int = 0,
    agents: list[QTable] | None = None,
    **kwargs,
) -> tuple[QTable, TrainStats]:
    """Train the agent for plan step ``k`` with steps ``< k`` already learned.

    ``agents[:k]`` are executed greedily to reach the start of step ``k``;
    their env steps count against ``budget``.
    """
    trainer = HierarchicalTrainer(env, goals, plan, cfg, seed=seed, agents=agents, **kwargs)
    for j in range(k):
        trainer.freeze(j)
    if budget <= 0:
        trainer.stats.status = "budget_exhausted"
        return trainer.agents[k], TrainStats(len(plan), status="budget_exhausted", variant="fullmodel")
    stats = trainer.train(budget, last_step=k)
    return trainer.agents[k], stats


def meta_dagger(
    env: RoomEnv,
    plan: list[int],
    goals: list[CellGoal],
    agents: list[QTable],
    iterations: int = 3,
    seed: int = 0,
    meta: MetaPolicy | None = None,
) -> MetaPolicy:
    """DAgger over the meta-controller with frozen low-level agents.

    Iteration 0 rolls out the expert (the plan itself); later iterations roll
    out the current classifier.  Every decision point is labelled by the
    expert and aggregated, and the classifier is refit after each rollout.
    """
    meta = meta or MetaPolicy()
    for it in range(iterations):
        trainer = HierarchicalTrainer(env, goals, plan, seed=seed + it, agents=agents, meta=meta)
        trainer.frozen = [True] * len(plan)
        trainer.episode(budget=10**9, use_expert=(it == 0 and not meta.trained))
    return meta


def rollout_plan(env: RoomEnv, plan, goals, agents, meta: MetaPolicy, step_cap: int = STEP_CAP):
    """Greedy rollout driven by ``meta``; returns the sequence of goal ids reached."""
    state = env.reset()
    reached: list[int] = []
    for k in range(len(plan)):
        choice = meta.predict((k - 1, state.has_key))
        if choice is None or choice != plan[k]:
            break
        goal = goals[choice]
        ok = False
        for _ in range(step_cap):
            state, ev = env.step(state, agents[k].greedy(state.key))
            if subgoal_reached(state, goal, ev):
                ok = True
                break
            if state.terminal:
                break
        if not ok:
            break
        reached.append(choice)
    return reached


def run_single_agent(
    env: RoomEnv,
    goals: list[CellGoal],
    plan: list[int],
    cfg: RewardConfig,
    budget: int,
    seed: int = 0,
    eps_horizon: int = 200_000,
    lr: float = 0.1,
    discount: float = 0.99,
    step_cap: int = STEP_CAP,
    window: int = WINDOW,
) -> tuple[QTable, TrainStats]:
    """Flat agent whose state is ``(x, y, has_key, skull_phase, plan_step)``."""
    rng = random.Random(seed)
    q = QTable(lr=lr, discount=discount)
    stats = TrainStats(len(plan))
    tracker = _Tracker(stats, window)
    anchors = goal_anchors(env, goals, plan)
    n = len(plan)
    while stats.total_steps < budget:
        state = env.reset()
        stats.episodes += 1
        k, used = 0, 0
        while stats.total_steps < budget:
            s = state.key + (k,)
            a = q.act(s, epsilon(stats.total_steps, horizon=eps_horizon), rng)
            nxt, ev = env.step(state, a)
            stats.total_steps += 1
            used += 1
            reached = subgoal_reached(nxt, goals[plan[k]], ev)
            g_prev, g_next = anchors[k]
            r = shaped_reward(reached, a, nxt.agent, g_prev, g_next, cfg, ev)
            k_next = k + 1 if reached else k
            done = nxt.terminal or k_next == n
            q_update(q, s, a, r, nxt.key + (min(k_next, n - 1),), done)
            state = nxt
            if reached:
                tracker.record(k, True, stats.total_steps)
                k, used = k_next, 0
                if k == n:
                    break
            if nxt.terminal or used >= step_cap:
                tracker.record(k, False, stats.total_steps)
                break
    if stats.learned_at[-1] is None:
        stats.status = "budget_exhausted"
    return q, stats


def run_experiment(
    variant: str,
    env: RoomEnv,
    goals: list[CellGoal],
    plan: list[int],
    budget: int,
    seed: int = 0,
    cfg: RewardConfig | None = None,
    **kwargs,
) -> TrainStats:
    """Train one of the named variants under an env-step budget.

    ``fullmodel`` is the hierarchical model without dense rewards; the
    ``single*`` variants are flat agents with the step, distance or direction
    term switched on.  ``cfg`` overrides the variant's reward weights.
    """
    if variant not in VARIANTS:
        raise UnknownVariant(variant)
    if budget <= 0:
        raise ValueError("budget must be positive")
    cfg = cfg or VARIANTS[variant]
    if variant == "fullmodel":
        trainer = HierarchicalTrainer(env, goals, plan, cfg, seed=seed, **kwargs)
        stats = trainer.train(budget)
    else:
        _, stats = run_single_agent(env, goals, plan, cfg, budget, seed=seed, **kwargs)
    stats.variant = variant
    return stats
