"""Shaped rewards for sub-goal agents and the exploration schedule.

All dense terms are expressed in cell units and scaled by ``tau``::

    R = bonus * [goal reached] + extrinsic * [key or door event]
        + alpha*tau*R_dir + beta*tau*R_dist - gamma*tau
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .env import ACTION_VECTORS, Action

TAU = 0.001


class DegenerateGoals(ValueError):
    """Previous and next goal coincide, so no direction is defined."""


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    tau: float = TAU
    subgoal_bonus: float = 1.0
    # game reward for collecting the key / opening a door
    extrinsic: float = 0.0
    # True reproduces g = G_prev - G_next literally (points away from the next goal)
    literal_dir_sign: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("reward weights must be non-negative")


def _goal_axis(g_prev, g_next):
    dx, dy = g_next[0] - g_prev[0], g_next[1] - g_prev[1]
    norm = math.hypot(dx, dy)
    if norm == 0:
        raise DegenerateGoals(f"previous and next goal coincide at {g_prev}")
    return dx / norm, dy / norm


def dir_reward(action_vec, g_prev, g_next, literal_sign: bool = False) -> float:
    """Dot product of the action direction with the unit goal direction.

    ``action_vec`` is a 2-vector or an :class:`Action`.  A zero vector (NoOp)
    yields 0.
    """
    if isinstance(action_vec, (int, Action)):
        action_vec = ACTION_VECTORS[Action(action_vec)]
    gx, gy = _goal_axis(g_prev, g_next)
    if literal_sign:
        gx, gy = -gx, -gy
    ax, ay = action_vec
    n = math.hypot(ax, ay)
    if n == 0:
        return 0.0
    return (ax * gx + ay * gy) / n


def dist_reward(agent, g_prev, g_next) -> float:
    """``(sqrt(d_ap) - sqrt(d_ac)) / sqrt(d_pc)`` with Euclidean distances."""
    d_pc = math.dist(g_prev, g_next)
    if d_pc == 0:
        raise DegenerateGoals(f"previous and next goal coincide at {g_prev}")
    d_ap = math.dist(agent, g_prev)
    d_ac = math.dist(agent, g_next)
    return (math.sqrt(d_ap) - math.sqrt(d_ac)) / math.sqrt(d_pc)


def shaped_reward(reached: bool, action, agent, g_prev, g_next, cfg: RewardConfig, events=None) -> float:
    """Total reward for one transition.

    ``events`` (a :class:`~gazehrl.env.StepEvents`) only matters when
    ``cfg.extrinsic`` is non-zero.
    """
    r = cfg.subgoal_bonus if reached else 0.0
    if cfg.extrinsic and events is not None:
        r += cfg.extrinsic * (events.got_key + events.opened_door)
    if cfg.alpha:
        r += cfg.alpha * cfg.tau * dir_reward(action, g_prev, g_next, cfg.literal_dir_sign)
    if cfg.beta:
        r += cfg.beta * cfg.tau * dist_reward(agent, g_prev, g_next)
    if cfg.gamma:
        r += cfg.gamma * -cfg.tau
    return r


def epsilon(step: int, start: float = 1.0, end: float = 0.02, horizon: int = 200_000) -> float:
    """Linear exploration schedule, clamped at ``end`` after ``horizon`` steps."""
    if step < 0:
        raise ValueError("step must be non-negative")
    if horizon <= 0 or step >= horizon:
        return end
    return start + (end - start) * (step / horizon)
