"""Bundled synthetic data: planted-AOI gaze episodes and separable intent features.

Episodes replay the room-1 expert route.  At the start of every plan step
the simulated player holds still, optionally glances at a distractor, then
fixates the upcoming sub-goal and keeps looking at it while moving there.
Each AOI receives a similar number of gaze samples per episode so that all
clusters survive the saliency threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import RoomEnv, expert_rollout, load_room1, room1_goals, room1_plan
from .ingest import EpisodeLog, FrameRecord, GazeSample, StateLabel, write_episode_log
from .subgoals import cell_to_px

SAMPLE_MS = 1000.0 / 60.0
FRAME = (160, 210)
# pixel centres of attention clusters that no trajectory passes through
DISTRACTORS = ((140, 21), (152, 84), (44, 119), (100, 126))
# plan step before which each distractor is glanced at
DISTRACTOR_STEPS = (1, 4, 7, 10)
AOI_SAMPLES = 48
DISTRACTOR_SAMPLES = 30
JITTER_PX = 1.5


@dataclass(frozen=True)
class SyntheticDataset:
    logs: tuple[EpisodeLog, ...]
    aoi_centers: tuple[tuple[int, int], ...]  # 7 plan goals, then distractors
    plan: tuple[int, ...]  # in room-1 goal ids
    corrupted: int  # index of the corrupted episode


def goal_centers_px(goals) -> list[tuple[int, int]]:
    out = []
    for g in goals:
        cx, cy = g.center
        out.append((int(round(cx * 8 + 4)), int(round(cy * 14 + 7))))
    return out


def _fixation(rng, center, n, t0):
    cx, cy = center
    xs = np.clip(rng.normal(cx, JITTER_PX, n), 0, FRAME[0] - 1e-6)
    ys = np.clip(rng.normal(cy, JITTER_PX, n), 0, FRAME[1] - 1e-6)
    return [GazeSample(round(t0 + i * SAMPLE_MS, 3), float(round(x, 2)), float(round(y, 2))) for i, (x, y) in enumerate(zip(xs, ys))]


def make_episode(seed: int, episode_id: str, glitch: tuple[int, int] | None = None) -> EpisodeLog:
    """One scripted episode.

    ``glitch = (k, gid)`` corrupts the state labels: while the player pauses
    before plan step ``k``, a few frames report the agent at goal ``gid``.
    """
    rng = np.random.default_rng(seed)
    layout = load_room1()
    env, goals, plan = RoomEnv(layout), room1_goals(layout), room1_plan()
    states, actions, marks = expert_rollout(env, goals, plan)
    centers = goal_centers_px(goals)
    goal_cells = [(int(g.center[0]), int(g.center[1])) for g in goals]
    visits = {g: plan.count(g) for g in set(plan)}
    distractor_at = dict(zip(DISTRACTOR_STEPS, DISTRACTORS))

    frames: list[FrameRecord] = []
    t = 0.0
    prev_mark = 0

    def add(state_idx, action, sample, at=None):
        ax, ay = cell_to_px(at or states[state_idx].agent)
        keys = int(states[state_idx].has_key)
        frames.append(FrameRecord(len(frames), action, (sample,), StateLabel(ax, ay, 1, 0, keys)))

    for k, gid in enumerate(plan):
        gaze: list[GazeSample] = []
        if k in distractor_at:
            gaze += _fixation(rng, distractor_at[k], DISTRACTOR_SAMPLES, t)
        gaze += _fixation(rng, centers[gid], AOI_SAMPLES // visits[gid], t + len(gaze) * SAMPLE_MS)
        t += len(gaze) * SAMPLE_MS
        for j, smp in enumerate(gaze):
            bad = glitch is not None and glitch[0] == k and 10 <= j < 15
            add(prev_mark, 0, smp, goal_cells[glitch[1]] if bad else None)
        # moving: one frame per action, eyes staying on the target
        seg = range(prev_mark, marks[k])
        for i in seg:
            (smp,) = _fixation(rng, centers[gid], 1, t)
            t += SAMPLE_MS
            add(i + 1, actions[i], smp)
        prev_mark = marks[k]
    return EpisodeLog(episode_id, FRAME[0], FRAME[1], tuple(frames))


def make_dataset(seed: int = 0, n_episodes: int = 3, corrupted: int = 2, glitch=(3, 5)) -> SyntheticDataset:
    logs = tuple(
        make_episode(seed * 1000 + i, f"synthetic-{i:02d}", glitch if i == corrupted else None)
        for i in range(n_episodes)
    )
    centers = tuple(goal_centers_px(room1_goals())) + DISTRACTORS
    return SyntheticDataset(logs, centers, tuple(room1_plan()), corrupted)


def write_dataset(ds: SyntheticDataset, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for log in ds.logs:
        p = out / f"{log.episode_id}.log"
        write_episode_log(log, p)
        paths.append(p)
    return paths


def separable_features(
    n_per_class: int = 20, n_classes: int = 7, seed: int = 0, n_aois: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Intent-style feature vectors where class ``c`` dominates AOI ``c``.

    Every sample of class ``c`` has ``most_recently_looked_at = 1`` on AOI
    ``c`` only and a longer look there than anywhere else, so the classes are
    linearly separable.
    """
    rng = np.random.default_rng(seed)
    n_aois = n_aois or n_classes
    X, y = [], []
    for c in range(n_classes):
        for _ in range(n_per_class):
            f = np.zeros((n_aois, 4))
            f[:, 0] = rng.uniform(0, 200, n_aois)
            f[:, 2] = rng.integers(0, 3, n_aois)
            f[:, 3] = f[:, 0] * rng.uniform(0.3, 1.0, n_aois)
            f[c, 0] = rng.uniform(400, 800)
            f[c, 2] = max(f[c, 2], 1)
            f[c, 3] = f[c, 0] * rng.uniform(0.3, 1.0)
            f[c, 1] = 1
            X.append(f.ravel())
            y.append(c)
    return np.array(X), np.array(y)
