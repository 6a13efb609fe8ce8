"""Gaze-feature intention prediction.

Four features per AOI, in this order: total look duration (ms), most
recently looked at (0/1), glance count, first glance duration (ms).  The
classifier is a one-vs-rest linear max-margin model trained by Pegasos-style
stochastic subgradient descent on standardised features.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .events import AoiHit, aoi_hits, detect_events
from .ingest import EpisodeLog, frame_times
from .subgoals import SubGoalSet, goal_at

N_FEATURES = 4
DEFAULT_REG = 0.01
DEFAULT_EPOCHS = 50


class SingleClass(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


def extract_features(hits: Sequence[AoiHit], n_aois: int, window_end: float | None = None, window_start: float | None = None) -> np.ndarray:
    """Feature vector of length ``4 * n_aois`` from time-ordered AOI hits.

    Hits are clipped to ``[window_start, window_end]`` when given.  A glance
    is a maximal run of consecutive hits on the same AOI; its duration is the
    sum of those hits' durations.
    """
    f = np.zeros((n_aois, N_FEATURES))
    runs: list[list] = []  # [aoi, duration]
    for h in hits:
        t0 = h.t_start if window_start is None else max(h.t_start, window_start)
        t1 = h.t_end if window_end is None else min(h.t_end, window_end)
        if t1 < t0 or not 0 <= h.aoi_id < n_aois:
            continue
        d = t1 - t0
        if runs and runs[-1][0] == h.aoi_id:
            runs[-1][1] += d
        else:
            runs.append([h.aoi_id, d])
    for aoi, d in runs:
        if f[aoi, 2] == 0:
            f[aoi, 3] = d
        f[aoi, 0] += d
        f[aoi, 2] += 1
    if runs:
        f[runs[-1][0], 1] = 1
    return f.ravel()


@dataclass(frozen=True)
class IntentSample:
    features: np.ndarray
    label: int
    episode_id: str = ""


def reach_times(log: EpisodeLog, goals: SubGoalSet, plan: Sequence[int]) -> list[float]:
    """Time at which the agent first enters each plan step's box, in plan order."""
    times = frame_times(log)
    out: list[float] = []
    k = 0
    for f, t in zip(log.frames, times):
        if k == len(plan):
            break
        if goal_at(goals, f.state.agent_x, f.state.agent_y) == plan[k]:
            out.append(t)
            k += 1
    return out


def build_samples(log: EpisodeLog, goals: SubGoalSet, plan: Sequence[int], **event_kw) -> list[IntentSample]:
    """One sample per reached plan step.

    The window runs from the previous step's reach time (episode start for
    step 0) to this step's reach time; the label is this step's goal id.
    """
    samples = log.gaze_samples()
    if len(samples) < 2:
        return []
    hits = aoi_hits(detect_events(samples, **event_kw), goals)
    reached = reach_times(log, goals, plan)
    out = []
    start = samples[0].t
    for k, t_end in enumerate(reached):
        window = [h for h in hits if h.t_start >= start and h.t_start < t_end]
        out.append(IntentSample(extract_features(window, len(goals), t_end, start), plan[k], log.episode_id))
        start = t_end
    return out


@dataclass(frozen=True)
class LinearIntentModel:
    classes: np.ndarray  # (C,) sorted ids
    weights: np.ndarray  # (C, D)
    bias: np.ndarray  # (C,)
    mean: np.ndarray  # (D,)
    scale: np.ndarray  # (D,)

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]

    def scores(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.shape[-1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {x.shape[-1]}")
        z = (x - self.mean) / self.scale
        return z @ self.weights.T + self.bias


def _as_arrays(samples, labels=None):
    if labels is None:
        X = np.array([s.features for s in samples], dtype=float)
        y = np.array([s.label for s in samples], dtype=int)
    else:
        X, y = np.asarray(samples, dtype=float), np.asarray(labels, dtype=int)
    return X, y


def train(samples, labels=None, reg: float = DEFAULT_REG, epochs: int = DEFAULT_EPOCHS, seed: int = 0) -> LinearIntentModel:
    """Fit one binary hinge-loss classifier per class.

    ``samples`` is a list of :class:`IntentSample`, or a feature matrix with
    ``labels`` given separately.  The bias is an unregularised extra weight.
    """
    if reg <= 0:
        raise ValueError("reg must be positive")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    X, y = _as_arrays(samples, labels)
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClass("training labels are all identical")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    n, d = Z.shape
    rng = np.random.default_rng(seed)
    W = np.zeros((len(classes), d))
    b = np.zeros(len(classes))
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (reg * (t + 1 / reg))  # offset keeps early steps bounded
            yi = np.where(classes == y[i], 1.0, -1.0)
            margin = yi * (W @ Z[i] + b)
            active = margin < 1
            W *= 1 - eta * reg
            W[active] += eta * yi[active, None] * Z[i]
            b[active] += eta * yi[active]
    return LinearIntentModel(classes, W, b, mean, scale)


def predict(model: LinearIntentModel, features) -> int:
    """Class with the highest score; ties go to the smaller id."""
    s = model.scores(features)
    return int(model.classes[int(np.argmax(s))])


def predict_many(model: LinearIntentModel, X) -> np.ndarray:
    return model.classes[np.argmax(model.scores(X), axis=1)]


def stratified_folds(labels, k: int, seed: int = 0) -> list[np.ndarray]:
    """Test-index folds: each class is shuffled and dealt round-robin.

    The dealing position carries over between classes so fold sizes differ
    by at most one.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(y) < k:
        raise TooFewSamples(f"{len(y)} samples for {k} folds")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for c in np.unique(y):
        for i in rng.permutation(np.flatnonzero(y == c)):
            folds[pos % k].append(int(i))
            pos += 1
    return [np.array(sorted(f), dtype=int) for f in folds]


@dataclass(frozen=True)
class CVResult:
    mean: float
    folds: tuple[float, ...]


def cross_validate(samples, labels=None, k: int = 10, seed: int = 0, reg: float = DEFAULT_REG, epochs: int = DEFAULT_EPOCHS) -> CVResult:
    X, y = _as_arrays(samples, labels)
    accs = []
    for test in stratified_folds(y, k, seed):
        mask = np.ones(len(y), dtype=bool)
        mask[test] = False
        model = train(X[mask], y[mask], reg=reg, epochs=epochs, seed=seed)
        accs.append(float(np.mean(predict_many(model, X[test]) == y[test])))
    return CVResult(float(np.mean(accs)), tuple(accs))


# --- I/O ----------------------------------------------------------------------


def _row(v) -> str:
    return " ".join(repr(float(x)) for x in v)


def model_to_text(model: LinearIntentModel) -> str:
    lines = [
        "classes " + " ".join(str(int(c)) for c in model.classes),
        "mean " + _row(model.mean),
        "scale " + _row(model.scale),
    ]
    for c, w, b in zip(model.classes, model.weights, model.bias):
        lines.append(f"w{int(c)} {_row(w)} {float(b)!r}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> LinearIntentModel:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    classes = np.array([int(v) for v in rows[0][1:]])
    mean = np.array([float(v) for v in rows[1][1:]])
    scale = np.array([float(v) for v in rows[2][1:]])
    wb = np.array([[float(v) for v in r[1:]] for r in rows[3:]])
    return LinearIntentModel(classes, wb[:, :-1], wb[:, -1], mean, scale)


def write_model(model: LinearIntentModel, path) -> None:
    Path(path).write_text(model_to_text(model))


def read_model(path) -> LinearIntentModel:
    return model_from_text(Path(path).read_text())


def samples_to_csv(samples: Sequence[IntentSample]) -> str:
    if not samples:
        return "episode,label\n"
    n_aois = len(samples[0].features) // N_FEATURES
    names = [f"aoi{a}_{f}" for a in range(n_aois) for f in ("duration", "recent", "glances", "first")]
    lines = ["episode,label," + ",".join(names)]
    for s in samples:
        lines.append(f"{s.episode_id},{s.label}," + ",".join(f"{v:g}" for v in s.features))
    return "\n".join(lines) + "\n"


def samples_from_csv(text: str) -> list[IntentSample]:
    rows = [line.split(",") for line in text.splitlines()[1:] if line.strip()]
    return [IntentSample(np.array([float(v) for v in r[2:]]), int(r[1]), r[0]) for r in rows]
