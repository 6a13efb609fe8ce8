"""Fixation/saccade segmentation (I-VT) and area-of-interest hit testing."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .ingest import GazeSample

FIXATION = "Fixation"
SACCADE = "Saccade"

VELOCITY_THRESHOLD = 30.0  # deg/s
MIN_FIXATION_MS = 100.0
PX_PER_DEGREE = 10.0


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class GazeEvent:
    kind: str
    t_start: float
    t_end: float
    centroid_x: float
    centroid_y: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class AoiHit:
    aoi_id: int
    t_start: float
    t_end: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def sample_velocities(samples: Sequence[GazeSample], px_per_degree: float) -> list[float]:
    """Angular velocity (deg/s) of each consecutive sample pair."""
    out = []
    for a, b in zip(samples, samples[1:]):
        d = math.hypot(b.x - a.x, b.y - a.y)
        dt = b.t - a.t
        if dt <= 0:
            out.append(0.0 if d == 0 else math.inf)
        else:
            out.append(d * 1000.0 / (px_per_degree * dt))
    return out


def _make_event(kind, samples, i, j):
    pts = samples[i : j + 1]
    cx = sum(p.x for p in pts) / len(pts)
    cy = sum(p.y for p in pts) / len(pts)
    return GazeEvent(kind, samples[i].t, samples[j].t, cx, cy)


def detect_events(
    samples: Sequence[GazeSample],
    velocity_threshold: float = VELOCITY_THRESHOLD,
    px_per_degree: float = PX_PER_DEGREE,
    min_fixation_ms: float = MIN_FIXATION_MS,
) -> list[GazeEvent]:
    """Velocity-threshold identification.

    Each inter-sample interval is labelled fixation (velocity below the
    threshold) or saccade.  Runs of equal labels become events sharing their
    boundary samples, so the events tile ``[t_first, t_last]``.  Fixations
    shorter than ``min_fixation_ms`` are relabelled as saccade and absorbed by
    their neighbours, unless there is no saccade to absorb them.
    """
    if px_per_degree <= 0 or velocity_threshold <= 0:
        raise ValueError("px_per_degree and velocity_threshold must be positive")
    if len(samples) < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {len(samples)}")
    vel = sample_velocities(samples, px_per_degree)
    labels = [FIXATION if v < velocity_threshold else SACCADE for v in vel]

    # runs of intervals -> (kind, first sample, last sample)
    runs = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            runs.append([labels[start], start, i])
            start = i

    if any(k == SACCADE for k, _, _ in runs):
        for r in runs:
            if r[0] == FIXATION and samples[r[2]].t - samples[r[1]].t < min_fixation_ms:
                r[0] = SACCADE
        merged = []
        for r in runs:
            if merged and merged[-1][0] == r[0]:
                merged[-1][2] = r[2]
            else:
                merged.append(list(r))
        runs = merged

    return [_make_event(kind, samples, i, j) for kind, i, j in runs]


def _box_contains(box, x, y) -> bool:
    return box.x <= x < box.x + box.w and box.y <= y < box.y + box.h


def aoi_hits(events: Sequence[GazeEvent], aois) -> list[AoiHit]:
    """One hit per fixation whose centroid lies inside an AOI box.

    ``aois`` is a :class:`~gazehrl.subgoals.SubGoalSet` or a list of boxes
    (ids are list positions).  Overlaps go to the highest-scoring AOI, then
    the lowest id.  Zero-length fixations are ignored.
    """
    boxes = list(getattr(aois, "boxes", aois))
    hits = []
    for ev in events:
        if ev.kind != FIXATION or ev.t_end <= ev.t_start:
            continue
        inside = [(i, b) for i, b in enumerate(boxes) if _box_contains(b, ev.centroid_x, ev.centroid_y)]
        if not inside:
            continue
        best = min(inside, key=lambda ib: (-ib[1].score, ib[0]))[0]
        hits.append(AoiHit(best, ev.t_start, ev.t_end))
    return hits


def events_to_csv(events: Sequence[GazeEvent]) -> str:
    lines = ["kind,t_start,t_end,cx,cy"]
    for e in events:
        lines.append(f"{e.kind},{e.t_start:g},{e.t_end:g},{e.centroid_x:.3f},{e.centroid_y:.3f}")
    return "\n".join(lines) + "\n"
