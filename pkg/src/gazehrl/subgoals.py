"""Sub-goal boxes from thresholded saliency, and the visitation plan.

Boxes are integer pixel rectangles ``[x, x+w) x [y, y+h)``.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .env import CellGoal
from .ingest import NATIVE_DIMS, EpisodeLog

DEFAULT_IOU = 0.3
AGENT_BOX = (8, 20)
CELL_PX = (8, 14)


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class BoxProposal:
    x: int
    y: int
    w: int
    h: int
    score: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box width and height must be positive")

    @property
    def x1(self) -> int:
        return self.x + self.w

    @property
    def y1(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px < self.x1 and self.y <= py < self.y1


@dataclass(frozen=True)
class SubGoalSet:
    """Boxes whose list position is their id."""

    boxes: tuple[BoxProposal, ...]

    def __len__(self) -> int:
        return len(self.boxes)

    def __getitem__(self, i: int) -> BoxProposal:
        return self.boxes[i]

    def __iter__(self):
        return iter(self.boxes)


@dataclass(frozen=True)
class OrderedPlan:
    steps: tuple[int, ...]
    unique_goals: tuple[int, ...]


def propose(mask, agent_box=AGENT_BOX, frame=NATIVE_DIMS) -> list[BoxProposal]:
    """One agent-sized box centred on each mask cell, clipped to the frame."""
    w, h = agent_box
    if w <= 0 or h <= 0:
        raise ValueError("agent box dims must be positive")
    fw, fh = frame
    out = []
    for x, y, v in mask:
        x0, y0 = int(x) - w // 2, int(y) - h // 2
        cx0, cy0 = max(0, x0), max(0, y0)
        cx1, cy1 = min(fw, x0 + w), min(fh, y0 + h)
        if cx1 > cx0 and cy1 > cy0:
            out.append(BoxProposal(cx0, cy0, cx1 - cx0, cy1 - cy0, float(v)))
    return out


def intersection(a: BoxProposal, b: BoxProposal) -> int:
    iw = min(a.x1, b.x1) - max(a.x, b.x)
    ih = min(a.y1, b.y1) - max(a.y, b.y)
    return iw * ih if iw > 0 and ih > 0 else 0


def iou(a: BoxProposal, b: BoxProposal) -> float:
    inter = intersection(a, b)
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def _order_key(b: BoxProposal):
    return (-b.score, b.y, b.x, b.h, b.w)


def hull(a: BoxProposal, b: BoxProposal) -> BoxProposal:
    x0, y0 = min(a.x, b.x), min(a.y, b.y)
    x1, y1 = max(a.x1, b.x1), max(a.y1, b.y1)
    return BoxProposal(x0, y0, x1 - x0, y1 - y0, max(a.score, b.score))


def merge_overlapping(boxes: Iterable[BoxProposal]) -> list[BoxProposal]:
    """Replace overlapping pairs by their hull until all boxes are disjoint.

    Each pass folds every box into the first (in score order) kept box it
    overlaps; passes repeat until nothing changes.
    """
    cur = sorted(boxes, key=_order_key)
    changed = True
    while changed:
        changed = False
        out: list[BoxProposal] = []
        for b in cur:
            for i, k in enumerate(out):
                if intersection(k, b):
                    out[i] = hull(k, b)
                    changed = True
                    break
            else:
                out.append(b)
        cur = sorted(out, key=_order_key)
    return cur


def nms_merge(proposals: Sequence[BoxProposal], iou_threshold: float = DEFAULT_IOU) -> list[BoxProposal]:
    """Greedy NMS (higher score first, ties by smaller ``(y, x)``), then hull merge."""
    if not 0 < iou_threshold < 1:
        raise ValueError("iou_threshold must lie in (0, 1)")
    kept: list[BoxProposal] = []
    for b in sorted(proposals, key=_order_key):
        if all(iou(k, b) <= iou_threshold for k in kept):
            kept.append(b)
    return merge_overlapping(kept)


def merge_across_episodes(per_episode: Sequence[SubGoalSet], iou_threshold: float = DEFAULT_IOU) -> SubGoalSet:
    """Pool every episode's boxes and reduce once more; ids follow descending score."""
    pooled = [b for s in per_episode for b in s.boxes]
    return SubGoalSet(tuple(sorted(nms_merge(pooled, iou_threshold), key=_order_key)))


def extract_subgoals(mask, agent_box=AGENT_BOX, frame=NATIVE_DIMS, iou_threshold: float = DEFAULT_IOU) -> SubGoalSet:
    """Per-episode proposals: mask -> boxes -> NMS with merge."""
    return SubGoalSet(tuple(nms_merge(propose(mask, agent_box, frame), iou_threshold)))


def goal_at(goals: SubGoalSet, px: float, py: float) -> int | None:
    for i, b in enumerate(goals.boxes):
        if b.contains(px, py):
            return i
    return None


def match_trajectory(log: EpisodeLog, goals: SubGoalSet) -> list[int]:
    """Ids of the boxes the agent centre enters, in order, without repeats in a row."""
    seq: list[int] = []
    for f in log.frames:
        g = goal_at(goals, f.state.agent_x, f.state.agent_y)
        if g is not None and (not seq or seq[-1] != g):
            seq.append(g)
    return seq


def _mode(values, prefer_large: bool = False):
    c = Counter(values)
    return min(c, key=lambda v: (-c[v], -v if prefer_large else v))


def majority_vote(orders: Sequence[Sequence[int]]) -> OrderedPlan:
    """Positional vote over the sequences of the most common length.

    Ties in the length vote go to the longer length, ties at a position to
    the smaller id.  Votes that would repeat the previous step are collapsed.
    """
    if not orders:
        raise EmptyInput("majority_vote needs at least one sequence")
    n = _mode([len(o) for o in orders], prefer_large=True)
    pool = [list(o) for o in orders if len(o) == n]
    steps: list[int] = []
    for k in range(n):
        v = _mode([o[k] for o in pool])
        if not steps or steps[-1] != v:
            steps.append(v)
    return OrderedPlan(tuple(steps), tuple(sorted(set(steps))))


# --- conversion to grid goals ----------------------------------------------


def box_to_cells(box: BoxProposal, cell_px=CELL_PX) -> CellGoal:
    """Closed cell rectangle whose cell centres fall inside ``box``.

    Falls back to the cell under the box centre when no centre is covered.
    """
    cw, ch = cell_px
    xs = [c for c in range(box.x // cw, box.x1 // cw + 1) if box.x <= c * cw + cw / 2 < box.x1]
    ys = [r for r in range(box.y // ch, box.y1 // ch + 1) if box.y <= r * ch + ch / 2 < box.y1]
    if not xs:
        xs = [int((box.x + box.w / 2) // cw)]
    if not ys:
        ys = [int((box.y + box.h / 2) // ch)]
    return CellGoal(min(xs), min(ys), max(xs), max(ys))


def cell_to_px(cell, cell_px=CELL_PX) -> tuple[int, int]:
    """Pixel centre of grid cell ``(x, y)``."""
    cw, ch = cell_px
    return cell[0] * cw + cw // 2, cell[1] * ch + ch // 2


# --- I/O ----------------------------------------------------------------------


def subgoals_to_json(goals: SubGoalSet) -> str:
    rows = [{"id": i, **asdict(b)} for i, b in enumerate(goals.boxes)]
    return json.dumps(rows, indent=1) + "\n"


def subgoals_from_json(text: str) -> SubGoalSet:
    rows = sorted(json.loads(text), key=lambda r: r["id"])
    if [r["id"] for r in rows] != list(range(len(rows))):
        raise ValueError("sub-goal ids must be 0..n-1")
    return SubGoalSet(tuple(BoxProposal(int(r["x"]), int(r["y"]), int(r["w"]), int(r["h"]), float(r["score"])) for r in rows))


def write_subgoals(goals: SubGoalSet, path) -> None:
    Path(path).write_text(subgoals_to_json(goals))


def read_subgoals(path) -> SubGoalSet:
    return subgoals_from_json(Path(path).read_text())


def write_plan(plan: OrderedPlan | Sequence[int], path) -> None:
    steps = plan.steps if isinstance(plan, OrderedPlan) else plan
    Path(path).write_text(" ".join(str(s) for s in steps) + "\n")


def read_plan(path) -> list[int]:
    return [int(t) for t in Path(path).read_text().split()]
