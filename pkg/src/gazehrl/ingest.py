"""Episode logs: gaze samples plus per-frame game-state labels.

Line format, one frame per line::

    #episode=<id>;width=<int>;height=<int>
    frame_index;action;ax=<int>,ay=<int>;room=<int>;level=<int>;keys=<int>;gaze=<x>:<y>:<t>[|<x>:<y>:<t>...]

``ax``/``ay`` is the agent centre in frame pixels.  An empty ``gaze=`` field
marks a frame without gaze (blink, off-screen).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, TextIO

NATIVE_DIMS = (160, 210)
N_ACTIONS = 8


class MalformedLine(ValueError):
    def __init__(self, line_no: int, reason: str = ""):
        super().__init__(f"line {line_no}: {reason}" if reason else f"line {line_no}")
        self.line_no = line_no


class EmptyLog(ValueError):
    pass


@dataclass(frozen=True)
class GazeSample:
    t: float
    x: float
    y: float


@dataclass(frozen=True)
class StateLabel:
    agent_x: int
    agent_y: int
    room_id: int
    level: int
    keys: int


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    action: int
    gaze: tuple[GazeSample, ...]
    state: StateLabel


@dataclass(frozen=True)
class EpisodeLog:
    episode_id: str
    frame_width: int
    frame_height: int
    frames: tuple[FrameRecord, ...]
    dropped_samples: int = field(default=0, compare=False)

    def gaze_samples(self) -> list[GazeSample]:
        return [g for f in self.frames for g in f.gaze]


@dataclass(frozen=True)
class ValidationReport:
    frames: int
    gaze_samples: int
    dropped_samples: int
    violations: int
    frames_without_gaze: int


def _parse_kv(token: str, key: str, line_no: int) -> str:
    k, sep, v = token.partition("=")
    if not sep or k.strip() != key:
        raise MalformedLine(line_no, f"expected {key}=..., got {token!r}")
    return v.strip()


def _parse_frame(line: str, line_no: int, width: int, height: int):
    parts = line.split(";")
    if len(parts) != 7:
        raise MalformedLine(line_no, f"expected 7 fields, got {len(parts)}")
    try:
        frame_index = int(parts[0])
        action = int(parts[1])
        pos = _parse_kv(parts[2], "ax", line_no)
        ax_s, _, ay_part = pos.partition(",")
        ax = int(ax_s)
        ay = int(_parse_kv(ay_part, "ay", line_no))
        room = int(_parse_kv(parts[3], "room", line_no))
        level = int(_parse_kv(parts[4], "level", line_no))
        keys = int(_parse_kv(parts[5], "keys", line_no))
        gaze_field = _parse_kv(parts[6], "gaze", line_no)
    except MalformedLine:
        raise
    except ValueError as exc:
        raise MalformedLine(line_no, str(exc)) from None
    if not 0 <= action < N_ACTIONS:
        raise MalformedLine(line_no, f"action {action} outside 0..{N_ACTIONS - 1}")
    if room < 0 or level < 0 or keys < 0:
        raise MalformedLine(line_no, "room, level and keys must be non-negative")

    samples, dropped = [], 0
    last_t = None
    for item in filter(None, gaze_field.split("|")):
        try:
            x, y, t = (float(v) for v in item.split(":"))
        except ValueError:
            raise MalformedLine(line_no, f"bad gaze sample {item!r}") from None
        if t < 0 or (last_t is not None and t < last_t):
            raise MalformedLine(line_no, "gaze timestamps must be non-negative and non-decreasing")
        last_t = t
        if not (0 <= x < width and 0 <= y < height):
            dropped += 1
            continue
        samples.append(GazeSample(t, x, y))
    state = StateLabel(ax, ay, room, level, keys)
    return FrameRecord(frame_index, action, tuple(samples), state), dropped


def parse_episode_log(source: TextIO | str, dims: tuple[int, int] = NATIVE_DIMS) -> EpisodeLog:
    """Parse a log from a text stream (or string).

    A header line overrides ``dims``.  Out-of-frame gaze samples are dropped
    and counted in ``EpisodeLog.dropped_samples``.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    episode_id, (width, height) = "episode", dims
    frames: list[FrameRecord] = []
    dropped = 0
    last_index = None
    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for item in line[1:].split(";"):
                k, sep, v = item.partition("=")
                if not sep:
                    continue
                k = k.strip()
                try:
                    if k == "episode":
                        episode_id = v.strip()
                    elif k == "width":
                        width = int(v)
                    elif k == "height":
                        height = int(v)
                except ValueError:
                    raise MalformedLine(line_no, f"bad header field {item!r}") from None
            continue
        if width <= 0 or height <= 0:
            raise MalformedLine(line_no, "frame dimensions must be positive")
        frame, d = _parse_frame(line, line_no, width, height)
        if last_index is not None and frame.frame_index <= last_index:
            raise MalformedLine(line_no, "frame_index must be strictly increasing")
        last_index = frame.frame_index
        frames.append(frame)
        dropped += d
    if not frames:
        raise EmptyLog("no frames in log")
    return EpisodeLog(episode_id, width, height, tuple(frames), dropped)


def _num(v: float) -> str:
    return repr(float(v))


def serialize_episode_log(log: EpisodeLog) -> str:
    out = [f"#episode={log.episode_id};width={log.frame_width};height={log.frame_height}"]
    for f in log.frames:
        s = f.state
        gaze = "|".join(f"{_num(g.x)}:{_num(g.y)}:{_num(g.t)}" for g in f.gaze)
        out.append(
            f"{f.frame_index};{f.action};ax={s.agent_x},ay={s.agent_y};"
            f"room={s.room_id};level={s.level};keys={s.keys};gaze={gaze}"
        )
    return "\n".join(out) + "\n"


def read_episode_log(path: str | Path, dims: tuple[int, int] = NATIVE_DIMS) -> EpisodeLog:
    with open(path, encoding="utf-8") as fh:
        return parse_episode_log(fh, dims)


def write_episode_log(log: EpisodeLog, path: str | Path) -> None:
    Path(path).write_text(serialize_episode_log(log), encoding="utf-8")


def room_tag(room_id: int, level: int) -> str:
    return f"@room{room_id}-level{level}"


def filter_by_room(log: EpisodeLog, room_id: int, level: int) -> EpisodeLog:
    """Keep only frames labelled with ``(room_id, level)``, in original order."""
    frames = tuple(f for f in log.frames if f.state.room_id == room_id and f.state.level == level)
    tag = room_tag(room_id, level)
    eid = log.episode_id if log.episode_id.endswith(tag) else log.episode_id + tag
    return replace(log, episode_id=eid, frames=frames)


def validate_log(log: EpisodeLog) -> ValidationReport:
    violations = 0
    oob = 0
    n_gaze = 0
    no_gaze = 0
    prev = None
    for f in log.frames:
        if prev is not None and f.frame_index <= prev:
            violations += 1
        prev = f.frame_index
        if not f.gaze:
            no_gaze += 1
        for g in f.gaze:
            if 0 <= g.x < log.frame_width and 0 <= g.y < log.frame_height:
                n_gaze += 1
            else:
                oob += 1
    return ValidationReport(
        frames=len(log.frames),
        gaze_samples=n_gaze,
        dropped_samples=log.dropped_samples + oob,
        violations=violations,
        frames_without_gaze=no_gaze,
    )


def frame_times(log: EpisodeLog) -> list[float]:
    """Timestamp per frame: first gaze sample, else carried over from the previous frame."""
    out, last = [], 0.0
    for f in log.frames:
        if f.gaze:
            last = f.gaze[0].t
        out.append(last)
    return out


# --- Atari-HEAD adapter ----------------------------------------------------

# full ALE action set (18) onto NoOp/Up/Down/Left/Right/JumpUp/JumpLeft/JumpRight
ALE_TO_ACTION = {
    0: 0, 1: 5, 2: 1, 3: 4, 4: 3, 5: 2, 6: 4, 7: 3, 8: 4, 9: 3,
    10: 5, 11: 7, 12: 6, 13: 5, 14: 7, 15: 6, 16: 7, 17: 6,
}


def from_atari_head(
    frames_txt: str | Path,
    labels_csv: str | Path,
    dims: tuple[int, int] = NATIVE_DIMS,
    episode_id: str | None = None,
) -> EpisodeLog:
    """Convert one Atari-HEAD trial into an :class:`EpisodeLog`.

    ``frames_txt`` is the Atari-HEAD per-trial text file (columns
    ``frame_id,episode_id,score,duration(ms),unclipped_reward,action,gaze_positions``).
    Atari-HEAD carries no RAM labels, so ``labels_csv`` must supply them with
    columns ``frame_id,ax,ay,room,level,keys`` (e.g. from re-simulating the
    trial in an emulator).  Frames without a label row are skipped.  Gaze
    samples get timestamps spread evenly over each frame's duration.
    """
    labels = {}
    with open(labels_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            labels[row["frame_id"]] = StateLabel(
                int(float(row["ax"])), int(float(row["ay"])), int(row["room"]), int(row["level"]), int(row["keys"])
            )
    width, height = dims
    frames, dropped, clock = [], 0, 0.0
    with open(frames_txt, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for i, row in enumerate(reader):
            if len(row) < 6:
                continue
            frame_id = row[0]
            duration = float(row[3]) if row[3] not in ("", "null") else 0.0
            gaze_vals = [v for v in row[6:] if v not in ("", "null")]
            coords = [float(v) for v in gaze_vals]
            pts = list(zip(coords[0::2], coords[1::2]))
            samples = []
            for j, (x, y) in enumerate(pts):
                t = clock + duration * j / max(1, len(pts))
                if 0 <= x < width and 0 <= y < height:
                    samples.append(GazeSample(t, x, y))
                else:
                    dropped += 1
            clock += duration
            if frame_id not in labels:
                continue
            try:
                action = ALE_TO_ACTION[int(row[5])]
            except (KeyError, ValueError):
                action = 0
            frames.append(FrameRecord(i, action, tuple(samples), labels[frame_id]))
    if not frames:
        raise EmptyLog(f"no labelled frames in {frames_txt}")
    eid = episode_id or Path(frames_txt).stem
    return EpisodeLog(eid, width, height, tuple(frames), dropped)


def load_logs(paths: Iterable[str | Path], dims: tuple[int, int] = NATIVE_DIMS) -> list[EpisodeLog]:
    return [read_episode_log(p, dims) for p in paths]
