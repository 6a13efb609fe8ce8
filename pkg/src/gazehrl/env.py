"""Deterministic cell-grid replica of Montezuma's Revenge room 1.

The room is described by an ASCII layout (see ``LEGEND``).  Physics are
deliberately coarse: the agent occupies one cell, ladders and ropes can be
climbed, horizontal jumps move two cells through a one-cell arc, unsupported
agents fall and die when they drop more than ``max_fall`` cells, and a skull
patrols back and forth along the ``S`` cells.

Coordinates are ``(x, y)`` cell indices with ``y`` growing downwards, matching
screen/pixel conventions used by the gaze side of the package.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from functools import lru_cache
from importlib import resources

EMPTY, PLATFORM, LADDER, ROPE, SKULL_PATH, KEY, DOOR, SPAWN = ".#H|SKDA"
LEGEND = {
    EMPTY: "Empty",
    PLATFORM: "Platform",
    LADDER: "Ladder",
    ROPE: "Rope",
    SKULL_PATH: "SkullPath",
    KEY: "Key",
    DOOR: "Door",
    SPAWN: "Spawn",
}
CLIMBABLE = (LADDER, ROPE)


class Action(IntEnum):
    NOOP = 0
    UP = 1
    DOWN = 2
    LEFT = 3
    RIGHT = 4
    JUMP_UP = 5
    JUMP_LEFT = 6
    JUMP_RIGHT = 7


N_ACTIONS = len(Action)

# unit direction of each action in screen coordinates (y down)
_S = 2 ** -0.5
ACTION_VECTORS = {
    Action.NOOP: (0.0, 0.0),
    Action.UP: (0.0, -1.0),
    Action.DOWN: (0.0, 1.0),
    Action.LEFT: (-1.0, 0.0),
    Action.RIGHT: (1.0, 0.0),
    Action.JUMP_UP: (0.0, -1.0),
    Action.JUMP_LEFT: (-_S, -_S),
    Action.JUMP_RIGHT: (_S, -_S),
}


class LayoutError(ValueError):
    pass


class BadChar(LayoutError):
    def __init__(self, row, col, char):
        super().__init__(f"unknown layout character {char!r} at row {row}, col {col}")
        self.row, self.col, self.char = row, col, char


class NoSpawn(LayoutError):
    pass


class NoDoor(LayoutError):
    pass


class SteppedWhenDead(RuntimeError):
    pass


@dataclass(frozen=True)
class RoomLayout:
    rows: tuple[str, ...]
    spawn: tuple[int, int]
    skull_path: tuple[tuple[int, int], ...] = ()
    max_fall: int = 3
    room_id: int = 1
    level: int = 0

    @property
    def width(self) -> int:
        return len(self.rows[0])

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def skull_period(self) -> int:
        n = len(self.skull_path)
        return max(1, 2 * (n - 1))

    def cell(self, x: int, y: int) -> str:
        if 0 <= x < self.width and 0 <= y < self.height:
            return self.rows[y][x]
        return PLATFORM

    def cells_of(self, kind: str) -> list[tuple[int, int]]:
        return [(x, y) for y, row in enumerate(self.rows) for x, c in enumerate(row) if c == kind]

    def skull_at(self, phase: int) -> tuple[int, int] | None:
        """Skull cell for a patrol phase (ping-pong over the patrol cells)."""
        if not self.skull_path:
            return None
        n = len(self.skull_path)
        if n == 1:
            return self.skull_path[0]
        p = phase % self.skull_period
        return self.skull_path[p if p < n else 2 * (n - 1) - p]

    def render(self, state: EnvState | None = None) -> str:
        grid = [list(r) for r in self.rows]
        if state is not None:
            skull = self.skull_at(state.skull_phase)
            if skull:
                grid[skull[1]][skull[0]] = "x"
            ax, ay = state.agent
            grid[ay][ax] = "@" if state.alive else "+"
        return "\n".join("".join(r) for r in grid)


def load_layout(text: str) -> RoomLayout:
    """Parse an ASCII room layout.

    Lines starting with ``;`` carry ``key=value`` options (``max_fall``,
    ``room``, ``level``, ``skull=x0,y0:x1,y1``).  Every other non-blank line is
    a grid row; all rows must share one width.
    """
    options: dict[str, str] = {}
    rows: list[str] = []
    for line in text.splitlines():
        line = line.rstrip("\n\r")
        if line.startswith(";"):
            for item in line[1:].split(";"):
                if "=" in item:
                    k, v = item.split("=", 1)
                    options[k.strip()] = v.strip()
            continue
        if line.strip():
            rows.append(line.strip())
    if not rows:
        raise NoSpawn("empty layout")
    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise LayoutError(f"row {r} has width {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch not in LEGEND:
                raise BadChar(r, c, ch)

    spawns = [(x, y) for y, row in enumerate(rows) for x, c in enumerate(row) if c == SPAWN]
    if len(spawns) != 1:
        raise NoSpawn(f"expected exactly one spawn, found {len(spawns)}")
    if not any(DOOR in row for row in rows):
        raise NoDoor("layout has no door")

    skull_cells = sorted(
        ((x, y) for y, row in enumerate(rows) for x, c in enumerate(row) if c == SKULL_PATH),
        key=lambda p: (p[1], p[0]),
    )
    if "skull" in options:
        (x0, y0), (x1, y1) = (tuple(int(v) for v in end.split(",")) for end in options["skull"].split(":"))
        if y0 != y1:
            raise LayoutError("skull patrol must be horizontal")
        lo, hi = sorted((x0, x1))
        path = tuple((x, y0) for x in range(lo, hi + 1))
        if any(rows[y][x] != SKULL_PATH for x, y in path):
            raise LayoutError("skull endpoints must lie on a contiguous SkullPath run")
    elif skull_cells:
        y0 = skull_cells[0][1]
        path = tuple(p for p in skull_cells if p[1] == y0)
        xs = [p[0] for p in path]
        if xs != list(range(xs[0], xs[0] + len(xs))):
            raise LayoutError("SkullPath cells must form one contiguous horizontal run")
    else:
        path = ()

    return RoomLayout(
        rows=tuple(rows),
        spawn=spawns[0],
        skull_path=path,
        max_fall=int(options.get("max_fall", 3)),
        room_id=int(options.get("room", 1)),
        level=int(options.get("level", 0)),
    )


def load_room1() -> RoomLayout:
    """The bundled room-1 replica."""
    return load_layout(resources.files("gazehrl").joinpath("data/room1.layout").read_text())


@dataclass(frozen=True)
class EnvState:
    agent: tuple[int, int]
    has_key: bool = False
    skull_phase: int = 0
    alive: bool = True
    steps: int = 0
    door_open: bool = False

    @property
    def key(self) -> tuple[int, int, bool, int]:
        """Markov part of the state used by tabular learners."""
        return (self.agent[0], self.agent[1], self.has_key, self.skull_phase)

    @property
    def terminal(self) -> bool:
        return not self.alive or self.door_open


@dataclass(frozen=True)
class StepEvents:
    died: bool = False
    got_key: bool = False
    opened_door: bool = False
    moved: bool = False


@dataclass(frozen=True)
class CellGoal:
    """Closed cell box ``[x0, x1] x [y0, y1]``.

    ``requires`` is ``"key"`` (agent must hold the key) or ``"door"`` (a door
    must be opened) for reward-bearing goals, else ``None``.
    """

    x0: int
    y0: int
    x1: int
    y1: int
    requires: str | None = None

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


def reset(layout: RoomLayout, seed: int | None = None) -> EnvState:
    # the room is deterministic; seed is accepted for interface symmetry
    del seed
    return EnvState(agent=layout.spawn)


def subgoal_reached(state: EnvState, goal: CellGoal, events: StepEvents | None = None) -> bool:
    if not state.alive or not goal.contains(*state.agent):
        return False
    if goal.requires == "key":
        return state.has_key
    if goal.requires == "door":
        return state.door_open or bool(events and events.opened_door)
    return True


def annotate_goals(layout: RoomLayout, goals: list[CellGoal]) -> list[CellGoal]:
    """Flag goals that cover a key or door cell as reward-bearing."""
    out = []
    for g in goals:
        cells = [layout.cell(x, y) for y in range(g.y0, g.y1 + 1) for x in range(g.x0, g.x1 + 1)]
        req = "door" if DOOR in cells else "key" if KEY in cells else None
        out.append(replace(g, requires=req))
    return out


class RoomEnv:
    """Stateless stepping over ``EnvState`` values with a memoised transition table."""

    def __init__(self, layout: RoomLayout):
        self.layout = layout
        self._step = lru_cache(maxsize=None)(self._transition)

    def reset(self, seed: int | None = None) -> EnvState:
        return reset(self.layout, seed)

    def step(self, state: EnvState, action: int) -> tuple[EnvState, StepEvents]:
        if not state.alive:
            raise SteppedWhenDead("step() called on a dead agent")
        # steps counter excluded from the cache key
        nxt, ev = self._step(replace(state, steps=0), int(action))
        return replace(nxt, steps=state.steps + 1), ev

    # -- physics -------------------------------------------------------
    def _solid(self, x, y, has_key):
        c = self.layout.cell(x, y)
        return c == PLATFORM or (c == DOOR and not has_key)

    def _supported(self, x, y, has_key):
        if self.layout.cell(x, y) in CLIMBABLE:
            return True
        below = self.layout.cell(x, y + 1)
        return below == LADDER or self._solid(x, y + 1, has_key)

    def _transition(self, state: EnvState, action: int) -> tuple[EnvState, StepEvents]:
        lay = self.layout
        x, y = state.agent
        has_key = state.has_key
        here = lay.cell(x, y)
        on_climbable = here in CLIMBABLE
        walkable = not on_climbable or self._solid(x, y + 1, has_key)
        path: list[tuple[int, int]] = []
        airborne = False

        a = Action(action)
        if a == Action.UP:
            if on_climbable and not self._solid(x, y - 1, has_key):
                tgt = (x, y - 1)
                if lay.cell(*tgt) in CLIMBABLE or self._supported(*tgt, has_key):
                    path.append(tgt)
        elif a == Action.DOWN:
            if (on_climbable or lay.cell(x, y + 1) == LADDER) and not self._solid(x, y + 1, has_key):
                path.append((x, y + 1))
        elif a in (Action.LEFT, Action.RIGHT):
            d = -1 if a == Action.LEFT else 1
            if walkable and not self._solid(x + d, y, has_key):
                path.append((x + d, y))
        elif a == Action.JUMP_UP:
            if (walkable or here == ROPE) and not self._solid(x, y - 1, has_key):
                airborne = True
                path.append((x, y - 1))
                if lay.cell(x, y - 1) != ROPE:
                    path.append((x, y))
        elif a in (Action.JUMP_LEFT, Action.JUMP_RIGHT):
            if walkable or here == ROPE:
                d = -1 if a == Action.JUMP_LEFT else 1
                airborne = True
                for cx, cy in ((x + d, y - 1), (x + 2 * d, y - 1)):
                    if self._solid(cx, cy, has_key):
                        break
                    path.append((cx, cy))
                    if lay.cell(cx, cy) == ROPE:
                        break

        got_key = opened = False
        fall = 0
        pos = (x, y)
        apex_y = y
        for p in path:
            pos = p
            apex_y = min(apex_y, p[1])
            if lay.cell(*p) == KEY and not has_key:
                has_key = got_key = True
            if lay.cell(*p) == DOOR and has_key:
                opened = True
                break
            if lay.cell(*p) == ROPE and airborne:
                break
        if not opened:
            # gravity; a jump that did not end on a rope comes down from its apex
            grabbed = airborne and lay.cell(*pos) == ROPE
            if airborne and not grabbed:
                fall = pos[1] - apex_y
            while not grabbed and not self._supported(*pos, has_key):
                pos = (pos[0], pos[1] + 1)
                fall += 1
                if lay.cell(*pos) == KEY and not has_key:
                    has_key = got_key = True
                if pos[1] >= lay.height:
                    break

        alive = fall <= lay.max_fall and pos[1] < lay.height
        phase = (state.skull_phase + 1) % lay.skull_period
        if alive and lay.skull_path:
            old, new = lay.skull_at(state.skull_phase), lay.skull_at(phase)
            hit = {new} if airborne else {old, new}
            if pos in hit:
                alive = False
        nxt = EnvState(
            agent=pos,
            has_key=has_key,
            skull_phase=phase,
            alive=alive,
            steps=0,
            door_open=opened and alive,
        )
        ev = StepEvents(died=not alive, got_key=got_key, opened_door=opened and alive, moved=pos != (x, y))
        return nxt, ev


def room1_goals(layout: RoomLayout | None = None) -> list[CellGoal]:
    """Hand-placed room-1 sub-goal boxes, ids 0..6 (see ``data/room1_goals.txt``)."""
    text = resources.files("gazehrl").joinpath("data/room1_goals.txt").read_text()
    goals = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        gid, x0, y0, x1, y1 = (int(v) for v in line.split())
        assert gid == len(goals), "goal ids must be consecutive"
        goals.append(CellGoal(x0, y0, x1, y1))
    return annotate_goals(layout or load_room1(), goals)


def room1_plan() -> list[int]:
    text = resources.files("gazehrl").joinpath("data/room1_plan.txt").read_text()
    return [int(t) for t in text.split()]


def shortest_path(env: RoomEnv, start: EnvState, goal: CellGoal, max_depth: int = 400) -> list[int] | None:
    """Breadth-first search for the shortest action sequence reaching ``goal``.

    Used as the expert oracle: ties are broken by action id, so the result is
    deterministic.
    """
    from collections import deque

    root = replace(start, steps=0)
    parents: dict[EnvState, tuple[EnvState, int] | None] = {root: None}
    queue = deque([root])
    while queue:
        s = queue.popleft()
        for a in range(N_ACTIONS):
            nxt, ev = env.step(s, a)
            nxt = replace(nxt, steps=0)
            if nxt in parents or not nxt.alive:
                continue
            parents[nxt] = (s, a)
            if subgoal_reached(nxt, goal, ev):
                actions = []
                node = nxt
                while parents[node] is not None:
                    node, act = parents[node]
                    actions.append(act)
                return actions[::-1]
            if not nxt.terminal and len(parents) < 10**6:
                queue.append(nxt)
    return None


def expert_rollout(env: RoomEnv, goals: list[CellGoal], plan: list[int]) -> tuple[list[EnvState], list[int], list[int]]:
    """Chain shortest paths through the plan.

    Returns the visited states (including the start), the actions, and for
    each plan step the index into ``actions`` at which that step completed.
    """
    state = env.reset()
    states, actions, marks = [state], [], []
    for gid in plan:
        seg = shortest_path(env, state, goals[gid])
        if seg is None:
            raise ValueError(f"goal {gid} unreachable from {state}")
        for a in seg:
            state, _ = env.step(state, a)
            states.append(state)
            actions.append(a)
        marks.append(len(actions))
    return states, actions, marks
