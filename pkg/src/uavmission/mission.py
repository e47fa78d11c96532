"""Tasks, UAVs and scenarios: the records the planner and simulator act on."""
from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .geometry import (
    DubinsPath,
    Point,
    Pose,
    Segment,
    Unreachable,
    chain_segments,
    connect,
    connect_length,
    csc_shortest,
    normalize_angle,
)

DEFAULT_TURN_RADIUS = 80.0
DEFAULT_SPEED = 17.5
DEFAULT_AREA_SIDE = 2500.0
CIRCLE_ENTRY_CANDIDATES = 32


class ScenarioError(ValueError):
    """A scenario or task violates its invariants."""


class InvalidTransition(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# task types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointFree:
    name = "point"


@dataclass(frozen=True)
class PointConstrained:
    entry_heading: float
    name = "point_constrained"


@dataclass(frozen=True)
class Line:
    endpoint_b: Point
    name = "line"


@dataclass(frozen=True)
class Circle:
    radius: float
    sweeps: int = 1
    name = "circle"


@dataclass(frozen=True)
class Area:
    width: float
    height: float
    orientation: float = 0.0
    lane_spacing: float = 2 * DEFAULT_TURN_RADIUS
    name = "area"


TaskType = Union[PointFree, PointConstrained, Line, Circle, Area]
TYPE_NAMES = ("point", "point_constrained", "line", "circle", "area")


class TaskState(enum.IntEnum):
    UNASSIGNED = 0
    ASSIGNED = 1
    COMPLETED = 2


class UavState(enum.IntEnum):
    IDLE = 0
    IN_TRANSIT = 1
    BUSY = 2
    DAMAGED = 3


@dataclass
class Task:
    id: int
    position: Point
    type: TaskType = field(default_factory=PointFree)
    state: TaskState = TaskState.UNASSIGNED
    assigned_to: Optional[int] = None
    created_at: float = 0.0
    assigned_at: Optional[float] = None
    completed_at: Optional[float] = None
    completed_by: Optional[int] = None

    def assign(self, uav_id: int, now: float) -> None:
        if self.state is not TaskState.UNASSIGNED:
            raise InvalidTransition(f"task {self.id}: {self.state.name} -> ASSIGNED")
        self.state = TaskState.ASSIGNED
        self.assigned_to = uav_id
        self.assigned_at = now

    def complete(self, now: float) -> None:
        if self.state is not TaskState.ASSIGNED:
            raise InvalidTransition(f"task {self.id}: {self.state.name} -> COMPLETED")
        self.state = TaskState.COMPLETED
        self.completed_by = self.assigned_to
        self.completed_at = now

    def release(self) -> None:
        """Hand an assigned task back to the pool (its UAV was lost)."""
        if self.state is not TaskState.ASSIGNED:
            raise InvalidTransition(f"task {self.id}: {self.state.name} -> UNASSIGNED")
        self.state = TaskState.UNASSIGNED
        self.assigned_to = None


@dataclass
class Uav:
    id: int
    pose: Pose
    speed: float = DEFAULT_SPEED
    turn_radius: float = DEFAULT_TURN_RADIUS
    state: UavState = UavState.IDLE
    current_path: Optional[DubinsPath] = None
    current_task: Optional[int] = None
    coverage: Optional["CoveragePlan"] = None
    cluster: Optional[int] = None
    progress: float = 0.0
    # L1 base->first task, L2 task->task, L3 coverage, L4 return
    parts: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    loiter: float = 0.0
    legs: int = 0
    homing: bool = False
    damaged_at: Optional[float] = None

    @property
    def odometer(self) -> float:
        return self.parts[0] + self.parts[1] + self.parts[2] + self.parts[3]

    def _require_alive(self, target: str) -> None:
        if self.state is UavState.DAMAGED:
            raise InvalidTransition(f"uav {self.id}: DAMAGED -> {target}")

    def depart(self, task_id: int, path: DubinsPath, coverage: "CoveragePlan") -> None:
        self._require_alive("IN_TRANSIT")
        if self.state is not UavState.IDLE:
            raise InvalidTransition(f"uav {self.id}: {self.state.name} -> IN_TRANSIT")
        self.state = UavState.IN_TRANSIT
        self.current_task = task_id
        self.current_path = path
        self.coverage = coverage
        self.progress = 0.0

    def arrive(self) -> None:
        self._require_alive("BUSY")
        if self.state is not UavState.IN_TRANSIT:
            raise InvalidTransition(f"uav {self.id}: {self.state.name} -> BUSY")
        self.state = UavState.BUSY
        self.current_path = None
        self.progress = 0.0
        self.legs += 1

    def finish(self) -> None:
        self._require_alive("IDLE")
        if self.state is not UavState.BUSY:
            raise InvalidTransition(f"uav {self.id}: {self.state.name} -> IDLE")
        self.state = UavState.IDLE
        self.current_task = None
        self.coverage = None
        self.progress = 0.0

    def damage(self, now: float) -> None:
        self._require_alive("DAMAGED")
        self.state = UavState.DAMAGED
        self.damaged_at = now
        self.current_path = None
        self.coverage = None
        self.current_task = None

    def fly(self, distance: float, part: int) -> None:
        self.parts[part] += distance


# ---------------------------------------------------------------------------
# entries and coverage
# ---------------------------------------------------------------------------

Entry = Tuple[Point, Optional[float]]


def _area_frame(task: Task):
    a: Area = task.type
    ux, uy = math.cos(a.orientation), math.sin(a.orientation)
    vx, vy = -uy, ux
    cx, cy = task.position
    return a, (ux, uy), (vx, vy), (cx, cy)


def _lane_offsets(height: float, spacing: float) -> List[float]:
    offs = []
    k = 0
    while k * spacing <= height + 1e-9 * max(1.0, height):
        offs.append(min(k * spacing, height))
        k += 1
    if height - offs[-1] > 1e-9 * max(1.0, height):
        offs.append(height)
    return offs


@functools.lru_cache(maxsize=None)
def _circle_angles(n: int) -> Tuple[float, ...]:
    return tuple(2.0 * math.pi * i / n for i in range(n))


def entry_options(task: Task) -> List[Entry]:
    """Admissible entry configurations; the first one is the default entry."""
    t = task.type
    px, py = task.position
    if isinstance(t, PointFree):
        return [((px, py), None)]
    if isinstance(t, PointConstrained):
        return [((px, py), normalize_angle(t.entry_heading))]
    if isinstance(t, Line):
        bx, by = t.endpoint_b
        h = math.atan2(by - py, bx - px)
        return [((px, py), normalize_angle(h)), ((bx, by), normalize_angle(h + math.pi))]
    if isinstance(t, Circle):
        r = t.radius
        return [
            ((px + r * math.cos(a), py + r * math.sin(a)), normalize_angle(a + 0.5 * math.pi))
            for a in _circle_angles(CIRCLE_ENTRY_CANDIDATES)
        ]
    if isinstance(t, Area):
        a, (ux, uy), (vx, vy), (cx, cy) = _area_frame(task)
        hw, hh = 0.5 * a.width, 0.5 * a.height
        out = []
        for side in (-1.0, 1.0):  # first lane (-v side) or last lane (+v side)
            for end in (-1.0, 1.0):
                x = cx + end * hw * ux + side * hh * vx
                y = cy + end * hw * uy + side * hh * vy
                heading = a.orientation if end < 0 else a.orientation + math.pi
                out.append(((x, y), normalize_angle(heading)))
        return out
    raise TypeError(f"unknown task type {t!r}")


def task_entry(task: Task) -> Entry:
    return entry_options(task)[0]


@dataclass(frozen=True)
class CoveragePlan:
    entry: Pose
    segments: Tuple[Segment, ...]
    length: float
    exit: Pose


def _closest_option(task: Task, entry: Pose) -> int:
    best, best_d = 0, math.inf
    for i, ((x, y), h) in enumerate(entry_options(task)):
        d = math.hypot(x - entry.x, y - entry.y)
        if h is not None:
            dh = abs(math.remainder(h - entry.theta, 2 * math.pi))
            d += dh
        if d < best_d:
            best, best_d = i, d
    return best


def coverage_plan(task: Task, entry: Pose, R: float) -> CoveragePlan:
    t = task.type
    if isinstance(t, (PointFree, PointConstrained)):
        return CoveragePlan(entry, (), 0.0, entry)
    if isinstance(t, Line):
        (ax, ay), _ = entry_options(task)[0]
        bx, by = t.endpoint_b
        segs = chain_segments(entry, (("S", math.hypot(bx - ax, by - ay), 0.0),))
        return CoveragePlan(entry, segs, segs[0].length, segs[-1].end())
    if isinstance(t, Circle):
        if t.radius < R * (1.0 - 1e-12):
            raise ScenarioError(f"task {task.id}: circle radius {t.radius} < turn radius {R}")
        segs = chain_segments(entry, (("L", t.sweeps * 2.0 * math.pi * t.radius, t.radius),))
        # a whole number of loops closes exactly on the entry pose
        exit_pose = Pose(entry.x, entry.y, entry.theta)
        return CoveragePlan(entry, segs, segs[0].length, exit_pose)
    if isinstance(t, Area):
        return _area_plan(task, entry, R)
    raise TypeError(f"unknown task type {t!r}")


def _area_plan(task: Task, entry: Pose, R: float) -> CoveragePlan:
    a, (ux, uy), (vx, vy), _ = _area_frame(task)
    if a.width <= 0 or a.height <= 0 or a.lane_spacing <= 0:
        raise ScenarioError(f"task {task.id}: area dimensions and lane spacing must be positive")
    idx = _closest_option(task, entry)
    sweep_dir = 1.0 if idx < 2 else -1.0
    offs = _lane_offsets(a.height, a.lane_spacing)
    steps = [offs[i + 1] - offs[i] for i in range(len(offs) - 1)]
    if sweep_dir < 0:
        steps = steps[::-1]
    segs: List[Segment] = []
    pose = entry
    for i in range(len(offs)):
        lane = Segment("S", a.width, pose)
        segs.append(lane)
        pose = lane.end()
        if i == len(steps):
            break
        d = sweep_dir * steps[i]
        nxt = Pose(pose.x + d * vx, pose.y + d * vy, pose.theta + math.pi)
        turn = csc_shortest(pose, nxt, R)
        segs.extend(s for s in turn.segments if s.length > 0.0)
        pose = nxt
    return CoveragePlan(entry, tuple(segs), sum(s.length for s in segs), pose)


@functools.lru_cache(maxsize=4096)
def _coverage_length(task_type, position, R) -> float:
    tmp = Task(-1, position, task_type)
    (x, y), h = task_entry(tmp)
    return coverage_plan(tmp, Pose(x, y, h or 0.0), R).length


def coverage_length(task: Task, R: float) -> float:
    """Coverage length of a task; independent of where the UAV comes from."""
    if isinstance(task.type, (PointFree, PointConstrained)):
        return 0.0
    return _coverage_length(task.type, tuple(task.position), R)


def best_entry(pose: Pose, task: Task, R: float) -> Tuple[float, Entry]:
    """Cheapest connecting length over the task's entry options."""
    best_len, best = math.inf, None
    for opt in entry_options(task):
        try:
            length = connect_length(pose, opt[0], opt[1], R)
        except Unreachable:
            continue
        if length < best_len:
            best_len, best = length, opt
    if best is None:
        raise Unreachable(f"task {task.id} has no reachable entry from {pose}")
    return best_len, best


def nearest_entry_euclidean(pose: Pose, task: Task) -> Tuple[float, Entry]:
    best_d, best = math.inf, None
    for opt in entry_options(task):
        d = math.hypot(opt[0][0] - pose.x, opt[0][1] - pose.y)
        if d < best_d:
            best_d, best = d, opt
    return best_d, best


def plan_leg(pose: Pose, entry: Entry, task: Task, R: float) -> Tuple[DubinsPath, CoveragePlan]:
    """Connecting path to ``entry`` plus the coverage plan that starts there."""
    path = connect(pose, entry[0], entry[1], R)
    return path, coverage_plan(task, path.end, R)


# ---------------------------------------------------------------------------
# live world state
# ---------------------------------------------------------------------------

EVENT_KINDS = ("assign", "arrive", "complete", "new_task", "damage", "release", "reassign")


@dataclass
class World:
    tasks: Dict[int, Task]
    uavs: List[Uav]
    base: Pose
    turn_radius: float = DEFAULT_TURN_RADIUS
    now: float = 0.0
    events: List[tuple] = field(default_factory=list)

    def log(self, kind: str, uav: Optional[int] = None, task: Optional[int] = None, detail: str = "") -> None:
        assert kind in EVENT_KINDS, kind
        self.events.append((self.now, kind, uav, task, detail))

    def unassigned(self) -> List[Task]:
        return [t for t in self.tasks.values() if t.state is TaskState.UNASSIGNED]

    def alive(self) -> List[Uav]:
        return [u for u in self.uavs if u.state is not UavState.DAMAGED]

    def next_task_id(self) -> int:
        return max(self.tasks, default=-1) + 1


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    K: int
    N: int
    area_side: float
    base: Pose
    tasks: List[Task]
    uav_speed: float = DEFAULT_SPEED
    turn_radius: float = DEFAULT_TURN_RADIUS
    seed: int = 0

    def validate(self) -> None:
        if self.K < 1:
            raise ScenarioError("K must be at least 1")
        if self.K >= self.N:
            raise ScenarioError(f"need K < N, got K={self.K}, N={self.N}")
        if len(self.tasks) != self.N:
            raise ScenarioError(f"N={self.N} but {len(self.tasks)} tasks listed")
        if not (self.area_side > 0):
            raise ScenarioError("area_side must be positive")
        if not (self.turn_radius > 0 and self.uav_speed > 0):
            raise ScenarioError("turn_radius and uav_speed must be positive")
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ScenarioError("task ids must be unique")
        side = self.area_side
        for t in self.tasks:
            x, y = t.position
            if not (0.0 <= x <= side and 0.0 <= y <= side):
                raise ScenarioError(f"task {t.id} at {t.position} outside [0, {side}]^2")
            if isinstance(t.type, Circle) and t.type.radius < self.turn_radius:
                raise ScenarioError(f"task {t.id}: circle radius below turn radius")
            if isinstance(t.type, Area) and min(t.type.width, t.type.height, t.type.lane_spacing) <= 0:
                raise ScenarioError(f"task {t.id}: area dimensions must be positive")

    def fresh_tasks(self) -> List[Task]:
        return [Task(t.id, tuple(t.position), t.type) for t in self.tasks]

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "N": self.N,
            "area_side": self.area_side,
            "base": {"x": self.base.x, "y": self.base.y, "theta": self.base.theta},
            "tasks": [_task_to_dict(t) for t in self.tasks],
            "uav_speed": self.uav_speed,
            "turn_radius": self.turn_radius,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        for key in ("K", "N", "area_side", "base", "tasks"):
            if key not in d:
                raise ScenarioError(f"missing field '{key}'")
        try:
            b = d["base"]
            base = Pose(float(b["x"]), float(b["y"]), float(b.get("theta", 0.0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioError(f"field 'base': {e}") from None
        tasks = [_task_from_dict(i, td) for i, td in enumerate(d["tasks"])]
        return cls(
            K=_as_int(d, "K"),
            N=_as_int(d, "N"),
            area_side=_as_float(d, "area_side"),
            base=base,
            tasks=tasks,
            uav_speed=_as_float(d, "uav_speed", DEFAULT_SPEED),
            turn_radius=_as_float(d, "turn_radius", DEFAULT_TURN_RADIUS),
            seed=_as_int(d, "seed", 0),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
        if not isinstance(d, dict):
            raise ScenarioError("top level must be an object")
        return cls.from_dict(d)

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as f:
            return cls.loads(f.read())


def _as_int(d, key, default=None):
    if key not in d:
        if default is None:
            raise ScenarioError(f"missing field '{key}'")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"field '{key}' must be an integer, got {v!r}")
    return v


def _as_float(d, key, default=None):
    if key not in d:
        if default is None:
            raise ScenarioError(f"missing field '{key}'")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"field '{key}' must be a number, got {v!r}")
    return float(v)


def _task_to_dict(t: Task) -> dict:
    ty = t.type
    out = {"id": t.id, "x": t.position[0], "y": t.position[1], "type": ty.name, "params": {}}
    if isinstance(ty, PointConstrained):
        out["heading"] = ty.entry_heading
    elif isinstance(ty, Line):
        out["params"] = {"endpoint_b": list(ty.endpoint_b)}
    elif isinstance(ty, Circle):
        out["params"] = {"radius": ty.radius, "sweeps": ty.sweeps}
    elif isinstance(ty, Area):
        out["params"] = {
            "width": ty.width,
            "height": ty.height,
            "orientation": ty.orientation,
            "lane_spacing": ty.lane_spacing,
        }
    return out


def _task_from_dict(i: int, d: dict) -> Task:
    where = f"tasks[{i}]"
    if not isinstance(d, dict):
        raise ScenarioError(f"{where} must be an object")
    try:
        tid = _as_int(d, "id")
        x, y = _as_float(d, "x"), _as_float(d, "y")
    except ScenarioError as e:
        raise ScenarioError(f"{where}: {e}") from None
    kind = d.get("type", "point")
    p = d.get("params") or {}
    try:
        if kind == "point":
            ty = PointFree()
        elif kind == "point_constrained":
            ty = PointConstrained(_as_float(d, "heading"))
        elif kind == "line":
            bx, by = p["endpoint_b"]
            ty = Line((float(bx), float(by)))
        elif kind == "circle":
            ty = Circle(_as_float(p, "radius"), _as_int(p, "sweeps", 1))
        elif kind == "area":
            ty = Area(
                _as_float(p, "width"),
                _as_float(p, "height"),
                _as_float(p, "orientation", 0.0),
                _as_float(p, "lane_spacing"),
            )
        else:
            raise ScenarioError(f"field 'type': unknown task type {kind!r}")
    except (KeyError, TypeError, ValueError) as e:
        msg = e.args[0] if isinstance(e, ScenarioError) else f"bad params: {e}"
        raise ScenarioError(f"{where}: {msg}") from None
    return Task(tid, (x, y), ty)


# ---------------------------------------------------------------------------
# random scenarios
# ---------------------------------------------------------------------------

def _inside(p, side):
    return 0.0 <= p[0] <= side and 0.0 <= p[1] <= side


def _draw_type(kind: str, rng, side: float, R: float, pos):
    if kind == "point":
        return PointFree(), pos
    if kind == "point_constrained":
        return PointConstrained(float(rng.uniform(0.0, 2 * math.pi))), pos
    if kind == "line":
        length = float(rng.uniform(200.0, 500.0))
        ang = float(rng.uniform(0.0, 2 * math.pi))
        b = (pos[0] + length * math.cos(ang), pos[1] + length * math.sin(ang))
        return (Line(b), pos) if _inside(b, side) else (None, pos)
    if kind == "circle":
        r = float(rng.uniform(R, 2 * R))
        if not (r <= pos[0] <= side - r and r <= pos[1] <= side - r):
            return None, pos
        return Circle(r, 1), pos
    if kind == "area":
        spacing = 2 * R
        lanes = int(rng.integers(2, 4))
        ty = Area(float(rng.uniform(200.0, 400.0)), spacing * (lanes - 1), float(rng.uniform(0.0, math.pi)), spacing)
        tmp = Task(-1, pos, ty)
        if all(_inside(p, side) for p, _ in entry_options(tmp)):
            return ty, pos
        return None, pos
    raise ScenarioError(f"unknown task type {kind!r}")


def random_scenario(
    seed: int,
    K: int,
    N: int,
    area_side: float = DEFAULT_AREA_SIDE,
    type_mix: Optional[Dict[str, float]] = None,
    *,
    turn_radius: float = DEFAULT_TURN_RADIUS,
    uav_speed: float = DEFAULT_SPEED,
    base: Pose = Pose(0.0, 0.0, 0.0),
) -> Scenario:
    """Uniform random tasks in ``[0, area_side]^2``, reproducible from ``seed``."""
    if K >= N:
        raise ValueError(f"need K < N, got K={K}, N={N}")
    if not area_side > 0:
        raise ValueError("area_side must be positive")
    mix = dict(type_mix or {"point": 1.0})
    unknown = set(mix) - set(TYPE_NAMES)
    if unknown:
        raise ValueError(f"unknown task types {sorted(unknown)}")
    if abs(sum(mix.values()) - 1.0) > 1e-9 or min(mix.values()) < 0:
        raise ValueError("type_mix proportions must be nonnegative and sum to 1")
    names = sorted(mix)
    probs = np.array([mix[n] for n in names])
    rng = np.random.default_rng(seed)
    kinds = rng.choice(len(names), size=N, p=probs)
    tasks = []
    for i, k in enumerate(kinds):
        while True:
            pos = (float(rng.uniform(0.0, area_side)), float(rng.uniform(0.0, area_side)))
            ty, pos = _draw_type(names[k], rng, area_side, turn_radius, pos)
            if ty is None:
                continue
            task = Task(i, pos, ty)
            try:
                best_entry(base, task, turn_radius)
            except Unreachable:
                continue
            tasks.append(task)
            break
    sc = Scenario(K, N, float(area_side), base, tasks, uav_speed, turn_radius, seed)
    sc.validate()
    return sc
