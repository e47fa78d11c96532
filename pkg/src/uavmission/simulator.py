"""Fixed-step mission simulator with new-task and UAV-damage emergencies."""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .allocation import METHODS, StrategyConfig, decision_epoch
from .clustering import ClusterModel, NoAvailableUav, build_model, classify_point
from .geometry import Point, cs_shortest, pose_along, sample_pose
from .mission import (
    PointFree,
    Scenario,
    Task,
    TaskState,
    TaskType,
    Uav,
    UavState,
    World,
)

L1, L2, L3, L4 = range(4)


@dataclass
class EventTimeline:
    """Emergency schedule for one run.

    Stochastic new tasks appear inside ``new_task_window`` by one Bernoulli
    draw per step, capped at ``new_task_cap``; ``scripted_new_tasks`` and
    ``damages`` fire at fixed times. A damage victim of ``None`` is drawn
    uniformly from the UAVs still flying.
    """

    new_task_window: Tuple[float, float] = (30.0, 50.0)
    new_task_cap: int = 0
    emergence_probability: Optional[float] = None
    scripted_new_tasks: List[Tuple[float, Point, TaskType]] = field(default_factory=list)
    damages: List[Tuple[float, Optional[int]]] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        a, b = self.new_task_window
        if not (0.0 <= a < b):
            raise ValueError("new_task_window must satisfy 0 <= start < end")
        if self.new_task_cap < 0:
            raise ValueError("new_task_cap must be >= 0")
        p = self.emergence_probability
        if p is not None and not 0.0 <= p <= 1.0:
            raise ValueError("emergence_probability must be in [0, 1]")
        if any(t < 0 for t, _ in self.damages) or any(s[0] < 0 for s in self.scripted_new_tasks):
            raise ValueError("event times must be >= 0")

    @classmethod
    def preset(cls, kind: str, seed: int = 0, new_tasks: int = 5) -> "EventTimeline":
        """The CLI presets: none, new-tasks, damage or both."""
        if kind == "none":
            return cls(seed=seed)
        rng = np.random.default_rng([seed, 7])
        damage = [(50.0 + 10.0 * float(rng.random()), None)]
        if kind == "new-tasks":
            return cls(new_task_cap=new_tasks, seed=seed)
        if kind == "damage":
            return cls(damages=damage, seed=seed)
        if kind == "both":
            return cls(new_task_cap=new_tasks, damages=damage, seed=seed)
        raise ValueError(f"unknown emergency preset {kind!r}")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    arrival_tolerance: float = 0.0
    strategy: StrategyConfig = METHODS["PRBDDG"]
    preprocess_clustering: bool = True
    loiter: bool = False
    max_time: float = 20000.0
    trace_interval: float = 1.0
    cluster_seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.arrival_tolerance < 0:
            raise ValueError("arrival_tolerance must be >= 0")
        if self.strategy.cluster_restricted and not self.preprocess_clustering:
            raise ValueError("a cluster-restricted strategy needs preprocess_clustering")

    @classmethod
    def for_method(cls, name: str, **kw) -> "SimConfig":
        cfg = METHODS[name]
        kw.setdefault("preprocess_clustering", cfg.cluster_restricted)
        return cls(strategy=cfg, **kw)


@dataclass
class PlanningEvent:
    time: float
    duration: float
    pairs: List[Tuple[int, int]]


@dataclass
class UavRecord:
    id: int
    parts: List[float]
    odometer: float
    loiter: float
    sequence: List[Tuple[int, float, float]]  # (task, assigned_at, completed_at)
    damaged_at: Optional[float]


@dataclass
class SimResult:
    per_uav: List[UavRecord]
    planning_events: List[PlanningEvent]
    task_timeline: Dict[int, Tuple[float, Optional[float], Optional[float], Optional[int]]]
    completion_time: float
    trace: List[tuple]
    events: List[tuple]
    failed: bool = False
    failure: str = ""
    model: Optional[ClusterModel] = None

    @property
    def total_distance(self) -> float:
        return sum(u.odometer for u in self.per_uav)

    def deterministic_dict(self) -> dict:
        """Everything except wall-clock planning durations."""
        return {
            "per_uav": [
                {
                    "id": u.id,
                    "parts": u.parts,
                    "odometer": u.odometer,
                    "loiter": u.loiter,
                    "sequence": u.sequence,
                    "damaged_at": u.damaged_at,
                }
                for u in self.per_uav
            ],
            "epochs": [(p.time, p.pairs) for p in self.planning_events],
            "tasks": {str(k): v for k, v in sorted(self.task_timeline.items())},
            "completion_time": self.completion_time,
            "events": self.events,
            "failed": self.failed,
            "failure": self.failure,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.deterministic_dict(), sort_keys=True).encode()
        blob += repr(self.trace).encode()
        return hashlib.sha256(blob).hexdigest()

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["t", "uav_id", "x", "y", "theta", "state", "odometer"])
            w.writerows(self.trace)

    def write_events(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["time", "kind", "uav_id", "task_id", "detail"])
            for t, kind, uav, task, detail in self.events:
                w.writerow([repr(t), kind, "" if uav is None else uav, "" if task is None else task, detail])


# ---------------------------------------------------------------------------
# emergency handlers
# ---------------------------------------------------------------------------

def inject_new_task(world: World, model: Optional[ClusterModel], position: Point, type: TaskType = None) -> Task:
    """Add an unassigned task now and bind it to the nearest active cluster."""
    task = Task(world.next_task_id(), (float(position[0]), float(position[1])), type or PointFree())
    task.created_at = world.now
    detail = ""
    if model is not None:
        c = classify_point(task.position, model, only_active=True)
        model.membership[task.id] = c
        detail = f"cluster={c}"
    world.tasks[task.id] = task
    world.log("new_task", None, task.id, detail)
    return task


def inject_damage(world: World, model: Optional[ClusterModel], victim: int, now: float) -> World:
    """Lose a UAV: free its task and move its cluster's open tasks to surviving clusters."""
    uav = next((u for u in world.uavs if u.id == victim), None)
    if uav is None:
        raise ValueError(f"no UAV {victim}")
    if uav.state is UavState.DAMAGED:
        world.log("damage", victim, None, "ignored: already damaged")
        return world
    held = uav.current_task
    uav.damage(now)
    world.log("damage", victim, None, f"x={uav.pose.x!r};y={uav.pose.y!r}")
    if held is not None and world.tasks[held].state is TaskState.ASSIGNED:
        world.tasks[held].release()
        world.log("release", victim, held)
    if model is not None:
        c = model.cluster_of_uav(victim)
        if c is not None:
            model.active[c] = False
            for tid in sorted(world.tasks):
                task = world.tasks[tid]
                if task.state is TaskState.UNASSIGNED and model.membership.get(tid) == c:
                    new = classify_point(task.position, model, only_active=True)
                    model.membership[tid] = new
                    world.log("reassign", model.uav_of_cluster.get(new), tid, f"cluster={new}")
    return world


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------

def _advance_path(uav: Uav, length: float, step: float, tol: float):
    """Move ``step`` metres along a path of ``length``; returns (distance flown, arrived)."""
    remaining = length - uav.progress
    if remaining <= max(tol, step * (1.0 + 1e-9)):
        uav.progress = length
        return max(remaining, 0.0), True
    uav.progress += step
    return step, False


def run(scenario: Scenario, cfg: SimConfig = SimConfig(), timeline: EventTimeline = EventTimeline()) -> SimResult:
    """Simulate one mission until every task is done and the survivors are home."""
    scenario.validate()
    R = scenario.turn_radius
    dt = cfg.dt
    base = scenario.base
    tasks = {t.id: t for t in scenario.fresh_tasks()}
    uavs = [Uav(k, base, scenario.uav_speed, R) for k in range(scenario.K)]
    world = World(tasks, uavs, base, R)
    model = None
    if cfg.preprocess_clustering:
        model = build_model(list(tasks.values()), {u.id: u.pose for u in uavs}, R, seed=cfg.cluster_seed)
        for u in uavs:
            u.cluster = model.cluster_of_uav(u.id)

    rng = np.random.default_rng(timeline.seed)
    w0, w1 = timeline.new_task_window
    cap = timeline.new_task_cap
    p_emerge = timeline.emergence_probability
    if p_emerge is None:
        p_emerge = min(1.0, cap * dt / (w1 - w0)) if cap else 0.0
    scripted = sorted(timeline.scripted_new_tasks, key=lambda s: s[0])
    damages = sorted(timeline.damages, key=lambda d: d[0])
    emerged = 0
    side = scenario.area_side

    planning: List[PlanningEvent] = []
    trace: List[tuple] = []
    sample_every = max(1, int(round(cfg.trace_interval / dt)))
    failed, failure = False, ""
    homing = False
    step = 0
    _sample(trace, world, 0.0)

    def pending_emergence(now):
        return bool(scripted) or (emerged < cap and p_emerge > 0 and now < w1)

    while True:
        now = step * dt
        world.now = now
        if now > cfg.max_time:
            failed, failure = True, f"time limit {cfg.max_time} s reached"
            break

        # 1. emergencies due this step
        try:
            while scripted and scripted[0][0] <= now + 1e-9:
                _, pos, ty = scripted.pop(0)
                inject_new_task(world, model, pos, ty)
            if w0 <= now < w1 and emerged < cap and not homing:
                if rng.random() < p_emerge:
                    pos = (float(rng.uniform(0, side)), float(rng.uniform(0, side)))
                    inject_new_task(world, model, pos, PointFree())
                    emerged += 1
            while damages and damages[0][0] <= now + 1e-9:
                _, victim = damages.pop(0)
                if homing:
                    continue  # mission already over
                alive = [u.id for u in world.alive()]
                if victim is None:
                    if not alive:
                        continue
                    victim = alive[int(rng.integers(len(alive)))]
                inject_damage(world, model, victim, now)
        except NoAvailableUav as e:
            failed, failure = True, str(e)
            break

        alive = world.alive()
        outstanding = any(t.state is not TaskState.COMPLETED for t in world.tasks.values())
        if not alive:
            if outstanding or pending_emergence(now):
                failed, failure = True, "no surviving UAVs with tasks outstanding"
            break

        # 2. one decision epoch for the UAVs idle at the start of the step
        if not homing and any(u.state is UavState.IDLE for u in alive) and world.unassigned():
            t0 = time.perf_counter()
            a = decision_epoch(world, model, cfg.strategy)
            took = time.perf_counter() - t0
            if a.pairs:
                planning.append(PlanningEvent(now, took, list(a.pairs)))

        if not homing and not outstanding and not pending_emergence(now):
            homing = True
            for u in alive:
                u.homing = True
                u.current_path = cs_shortest(u.pose, base.point, R)
                u.progress = 0.0

        # 3. advance everyone by one step; events are stamped at the end of the step
        world.now = t_end = (step + 1) * dt
        for u in alive:
            stride = u.speed * dt
            if u.homing:
                if u.current_path is None:
                    continue
                flown, done = _advance_path(u, u.current_path.total_length, stride, cfg.arrival_tolerance)
                u.fly(flown, L4)
                if done:
                    u.pose = u.current_path.end
                    u.current_path = None
                else:
                    u.pose = sample_pose(u.current_path, u.progress)
            elif u.state is UavState.IN_TRANSIT:
                path = u.current_path
                flown, done = _advance_path(u, path.total_length, stride, cfg.arrival_tolerance)
                u.fly(flown, L1 if u.legs == 0 else L2)
                if done:
                    u.pose = path.end
                    u.arrive()
                    world.log("arrive", u.id, u.current_task)
                    if u.coverage.length == 0.0:
                        _finish(world, u)
                else:
                    u.pose = sample_pose(path, u.progress)
            elif u.state is UavState.BUSY:
                cov = u.coverage
                flown, done = _advance_path(u, cov.length, stride, 0.0)
                u.fly(flown, L3)
                if done:
                    u.pose = cov.exit
                    _finish(world, u)
                else:
                    u.pose = pose_along(cov.segments, u.progress)
            elif u.state is UavState.IDLE and cfg.loiter:
                u.loiter += stride

        finished = homing and all(u.current_path is None for u in alive)
        if (step + 1) % sample_every == 0 or finished:
            _sample(trace, world, t_end)
        if finished:
            break
        step += 1

    return _result(world, planning, trace, world.now, failed, failure, model)


def _sample(trace: List[tuple], world: World, t: float) -> None:
    for u in world.uavs:
        state = "HOMING" if u.homing else u.state.name
        trace.append((round(t, 9), u.id, u.pose.x, u.pose.y, u.pose.theta, state, u.odometer))


def _finish(world: World, u: Uav) -> None:
    task = world.tasks[u.current_task]
    task.complete(world.now)
    world.log("complete", u.id, task.id)
    u.finish()


def _result(world, planning, trace, end_time, failed, failure, model) -> SimResult:
    per_uav = []
    for u in world.uavs:
        done = [t for t in world.tasks.values() if t.completed_by == u.id]
        done.sort(key=lambda t: (t.completed_at, t.id))
        per_uav.append(
            UavRecord(
                u.id,
                list(u.parts),
                u.odometer,
                u.loiter,
                [(t.id, t.assigned_at, t.completed_at) for t in done],
                u.damaged_at,
            )
        )
    timeline = {
        t.id: (t.created_at, t.assigned_at, t.completed_at, t.completed_by) for t in world.tasks.values()
    }
    return SimResult(per_uav, planning, timeline, end_time, trace, list(world.events), failed, failure, model)
