"""Single runs, the method comparison bench and cost-function timing."""
from __future__ import annotations

import csv
import math
import os
import statistics
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .allocation import METHODS
from .geometry import Pose, cs_length, csc_length
from .metrics import MetricsReport, collect_metrics
from .mission import Scenario, random_scenario
from .sa import SaParams, sa_solve, smooth_with_dubins
from .simulator import EventTimeline, SimConfig, run

ALL_METHODS = ("SA",) + tuple(METHODS)
EMERGENCY_PRESETS = ("none", "new-tasks", "damage", "both")

SUMMARY_COLUMNS = (
    "method",
    "average_total_distance_m",
    "average_gap",
    "maximum_distance_difference_m",
    "maximum_task_number_difference",
    "average_total_planning_time_s",
    "average_planning_time_s",
    "first_decision_time_share_pct",
)
RUN_COLUMNS = (
    "seed",
    "method",
    "total_distance_m",
    "gap",
    "max_distance_difference_m",
    "max_task_number_difference",
    "total_planning_time_s",
    "average_planning_time_s",
    "first_decision_time_share_pct",
    "failed",
    "failure",
)

# every UAV visits at least two tasks in the offline baseline
BENCH_SA_PARAMS = SaParams(min_tasks_per_tour=2)


def _check_method(method: str) -> None:
    if method not in ALL_METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(ALL_METHODS)}")


def solve_sa(scenario: Scenario, params: SaParams) -> tuple:
    """Anneal, smooth and wrap the baseline in the same report shape as a simulated run."""
    t0 = time.perf_counter()
    tours = smooth_with_dubins(sa_solve(scenario, params), scenario)
    took = time.perf_counter() - t0
    dist = list(tours.tour_dubins)
    counts = [len(t) for t in tours.tours]
    report = MetricsReport(
        total_distance=tours.total_dubins,
        per_uav_distance=dist,
        parts=[],
        task_counts=counts,
        max_distance_difference=max(dist) - min(dist),
        max_task_count_difference=max(counts) - min(counts),
        min_tasks_per_uav=min(counts),
        completion_time=0.0,
        failed=False,
        planning_epochs=1,
        total_planning_time=took,
        average_planning_time=took,
        first_decision_share=100.0,
        extra={"tours": tours.tours, "total_euclidean": tours.total_euclidean},
    )
    return tours, report


def simulate(scenario: Scenario, method: str, seed: int = 0, dt: float = 0.1,
             emergencies: str = "none", baseline: Optional[float] = None):
    cfg = SimConfig.for_method(method, dt=dt, cluster_seed=seed)
    result = run(scenario, cfg, EventTimeline.preset(emergencies, seed))
    return result, collect_metrics(result, baseline)


def run_single(scenario: Scenario, method: str, seed: int = 0, dt: float = 0.1,
               emergencies: str = "none", out: Optional[str] = None,
               sa_params: Optional[SaParams] = None):
    """One run of one method; writes its data files under ``out`` when given.

    Returns ``(report, result)`` where ``result`` is a SimResult or, for SA,
    the smoothed TourSet.
    """
    _check_method(method)
    if emergencies not in EMERGENCY_PRESETS:
        raise ValueError(f"unknown emergency preset {emergencies!r}")
    if method == "SA":
        if emergencies != "none":
            raise ValueError("the SA baseline is offline and takes no emergencies")
        params = sa_params or SaParams(seed=seed, min_tasks_per_tour=BENCH_SA_PARAMS.min_tasks_per_tour)
        tours, report = solve_sa(scenario, params)
        if out:
            os.makedirs(out, exist_ok=True)
            tours.write_trace(os.path.join(out, "energy.csv"))
            report.write(os.path.join(out, "metrics.json"), os.path.join(out, "timing.json"))
        return report, tours
    result, report = simulate(scenario, method, seed, dt, emergencies)
    if out:
        os.makedirs(out, exist_ok=True)
        result.write_trace(os.path.join(out, "trace.csv"))
        result.write_events(os.path.join(out, "events.csv"))
        report.write(os.path.join(out, "metrics.json"), os.path.join(out, "timing.json"))
    return report, result


@dataclass
class BenchPlan:
    methods: Sequence[str]
    seeds: Sequence[int]
    K: int = 4
    N: int = 25
    area_side: float = 2500.0
    type_mix: Optional[Dict[str, float]] = None
    out: Optional[str] = None
    dt: float = 0.1
    sa_min_tasks: int = BENCH_SA_PARAMS.min_tasks_per_tour

    def __post_init__(self):
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for m in self.methods:
            _check_method(m)
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be nonempty and distinct")

    @property
    def trials(self) -> int:
        return len(self.seeds)


@dataclass
class BenchReport:
    summary: List[dict]
    runs: List[dict]
    reports: Dict[str, List[MetricsReport]] = field(default_factory=dict, repr=False)

    def row(self, method: str) -> dict:
        return next(r for r in self.summary if r["method"] == method)

    def write(self, out: str) -> None:
        os.makedirs(out, exist_ok=True)
        _write_csv(os.path.join(out, "summary.csv"), SUMMARY_COLUMNS, self.summary)
        _write_csv(os.path.join(out, "runs.csv"), RUN_COLUMNS, self.runs)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return statistics.fmean(xs) if xs else None


def run_bench(plan: BenchPlan) -> BenchReport:
    """Every method on every seeded scenario, averaged per method."""
    order = [m for m in ALL_METHODS if m in plan.methods]
    reports: Dict[str, List[MetricsReport]] = {m: [] for m in order}
    runs = []
    for seed in plan.seeds:
        scenario = random_scenario(seed, plan.K, plan.N, plan.area_side, plan.type_mix)
        baseline = None
        for m in order:
            try:
                if m == "SA":
                    _, rep = solve_sa(scenario, SaParams(seed=seed, min_tasks_per_tour=plan.sa_min_tasks))
                    baseline = rep.total_distance
                else:
                    _, rep = simulate(scenario, m, seed, plan.dt, baseline=baseline)
            except Exception as e:  # a failing run is flagged, the bench goes on
                runs.append({c: None for c in RUN_COLUMNS} | {"seed": seed, "method": m, "failed": True,
                                                               "failure": f"{type(e).__name__}: {e}"})
                continue
            if m == "SA":
                rep.gap = 0.0
            reports[m].append(rep)
            runs.append({
                "seed": seed,
                "method": m,
                "total_distance_m": rep.total_distance,
                "gap": rep.gap,
                "max_distance_difference_m": rep.max_distance_difference,
                "max_task_number_difference": rep.max_task_count_difference,
                "total_planning_time_s": rep.total_planning_time,
                "average_planning_time_s": rep.average_planning_time,
                "first_decision_time_share_pct": rep.first_decision_share,
                "failed": rep.failed,
                "failure": "",
            })
    summary = []
    for m in order:
        ok = [r for r in reports[m] if not r.failed]
        summary.append({
            "method": m,
            "average_total_distance_m": _mean([r.total_distance for r in ok]),
            "average_gap": _mean([r.gap for r in ok]) if "SA" in order else None,
            "maximum_distance_difference_m": _mean([r.max_distance_difference for r in ok]),
            "maximum_task_number_difference": _mean([r.max_task_count_difference for r in ok]),
            "average_total_planning_time_s": _mean([r.total_planning_time for r in ok]),
            "average_planning_time_s": _mean([r.average_planning_time for r in ok]),
            "first_decision_time_share_pct": _mean([r.first_decision_share for r in ok]),
        })
    report = BenchReport(summary, runs, reports)
    if plan.out:
        report.write(plan.out)
    return report


# ---------------------------------------------------------------------------
# cost-function timing
# ---------------------------------------------------------------------------

def euclidean_length(p, q) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


@dataclass
class TimingRow:
    cost: str
    mean_seconds: float
    calls: int


def time_cost_functions(samples: int = 1000, seed: int = 0, repetitions: int = 50,
                        area_side: float = 2500.0, R: float = 80.0) -> List[TimingRow]:
    """Mean wall time per call of the Euclidean, CS and CSC distance costs.

    The three groups share the same point pairs; CS adds a start heading and
    CSC a goal heading on top.
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    rng = np.random.default_rng(seed)
    P = rng.uniform(0.0, area_side, (samples, 2))
    Q = rng.uniform(0.0, area_side, (samples, 2))
    H = rng.uniform(0.0, 2 * math.pi, (samples, 2))
    pts_p = [(float(x), float(y)) for x, y in P]
    pts_q = [(float(x), float(y)) for x, y in Q]
    starts = [Pose(p[0], p[1], float(h)) for p, h in zip(pts_p, H[:, 0])]
    goals = [Pose(q[0], q[1], float(h)) for q, h in zip(pts_q, H[:, 1])]

    groups = (
        ("Euclidean", euclidean_length, pts_p, pts_q),
        ("CS", lambda s, g: cs_length(s, g, R), starts, pts_q),
        ("CSC", lambda s, g: csc_length(s, g, R), starts, goals),
    )
    rows = []
    for name, fn, a, b in groups:
        pairs = list(zip(a, b))
        t0 = time.perf_counter()
        for _ in range(repetitions):
            for s, g in pairs:
                fn(s, g)
        took = time.perf_counter() - t0
        calls = repetitions * samples
        rows.append(TimingRow(name, took / calls, calls))
    return rows


def write_timing_csv(rows: Sequence[TimingRow], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cost", "mean_seconds", "calls"])
        for r in rows:
            w.writerow([r.cost, repr(r.mean_seconds), r.calls])


def load_scenario(path) -> Scenario:
    sc = Scenario.load(path)
    sc.validate()
    return sc
