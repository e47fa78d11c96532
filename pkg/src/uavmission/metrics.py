"""Per-run distance and planning-time statistics."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from .simulator import SimResult

# fields that depend on wall-clock time; kept out of the deterministic report
TIMING_FIELDS = ("planning_epochs", "total_planning_time", "average_planning_time", "first_decision_share")


@dataclass
class MetricsReport:
    total_distance: float
    per_uav_distance: List[float]
    parts: List[float]  # summed L1..L4 over UAVs
    task_counts: List[int]
    max_distance_difference: float
    max_task_count_difference: int
    min_tasks_per_uav: int
    completion_time: float
    failed: bool
    gap: Optional[float] = None
    planning_epochs: int = 0
    total_planning_time: float = 0.0
    average_planning_time: float = 0.0
    first_decision_share: float = 0.0
    extra: dict = field(default_factory=dict)

    def deterministic_dict(self) -> dict:
        d = asdict(self)
        for k in TIMING_FIELDS:
            d.pop(k)
        return d

    def timing_dict(self) -> dict:
        return {k: getattr(self, k) for k in TIMING_FIELDS}

    def write(self, metrics_path, timing_path=None) -> None:
        with open(metrics_path, "w") as f:
            json.dump(self.deterministic_dict(), f, indent=2, sort_keys=True)
        if timing_path is not None:
            with open(timing_path, "w") as f:
                json.dump(self.timing_dict(), f, indent=2, sort_keys=True)


def gap(total: float, baseline: float) -> float:
    return (total - baseline) / baseline


def collect_metrics(result: SimResult, baseline_total: Optional[float] = None) -> MetricsReport:
    dist = [u.odometer for u in result.per_uav]
    counts = [len(u.sequence) for u in result.per_uav]
    parts = [sum(u.parts[i] for u in result.per_uav) for i in range(4)]
    durations = [p.duration for p in result.planning_events]
    total_pt = sum(durations)
    total = sum(dist)
    return MetricsReport(
        total_distance=total,
        per_uav_distance=dist,
        parts=parts,
        task_counts=counts,
        max_distance_difference=max(dist) - min(dist) if dist else 0.0,
        max_task_count_difference=max(counts) - min(counts) if counts else 0,
        min_tasks_per_uav=min(counts) if counts else 0,
        completion_time=result.completion_time,
        failed=result.failed,
        gap=gap(total, baseline_total) if baseline_total else None,
        planning_epochs=len(durations),
        total_planning_time=total_pt,
        average_planning_time=total_pt / len(durations) if durations else 0.0,
        first_decision_share=100.0 * durations[0] / total_pt if total_pt > 0 else 0.0,
    )
