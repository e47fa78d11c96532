"""Offline simulated-annealing MTSP baseline with post-hoc Dubins smoothing."""
from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .geometry import Unreachable, cs_length
from .mission import Scenario, best_entry, plan_leg


class SmoothingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SaParams:
    t0: float = 50.0
    cooling: float = 0.99
    chain_length: int = 500
    t_min: float = 10.0
    max_iters: int = 1000  # number of chains
    seed: int = 0
    min_tasks_per_tour: int = 0

    def __post_init__(self):
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling must be in (0, 1)")
        if not 0.0 < self.t_min < self.t0:
            raise ValueError("need 0 < t_min < t0")
        if self.chain_length < 1 or self.max_iters < 1:
            raise ValueError("chain_length and max_iters must be >= 1")
        if self.min_tasks_per_tour < 0:
            raise ValueError("min_tasks_per_tour must be >= 0")


@dataclass
class TourSet:
    tours: List[List[int]]
    total_euclidean: float
    total_dubins: Optional[float] = None
    tour_dubins: List[float] = field(default_factory=list)
    energy_trace: List[Tuple[int, float, float]] = field(default_factory=list, repr=False)

    def task_ids(self) -> List[int]:
        return [t for tour in self.tours for t in tour]

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["chain", "temperature", "best_energy"])
            for row in self.energy_trace:
                w.writerow(row)


def distance_matrix(scenario: Scenario) -> Tuple[List[int], List[List[float]]]:
    """Task ids and the Euclidean matrix over [base] + tasks (index 0 is the base)."""
    tasks = sorted(scenario.tasks, key=lambda t: t.id)
    pts = [scenario.base.point] + [t.position for t in tasks]
    D = [[math.hypot(a[0] - b[0], a[1] - b[1]) for b in pts] for a in pts]
    return [t.id for t in tasks], D


def tour_length(D, tour: Sequence[int]) -> float:
    if not tour:
        return 0.0
    s = D[0][tour[0]] + D[tour[-1]][0]
    for a, b in zip(tour, tour[1:]):
        s += D[a][b]
    return s


def nearest_neighbor_tours(D, n: int, K: int) -> List[List[int]]:
    """UAVs take turns grabbing the nearest unvisited task from where they stand."""
    tours: List[List[int]] = [[] for _ in range(K)]
    left = set(range(1, n + 1))
    k = 0
    while left:
        here = tours[k][-1] if tours[k] else 0
        nxt = min(left, key=lambda j: (D[here][j], j))
        tours[k].append(nxt)
        left.remove(nxt)
        k = (k + 1) % K
    return tours


def _propose(tours, rng: random.Random, floor: int = 0):
    """One random neighbour as (tour index -> new tour) changes, or None if the move does not apply."""
    K = len(tours)
    move = rng.randrange(3)
    filled = [i for i in range(K) if tours[i]]
    if move == 0:  # 2-opt inside one tour
        cands = [i for i in filled if len(tours[i]) >= 2]
        if not cands:
            return None
        k = rng.choice(cands)
        t = tours[k]
        i, j = sorted(rng.sample(range(len(t)), 2))
        return {k: t[:i] + t[i:j + 1][::-1] + t[j + 1:]}
    if move == 1:  # relocate one task, possibly within its own tour
        if not filled:
            return None
        a = rng.choice(filled)
        b = rng.randrange(K)
        if a != b and len(tours[a]) <= floor:
            return None
        src = list(tours[a])
        task = src.pop(rng.randrange(len(src)))
        dst = src if a == b else list(tours[b])
        dst.insert(rng.randrange(len(dst) + 1), task)
        return {a: src} if a == b else {a: src, b: dst}
    if len(filled) < 2:  # swap between two tours
        return None
    a, b = rng.sample(filled, 2)
    ta, tb = list(tours[a]), list(tours[b])
    i, j = rng.randrange(len(ta)), rng.randrange(len(tb))
    ta[i], tb[j] = tb[j], ta[i]
    return {a: ta, b: tb}


def sa_solve(scenario: Scenario, params: SaParams = SaParams()) -> TourSet:
    """Anneal K tours over the scenario's tasks on Euclidean tour length.

    Tours may shrink to ``params.min_tasks_per_tour`` tasks (empty by
    default). Returns the best tours seen, with a per-chain
    (chain, temperature, best energy) trace.
    """
    ids, D = distance_matrix(scenario)
    n, K = len(ids), scenario.K
    if params.min_tasks_per_tour * K > n:
        raise ValueError(f"cannot give {K} tours {params.min_tasks_per_tour} tasks each from {n}")
    rng = random.Random(params.seed)
    tours = nearest_neighbor_tours(D, n, K)
    lens = [tour_length(D, t) for t in tours]
    energy = sum(lens)
    best, best_e = [list(t) for t in tours], energy
    trace = []
    T = params.t0
    chain = 0
    while T >= params.t_min and chain < params.max_iters:
        for _ in range(params.chain_length):
            change = _propose(tours, rng, params.min_tasks_per_tour)
            if change is None:
                continue
            new_lens = {k: tour_length(D, t) for k, t in change.items()}
            delta = sum(new_lens[k] - lens[k] for k in change)
            if delta <= 0.0 or rng.random() < math.exp(-delta / T):
                for k, t in change.items():
                    tours[k] = t
                    lens[k] = new_lens[k]
                energy = sum(lens)
                if energy < best_e - 1e-12:
                    best, best_e = [list(t) for t in tours], energy
        trace.append((chain, T, best_e))
        T *= params.cooling
        chain += 1
    return TourSet([[ids[j - 1] for j in t] for t in best], best_e, energy_trace=trace)


def smooth_with_dubins(tours: TourSet, scenario: Scenario) -> TourSet:
    """Fly each tour with Dubins legs, carrying the heading from leg to leg, and add the return."""
    R = scenario.turn_radius
    by_id = {t.id: t for t in scenario.tasks}
    base = scenario.base
    per_tour = []
    for k, tour in enumerate(tours.tours):
        pose = base
        total = 0.0
        for i, tid in enumerate(tour):
            task = by_id[tid]
            try:
                _, entry = best_entry(pose, task, R)
                path, cov = plan_leg(pose, entry, task, R)
            except Unreachable as e:
                raise SmoothingError(f"tour {k}, leg {i} to task {tid}: {e}") from None
            total += path.total_length + cov.length
            pose = cov.exit
        if tour:
            try:
                total += cs_length(pose, base.point, R)
            except Unreachable as e:
                raise SmoothingError(f"tour {k}, return leg: {e}") from None
        per_tour.append(total)
    return TourSet(
        [list(t) for t in tours.tours], tours.total_euclidean, sum(per_tour), per_tour, tours.energy_trace
    )
