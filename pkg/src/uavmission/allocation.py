"""Cost matrices and single-epoch assignment strategies.

A decision epoch gathers the idle UAVs, prices every (UAV, candidate task)
pair and hands the matrix to one of three solvers. The method names used in
the comparisons are (strategy, metric, cluster restriction) triples; see
:data:`METHODS`.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .clustering import ClusterModel
from .geometry import Unreachable
from .mission import (
    Entry,
    Task,
    Uav,
    UavState,
    World,
    best_entry,
    coverage_length,
    nearest_entry_euclidean,
    plan_leg,
)

DUBINS = "dubins"
EUCLIDEAN = "euclidean"
STRATEGIES = ("greedy", "hungarian", "auction")


class NoFeasibleTask(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# low-level solvers on plain arrays
# ---------------------------------------------------------------------------

def _finite_copy(cost: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    cost = np.asarray(cost, dtype=float)
    finite = np.isfinite(cost)
    big = float(np.abs(cost[finite]).sum()) + 1.0 if finite.any() else 1.0
    return np.where(finite, cost, big), finite


def _hungarian_wide(a: np.ndarray) -> np.ndarray:
    """Shortest-augmenting-path Hungarian for n <= m; returns the column of each row."""
    n, m = a.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j]: row (1-based) matched to column j
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, math.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], math.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_cols = np.flatnonzero(used)
            u[p[used_cols]] += delta
            v[used_cols] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    cols = np.full(n, -1, dtype=int)
    for j in range(1, m + 1):
        if p[j]:
            cols[p[j] - 1] = j - 1
    return cols


def hungarian(cost) -> List[Tuple[int, int]]:
    """Minimum-cost matching of an n x m matrix as (row, col) pairs.

    Infinite entries are forbidden pairs: they are priced above the sum of
    all finite entries and any match landing on one is dropped.
    """
    a, finite = _finite_copy(cost)
    if a.size == 0:
        return []
    n, m = a.shape
    if n <= m:
        cols = _hungarian_wide(a)
        pairs = [(i, int(cols[i])) for i in range(n)]
    else:
        rows = _hungarian_wide(a.T)
        pairs = sorted((int(rows[j]), j) for j in range(m))
    return [(i, j) for i, j in pairs if finite[i, j]]


def _auction_phase(benefit, eps, prices):
    n, m = benefit.shape
    owner = np.full(m, -1, dtype=int)
    assigned = np.full(n, -1, dtype=int)
    queue = deque(range(n))
    while queue:
        i = queue.popleft()
        vals = benefit[i] - prices
        j = int(np.argmax(vals))
        best = vals[j]
        if m > 1:
            vals[j] = -math.inf
            second = float(vals.max())
        else:
            second = best
        prices[j] += best - second + eps
        prev = owner[j]
        owner[j] = i
        assigned[i] = j
        if prev >= 0:
            assigned[prev] = -1
            queue.append(prev)
    return assigned


def auction(cost, epsilon: float) -> List[Tuple[int, int]]:
    """Forward auction (persons = rows bid in ascending order); within n*epsilon of optimal.

    Square problems run epsilon-scaling phases down to ``epsilon``; rectangular
    ones run a single phase from zero prices so unassigned objects stay at
    the lowest price, which keeps the bound valid.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    a, finite = _finite_copy(cost)
    if a.size == 0:
        return []
    transpose = a.shape[0] > a.shape[1]
    if transpose:
        a = a.T
    benefit = -a
    n, m = benefit.shape
    prices = np.zeros(m)
    if n == m:
        spread = float(benefit.max() - benefit.min())
        eps = max(spread / 2.0, epsilon)
        while eps > epsilon:
            _auction_phase(benefit, eps, prices)
            eps = max(eps / 5.0, epsilon)
    assigned = _auction_phase(benefit, epsilon, prices)
    if transpose:
        pairs = sorted((int(assigned[j]), j) for j in range(n))
    else:
        pairs = [(i, int(assigned[i])) for i in range(n)]
    return [(i, j) for i, j in pairs if finite[i, j]]


def greedy_select(row: Sequence[float]) -> int:
    """Index of the cheapest finite entry; ties go to the lowest index."""
    best, best_v = None, math.inf
    for j, v in enumerate(row):
        if v < best_v:
            best, best_v = j, v
    if best is None:
        raise NoFeasibleTask("no finite entry in row")
    return best


# ---------------------------------------------------------------------------
# cost matrices
# ---------------------------------------------------------------------------

@dataclass
class CostMatrix:
    rows: List[int]
    cols: List[int]
    entries: np.ndarray
    metric: str
    choices: Dict[Tuple[int, int], Entry] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.rows or not self.cols

    def reduced(self) -> "CostMatrix":
        """Drop rows and columns with no finite entry (the solver-ready matrix)."""
        if self.empty:
            return self
        fin = np.isfinite(self.entries)
        r = np.flatnonzero(fin.any(axis=1))
        c = np.flatnonzero(fin.any(axis=0))
        return CostMatrix(
            [self.rows[i] for i in r],
            [self.cols[j] for j in c],
            self.entries[np.ix_(r, c)],
            self.metric,
            self.choices,
        )


def pair_cost(uav: Uav, task: Task, metric: str, R: float) -> Tuple[float, Optional[Entry]]:
    """Connection plus coverage length, and the entry it was priced at."""
    if metric == DUBINS:
        try:
            length, entry = best_entry(uav.pose, task, R)
        except Unreachable:
            return math.inf, None
    elif metric == EUCLIDEAN:
        length, entry = nearest_entry_euclidean(uav.pose, task)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return length + coverage_length(task, R), entry


def build_cost_matrix(
    idle_uavs: Sequence[Uav],
    candidate_tasks: Sequence[Task],
    metric: str,
    R: float,
    allowed: Optional[Dict[int, Set[int]]] = None,
) -> CostMatrix:
    """Price every (UAV, task) pair; pairs outside ``allowed`` stay infinite."""
    rows = [u.id for u in idle_uavs]
    cols = [t.id for t in candidate_tasks]
    entries = np.full((len(rows), len(cols)), math.inf)
    choices = {}
    for r, uav in enumerate(idle_uavs):
        ok = None if allowed is None else allowed.get(uav.id, set())
        for c, task in enumerate(candidate_tasks):
            if ok is not None and task.id not in ok:
                continue
            cost, entry = pair_cost(uav, task, metric, R)
            entries[r, c] = cost
            if entry is not None:
                choices[(uav.id, task.id)] = entry
    return CostMatrix(rows, cols, entries, metric, choices)


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrategyConfig:
    strategy: str = "greedy"
    metric: str = DUBINS
    cluster_restricted: bool = False
    auction_epsilon: Optional[float] = None
    cluster_fallback: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.metric not in (DUBINS, EUCLIDEAN):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.auction_epsilon is not None and not self.auction_epsilon > 0:
            raise ValueError("auction_epsilon must be positive")


METHODS: Dict[str, StrategyConfig] = {
    "GBA": StrategyConfig("greedy", EUCLIDEAN, False),
    "HBA": StrategyConfig("hungarian", EUCLIDEAN, False),
    "AA": StrategyConfig("auction", EUCLIDEAN, False),
    "RBDDG": StrategyConfig("greedy", DUBINS, False),
    "RBDDH": StrategyConfig("hungarian", DUBINS, False),
    "PRBDDG": StrategyConfig("greedy", DUBINS, True),
    "PRBDDH": StrategyConfig("hungarian", DUBINS, True),
}


@dataclass
class Assignment:
    pairs: List[Tuple[int, int]] = field(default_factory=list)
    unassigned_uavs: List[int] = field(default_factory=list)
    costs: Dict[Tuple[int, int], float] = field(default_factory=dict)
    fallback: Set[int] = field(default_factory=set)


def hungarian_solve(m: CostMatrix) -> Assignment:
    return _solve(m, hungarian)


def auction_solve(m: CostMatrix, epsilon: Optional[float] = None) -> Assignment:
    if epsilon is None:
        fin = m.entries[np.isfinite(m.entries)]
        epsilon = 1e-3 * float(fin.mean()) if fin.size and fin.mean() > 0 else 1e-3
    return _solve(m, lambda c: auction(c, epsilon))


def _solve(m: CostMatrix, solver) -> Assignment:
    out = Assignment()
    if m.empty:
        out.unassigned_uavs = list(m.rows)
        return out
    for i, j in solver(m.entries):
        pair = (m.rows[i], m.cols[j])
        out.pairs.append(pair)
        out.costs[pair] = float(m.entries[i, j])
    matched = {u for u, _ in out.pairs}
    out.unassigned_uavs = [u for u in m.rows if u not in matched]
    return out


def _candidates(uav: Uav, pool: List[Task], model: Optional[ClusterModel], cfg: StrategyConfig):
    """Tasks this UAV may bid on, and whether the cluster fallback kicked in."""
    if not cfg.cluster_restricted or model is None:
        return pool, False
    mine = model.cluster_of_uav(uav.id)
    own = [t for t in pool if model.membership.get(t.id) == mine]
    if own or not cfg.cluster_fallback:
        return own, False
    by_cluster: Dict[int, List[Task]] = {}
    for t in pool:
        c = model.membership.get(t.id)
        if c is not None and model.active.get(c, True):
            by_cluster.setdefault(c, []).append(t)
    if not by_cluster:
        return [], False
    x, y = uav.pose.x, uav.pose.y
    nearest = min(
        by_cluster,
        key=lambda c: (math.hypot(model.centroids[c][0] - x, model.centroids[c][1] - y), c),
    )
    return by_cluster[nearest], True


def _commit(world: World, uav: Uav, task: Task, entry: Optional[Entry], cost: float, cfg, fallback: bool) -> bool:
    R = world.turn_radius
    if entry is None:
        entry = best_entry(uav.pose, task, R)[1]
    try:
        path, cov = plan_leg(uav.pose, entry, task, R)
    except Unreachable:
        return False
    task.assign(uav.id, world.now)
    uav.depart(task.id, path, cov)
    detail = f"cost={cost!r};strategy={cfg.strategy};metric={cfg.metric}"
    if fallback:
        detail += ";fallback"
    world.log("assign", uav.id, task.id, detail)
    return True


def decision_epoch(world: World, model: Optional[ClusterModel], cfg: StrategyConfig) -> Assignment:
    """Assign unassigned tasks to the currently idle UAVs and start their legs."""
    R = world.turn_radius
    idle = sorted(
        (u for u in world.uavs if u.state is UavState.IDLE and not u.homing),
        key=lambda u: u.id,
    )
    pool = sorted(world.unassigned(), key=lambda t: t.id)
    out = Assignment()
    if not idle or not pool:
        out.unassigned_uavs = [u.id for u in idle]
        return out
    tasks = {t.id: t for t in pool}
    uavs = {u.id: u for u in idle}

    if cfg.strategy == "greedy":
        claimed: Set[int] = set()
        for uav in idle:
            avail = [t for t in pool if t.id not in claimed]
            cands, fb = _candidates(uav, avail, model, cfg)
            if not cands:
                out.unassigned_uavs.append(uav.id)
                continue
            m = build_cost_matrix([uav], cands, cfg.metric, R)
            try:
                j = greedy_select(m.entries[0])
            except NoFeasibleTask:
                out.unassigned_uavs.append(uav.id)
                continue
            task = cands[j]
            cost = float(m.entries[0, j])
            if _commit(world, uav, task, m.choices.get((uav.id, task.id)), cost, cfg, fb):
                claimed.add(task.id)
                out.pairs.append((uav.id, task.id))
                out.costs[(uav.id, task.id)] = cost
                if fb:
                    out.fallback.add(uav.id)
            else:
                out.unassigned_uavs.append(uav.id)
        return out

    allowed: Dict[int, Set[int]] = {}
    fell_back: Set[int] = set()
    for uav in idle:
        cands, fb = _candidates(uav, pool, model, cfg)
        allowed[uav.id] = {t.id for t in cands}
        if fb:
            fell_back.add(uav.id)
    col_ids = sorted(set().union(*allowed.values()))
    row_uavs = [u for u in idle if allowed[u.id]]
    m = build_cost_matrix(row_uavs, [tasks[i] for i in col_ids], cfg.metric, R, allowed).reduced()
    if cfg.strategy == "hungarian":
        sol = hungarian_solve(m)
    else:
        sol = auction_solve(m, cfg.auction_epsilon)
    for uid, tid in sol.pairs:
        uav, task = uavs[uid], tasks[tid]
        cost = sol.costs[(uid, tid)]
        fb = uid in fell_back
        if _commit(world, uav, task, m.choices.get((uid, tid)), cost, cfg, fb):
            out.pairs.append((uid, tid))
            out.costs[(uid, tid)] = cost
            if fb:
                out.fallback.add(uid)
    matched = {u for u, _ in out.pairs}
    out.unassigned_uavs = [u.id for u in idle if u.id not in matched]
    return out
