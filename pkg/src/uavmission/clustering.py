"""K-means task clustering and nearest-centroid classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence

import numpy as np

from .geometry import Point, Pose, Unreachable, cs_length


class NoAvailableUav(RuntimeError):
    """Every cluster is inactive; nobody can take the task."""


@dataclass
class ClusterModel:
    centroids: List[Point]
    membership: Dict[Hashable, int]
    uav_of_cluster: Dict[int, int] = field(default_factory=dict)
    active: Dict[int, bool] = field(default_factory=dict)
    objective_history: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.active:
            self.active = {i: True for i in range(len(self.centroids))}

    @property
    def k(self) -> int:
        return len(self.centroids)

    def cluster_of_uav(self, uav_id: int) -> Optional[int]:
        for c, u in self.uav_of_cluster.items():
            if u == uav_id:
                return c
        return None

    def members(self, cluster: int) -> List[Hashable]:
        return [t for t, c in self.membership.items() if c == cluster]


def _objective(X, C, labels):
    return float(np.sum((X - C[labels]) ** 2))


def _plusplus(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # fewer distinct points than clusters; empty-cluster repair sorts it out
            rest = [i for i in range(n) if i not in chosen]
            nxt = int(rest[int(rng.integers(len(rest)))])
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[chosen].copy()


def _assign(X, C):
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _repair_empty(X, C, labels, k):
    for c in range(k):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=k)
        big = int(np.argmax(counts))
        idx = np.flatnonzero(labels == big)
        far = idx[int(np.argmax(np.sum((X[idx] - C[big]) ** 2, axis=1)))]
        labels[far] = c
        C[c] = X[far]
        C[big] = X[labels == big].mean(axis=0)
    return labels


def kmeans(
    points: Sequence[Point],
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    ids: Optional[Sequence[Hashable]] = None,
) -> ClusterModel:
    """Lloyd iterations from k-means++ seeding.

    Clusters are relabelled by ascending centroid (x, then y) so the output
    does not depend on the seeding order. ``objective_history`` holds the
    within-cluster sum of squares after every assignment step.
    """
    X = np.asarray(points, dtype=float).reshape(-1, 2)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} must be in [1, {n}]")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    ids = list(range(n)) if ids is None else list(ids)
    rng = np.random.default_rng(seed)
    C = _plusplus(X, k, rng)
    labels = _repair_empty(X, C, _assign(X, C), k)
    history = [_objective(X, C, labels)]
    for _ in range(max_iters):
        C = np.array([X[labels == c].mean(axis=0) for c in range(k)])
        new = _repair_empty(X, C, _assign(X, C), k)
        C = np.array([X[new == c].mean(axis=0) for c in range(k)])
        history.append(_objective(X, C, new))
        if np.array_equal(new, labels):
            labels = new
            break
        labels = new
    C = np.array([X[labels == c].mean(axis=0) for c in range(k)])
    order = sorted(range(k), key=lambda c: (C[c, 0], C[c, 1]))
    relabel = {old: new for new, old in enumerate(order)}
    centroids = [(float(C[c, 0]), float(C[c, 1])) for c in order]
    membership = {ids[i]: relabel[int(labels[i])] for i in range(n)}
    return ClusterModel(centroids, membership, objective_history=history)


def map_clusters_to_uavs(
    centroids: Sequence[Point],
    uav_poses: Dict[int, Pose],
    R: float,
) -> Dict[int, int]:
    """Cluster -> UAV bijection minimising total CS-Dubins distance to centroids.

    UAVs sharing a pose are interchangeable; among them clusters go out in
    index order, so a common base yields the identity mapping.
    """
    from .allocation import hungarian

    if len(centroids) != len(uav_poses):
        raise ValueError(f"{len(centroids)} centroids but {len(uav_poses)} UAVs")
    uav_ids = sorted(uav_poses)
    cost = np.empty((len(uav_ids), len(centroids)))
    for r, u in enumerate(uav_ids):
        for c, pt in enumerate(centroids):
            try:
                cost[r, c] = cs_length(uav_poses[u], pt, R)
            except Unreachable:
                cost[r, c] = math.inf
    pairs = dict(hungarian(cost))
    groups: Dict[tuple, List[int]] = {}
    for r, u in enumerate(uav_ids):
        p = uav_poses[u]
        groups.setdefault((p.x, p.y, p.theta), []).append(r)
    for rows in groups.values():
        cols = sorted(pairs[r] for r in rows)
        for r, c in zip(rows, cols):
            pairs[r] = c
    return {pairs[r]: uav_ids[r] for r in range(len(uav_ids))}


def classify_point(p: Point, model: ClusterModel, only_active: bool = True) -> int:
    best, best_d = None, math.inf
    for i, (cx, cy) in enumerate(model.centroids):
        if only_active and not model.active.get(i, True):
            continue
        d = math.hypot(p[0] - cx, p[1] - cy)
        if d < best_d:
            best, best_d = i, d
    if best is None:
        raise NoAvailableUav("no active cluster left")
    return best


def build_model(tasks, uav_poses: Dict[int, Pose], R: float, seed: int = 0, max_iters: int = 100) -> ClusterModel:
    """Cluster the tasks into one group per UAV and bind each group to a UAV."""
    tasks = sorted(tasks, key=lambda t: t.id)
    model = kmeans([t.position for t in tasks], len(uav_poses), seed, max_iters, ids=[t.id for t in tasks])
    model.uav_of_cluster = map_clusters_to_uavs(model.centroids, uav_poses, R)
    return model
