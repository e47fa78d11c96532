"""Planar Dubins geometry: CS and CSC path construction and arc-length sampling.

Angles are radians, counterclockwise from +x. Every heading is kept in
[0, 2*pi). Left turns have curvature +1/R, right turns -1/R.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# relative slack on "goal inside the turning circle" and inner-tangent tests
FEASIBILITY_SLACK = 1e-12
# sweeps this close to 2*pi are float noise around a zero sweep
_SWEEP_SNAP = 1e-10

Point = Tuple[float, float]


class Unreachable(Exception):
    """No admissible word reaches the goal from the start."""


def normalize_angle(theta: float) -> float:
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    a = math.fmod(theta, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:
        a = 0.0
    return a


def _sweep(a: float) -> float:
    a = normalize_angle(a)
    if TWO_PI - a < _SWEEP_SNAP:
        return 0.0
    return a


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        t = self.theta
        if not (0.0 <= t < TWO_PI):
            object.__setattr__(self, "theta", normalize_angle(t))

    @property
    def point(self) -> Point:
        return (self.x, self.y)


class Turn(enum.Enum):
    LEFT = 1
    RIGHT = -1

    @property
    def sign(self) -> int:
        return self.value

    @property
    def letter(self) -> str:
        return "L" if self is Turn.LEFT else "R"


_TURN_OF = {"L": Turn.LEFT, "R": Turn.RIGHT}


@dataclass(frozen=True)
class Segment:
    """One piece of a flyable path.

    ``kind`` is ``"L"``, ``"R"`` or ``"S"``. Arcs carry their own radius so
    coverage circles wider than the turn radius reuse the same type.
    """

    kind: str
    length: float
    start: Pose
    radius: float = 0.0

    def pose_at(self, s: float) -> Pose:
        st = self.start
        if self.kind == "S":
            return Pose(st.x + s * math.cos(st.theta), st.y + s * math.sin(st.theta), st.theta)
        sgn = 1.0 if self.kind == "L" else -1.0
        r = self.radius
        th = st.theta + sgn * s / r
        return Pose(
            st.x + sgn * r * (math.sin(th) - math.sin(st.theta)),
            st.y - sgn * r * (math.cos(th) - math.cos(st.theta)),
            th,
        )

    def end(self) -> Pose:
        return self.pose_at(self.length)


def chain_segments(start: Pose, pieces: Sequence[Tuple[str, float, float]]) -> Tuple[Segment, ...]:
    """Build segments from ``(kind, length, radius)`` triples, each starting where the last ended."""
    out = []
    pose = start
    for kind, length, radius in pieces:
        seg = Segment(kind, length, pose, radius)
        out.append(seg)
        pose = seg.end()
    return tuple(out)


def pose_along(segments: Sequence[Segment], s: float) -> Pose:
    for seg in segments:
        if s <= seg.length:
            return seg.pose_at(s)
        s -= seg.length
    last = segments[-1]
    return last.end()


@dataclass(frozen=True)
class DubinsPath:
    word: str
    segments: Tuple[Segment, ...]
    turn_radius: float
    total_length: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_length", sum(s.length for s in self.segments))

    @property
    def start(self) -> Pose:
        return self.segments[0].start

    @property
    def end(self) -> Pose:
        return self.segments[-1].end()

    @property
    def lengths(self) -> Tuple[float, ...]:
        return tuple(s.length for s in self.segments)


def _check_radius(R: float) -> None:
    if not (R > 0.0 and math.isfinite(R)):
        raise ValueError(f"turn radius must be positive and finite, got {R!r}")


# ---------------------------------------------------------------------------
# CS words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CSConstruction:
    """Intermediate quantities of one CS construction, kept for diagnostics."""

    word: str
    center: Point
    theta_sf: float
    len_sf: float
    theta_mf: float
    theta_m: float
    tangent_point: Point
    arc_sweep: float
    straight: float


def _cs_params(x0, y0, th0, gx, gy, R, sgn):
    # turning-circle center, left of the heading for sgn=+1
    xs = x0 + R * math.cos(th0 + sgn * HALF_PI)
    ys = y0 + R * math.sin(th0 + sgn * HALF_PI)
    dx = gx - xs
    dy = gy - ys
    len_sf = math.hypot(dx, dy)
    if len_sf < R * (1.0 - FEASIBILITY_SLACK):
        return None
    theta_sf = math.atan2(dy, dx)
    if len_sf <= R * (1.0 + FEASIBILITY_SLACK):
        # on the circle: the goal is its own tangent point
        theta_mf = HALF_PI
    else:
        theta_mf = math.asin(R / len_sf)
    theta_m = theta_sf + sgn * (theta_mf - HALF_PI)
    xm = xs + R * math.cos(theta_m)
    ym = ys + R * math.sin(theta_m)
    sweep = _sweep(sgn * (theta_m - th0) + HALF_PI)
    straight = math.hypot(gx - xm, gy - ym)
    return xs, ys, theta_sf, len_sf, theta_mf, theta_m, xm, ym, sweep, straight


def cs_construction(start: Pose, goal_point: Point, R: float, turn: Turn) -> Optional[CSConstruction]:
    _check_radius(R)
    p = _cs_params(start.x, start.y, start.theta, goal_point[0], goal_point[1], R, turn.sign)
    if p is None:
        return None
    xs, ys, theta_sf, len_sf, theta_mf, theta_m, xm, ym, sweep, straight = p
    return CSConstruction(
        word=turn.letter + "S",
        center=(xs, ys),
        theta_sf=normalize_angle(theta_sf),
        len_sf=len_sf,
        theta_mf=theta_mf,
        theta_m=normalize_angle(theta_m),
        tangent_point=(xm, ym),
        arc_sweep=sweep,
        straight=straight,
    )


def cs_candidate(start: Pose, goal_point: Point, R: float, turn: Turn) -> Optional[DubinsPath]:
    """Arc-then-straight path turning ``turn`` first; ``None`` when the goal is inside that circle."""
    _check_radius(R)
    p = _cs_params(start.x, start.y, start.theta, goal_point[0], goal_point[1], R, turn.sign)
    if p is None:
        return None
    sweep, straight = p[8], p[9]
    segs = chain_segments(start, ((turn.letter, R * sweep, R), ("S", straight, 0.0)))
    return DubinsPath(turn.letter + "S", segs, R)


def _cs_best(start: Pose, gx: float, gy: float, R: float):
    best = None
    for turn in (Turn.LEFT, Turn.RIGHT):
        p = _cs_params(start.x, start.y, start.theta, gx, gy, R, turn.sign)
        if p is None:
            continue
        length = R * p[8] + p[9]
        if best is None or length < best[0]:
            best = (length, turn, p)
    return best


def cs_shortest(start: Pose, goal_point: Point, R: float) -> DubinsPath:
    _check_radius(R)
    best = _cs_best(start, goal_point[0], goal_point[1], R)
    if best is None:
        raise Unreachable(f"{goal_point} lies inside both turning circles of {start}")
    _, turn, p = best
    segs = chain_segments(start, ((turn.letter, R * p[8], R), ("S", p[9], 0.0)))
    return DubinsPath(turn.letter + "S", segs, R)


def cs_length(start: Pose, goal_point: Point, R: float) -> float:
    """Length of :func:`cs_shortest` without building the path."""
    _check_radius(R)
    best = _cs_best(start, goal_point[0], goal_point[1], R)
    if best is None:
        raise Unreachable(f"{goal_point} lies inside both turning circles of {start}")
    return best[0]


# ---------------------------------------------------------------------------
# CSC words
# ---------------------------------------------------------------------------

CSC_WORDS = ("LSL", "LSR", "RSL", "RSR")


def _csc_params(x0, y0, t0, x1, y1, t1, R, s1, s2):
    c1x = x0 - s1 * R * math.sin(t0)
    c1y = y0 + s1 * R * math.cos(t0)
    c2x = x1 - s2 * R * math.sin(t1)
    c2y = y1 + s2 * R * math.cos(t1)
    dx = c2x - c1x
    dy = c2y - c1y
    d = math.hypot(dx, dy)
    if s1 == s2:
        if d < FEASIBILITY_SLACK * R:
            # coincident circles: do all the turning on the first arc
            h = t1
            ell = 0.0
        else:
            h = math.atan2(dy, dx)
            ell = d
    else:
        if d < 2.0 * R * (1.0 - FEASIBILITY_SLACK):
            return None
        ell = math.sqrt(max(0.0, d * d - 4.0 * R * R))
        h = math.atan2(dy, dx) + s1 * math.atan2(2.0 * R, ell)
    a1 = _sweep(s1 * (h - t0))
    a2 = _sweep(s2 * (t1 - h))
    return a1, ell, a2


def _word_signs(word: str):
    return (1 if word[0] == "L" else -1), (1 if word[2] == "L" else -1)


def csc_candidate(start: Pose, goal: Pose, R: float, word: str) -> Optional[DubinsPath]:
    _check_radius(R)
    if word not in CSC_WORDS:
        raise ValueError(f"unknown CSC word {word!r}")
    s1, s2 = _word_signs(word)
    p = _csc_params(start.x, start.y, start.theta, goal.x, goal.y, goal.theta, R, s1, s2)
    if p is None:
        return None
    a1, ell, a2 = p
    segs = chain_segments(start, ((word[0], R * a1, R), ("S", ell, 0.0), (word[2], R * a2, R)))
    return DubinsPath(word, segs, R)


def _csc_best(start: Pose, goal: Pose, R: float):
    best = None
    for word in CSC_WORDS:
        s1, s2 = _word_signs(word)
        p = _csc_params(start.x, start.y, start.theta, goal.x, goal.y, goal.theta, R, s1, s2)
        if p is None:
            continue
        length = R * (p[0] + p[2]) + p[1]
        if best is None or length < best[0]:
            best = (length, word, p)
    return best


def csc_shortest(start: Pose, goal: Pose, R: float) -> DubinsPath:
    _check_radius(R)
    best = _csc_best(start, goal, R)
    if best is None:
        raise Unreachable(f"no CSC word joins {start} to {goal}")
    _, word, (a1, ell, a2) = best
    segs = chain_segments(start, ((word[0], R * a1, R), ("S", ell, 0.0), (word[2], R * a2, R)))
    return DubinsPath(word, segs, R)


def csc_length(start: Pose, goal: Pose, R: float) -> float:
    _check_radius(R)
    best = _csc_best(start, goal, R)
    if best is None:
        raise Unreachable(f"no CSC word joins {start} to {goal}")
    return best[0]


# ---------------------------------------------------------------------------
# task connections and sampling
# ---------------------------------------------------------------------------

def connect(start: Pose, point: Point, heading: Optional[float], R: float) -> DubinsPath:
    """Connecting path to a task entry; CS when the entry heading is free, CSC otherwise."""
    if heading is None:
        return cs_shortest(start, point, R)
    return csc_shortest(start, Pose(point[0], point[1], heading), R)


def connect_length(start: Pose, point: Point, heading: Optional[float], R: float) -> float:
    if heading is None:
        return cs_length(start, point, R)
    return csc_length(start, Pose(point[0], point[1], heading), R)


def sample_pose(path: DubinsPath, s: float) -> Pose:
    total = path.total_length
    slack = 1e-9 * max(1.0, total)
    if not (-slack <= s <= total + slack):
        raise ValueError(f"arc length {s} outside [0, {total}]")
    s = min(max(s, 0.0), total)
    return pose_along(path.segments, s)
