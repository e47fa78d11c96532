import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import angle_diff, cs_oracle, csc_oracle, integrate_segments
from uavmission.geometry import (
    CSC_WORDS,
    Pose,
    Turn,
    Unreachable,
    chain_segments,
    connect,
    cs_candidate,
    cs_construction,
    cs_length,
    cs_shortest,
    csc_candidate,
    csc_length,
    csc_shortest,
    normalize_angle,
    sample_pose,
)

R = 80.0
coord = st.floats(-3000, 3000, allow_nan=False)
heading = st.floats(0, 2 * math.pi, allow_nan=False, exclude_max=True)
radius = st.floats(5, 300, allow_nan=False)


def _pieces(path):
    return [(s.kind, s.length, s.radius) for s in path.segments]


# -- normalize_angle --------------------------------------------------------

@pytest.mark.parametrize("theta, expected", [(0.0, 0.0), (-math.pi / 2, 1.5 * math.pi), (5 * math.pi, math.pi)])
def test_normalize_angle_examples(theta, expected):
    assert normalize_angle(theta) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_normalize_angle_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        normalize_angle(bad)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_normalize_angle_range_and_congruence(theta):
    a = normalize_angle(theta)
    assert 0.0 <= a < 2 * math.pi
    assert angle_diff(a, theta) < 1e-9


@given(coord, coord, st.floats(-100, 100, allow_nan=False))
def test_pose_heading_always_normalized(x, y, th):
    assert 0.0 <= Pose(x, y, th).theta < 2 * math.pi


# -- CS words ---------------------------------------------------------------

def test_cs_dead_ahead():
    p = cs_candidate(Pose(0, 0, 0), (100, 0), R, Turn.LEFT)
    assert p.word == "LS"
    assert p.lengths == pytest.approx((0.0, 100.0), abs=1e-12)
    assert p.total_length == pytest.approx(100.0)


def test_cs_semicircle():
    p = cs_candidate(Pose(0, 0, 0), (0, 160), R, Turn.LEFT)
    assert p.lengths[0] == pytest.approx(80 * math.pi, abs=1e-9)
    assert p.lengths[1] == pytest.approx(0.0, abs=1e-6)
    assert p.total_length == pytest.approx(80 * math.pi, abs=1e-6)


def test_cs_goal_inside_right_circle_is_infeasible_for_both_constructions():
    start, goal = Pose(0, 0, math.pi / 2), (50, 50)
    assert cs_candidate(start, goal, R, Turn.RIGHT) is None
    oracle = cs_oracle([[0, 0, math.pi / 2]], [goal], R, -1.0)
    assert np.isnan(oracle[0])
    # the left word exists and matches the numeric oracle
    left = cs_candidate(start, goal, R, Turn.LEFT)
    assert left.total_length == pytest.approx(cs_oracle([[0, 0, math.pi / 2]], [goal], R, 1.0)[0], abs=1e-4)


def test_cs_construction_record_is_consistent():
    rec = cs_construction(Pose(10, 20, 1.0), (400, -300), R, Turn.RIGHT)
    assert rec.word == "RS"
    cx, cy = rec.center
    mx, my = rec.tangent_point
    assert math.hypot(mx - cx, my - cy) == pytest.approx(R)
    assert rec.len_sf == pytest.approx(math.hypot(400 - cx, -300 - cy))
    assert math.sin(rec.theta_mf) == pytest.approx(R / rec.len_sf)
    assert rec.straight == pytest.approx(math.hypot(400 - mx, -300 - my))


def test_cs_shortest_ties_go_left():
    p = cs_shortest(Pose(0, 0, 0), (100, 0), R)
    assert p.word == "LS" and p.total_length == pytest.approx(100.0)


def test_cs_shortest_semicircle_is_left():
    p = cs_shortest(Pose(0, 0, 0), (0, 160), R)
    right = cs_candidate(Pose(0, 0, 0), (0, 160), R, Turn.RIGHT)
    assert p.word == "LS"
    assert right.total_length > p.total_length


def test_cs_unreachable_inside_both_circles():
    # a point can never be strictly inside both circles, except with a huge radius and tiny offsets
    # that still leave one circle feasible; check the error path by direct construction instead
    with pytest.raises(ValueError):
        cs_shortest(Pose(0, 0, 0), (1, 1), 0.0)


@settings(max_examples=300, deadline=None)
@given(coord, coord, heading, coord, coord, radius)
def test_cs_shortest_is_min_of_candidates(x, y, th, gx, gy, r):
    start = Pose(x, y, th)
    cands = [cs_candidate(start, (gx, gy), r, t) for t in (Turn.LEFT, Turn.RIGHT)]
    lengths = [c.total_length for c in cands if c is not None]
    assert lengths, "one of the two circles always excludes the goal"
    assert cs_shortest(start, (gx, gy), r).total_length == pytest.approx(min(lengths), rel=1e-12)
    assert cs_length(start, (gx, gy), r) == pytest.approx(min(lengths), rel=1e-12)


def test_cs_matches_numeric_oracle_1000():
    rng = np.random.default_rng(11)
    n = 1000
    starts = np.column_stack([rng.uniform(0, 2500, (n, 2)), rng.uniform(0, 2 * np.pi, n)])
    goals = rng.uniform(0, 2500, (n, 2))
    left = cs_oracle(starts, goals, R, 1.0)
    right = cs_oracle(starts, goals, R, -1.0)
    want = np.fmin(left, right)
    got = np.array([cs_length(Pose(*s), tuple(g), R) for s, g in zip(starts, goals)])
    assert np.max(np.abs(got - want)) < 1e-4


@settings(max_examples=200, deadline=None)
@given(coord, coord, heading, coord, coord, radius)
def test_cs_lower_bound_and_reconstruction(x, y, th, gx, gy, r):
    p = cs_shortest(Pose(x, y, th), (gx, gy), r)
    assert p.total_length >= math.hypot(gx - x, gy - y) - 1e-9
    assert len(p.segments) == 2 and p.segments[0].kind in "LR" and p.segments[1].kind == "S"
    assert math.hypot(p.end.x - gx, p.end.y - gy) < 1e-6 * r


# -- CSC words --------------------------------------------------------------

def test_csc_collinear_aligned():
    p = csc_shortest(Pose(0, 0, 0), Pose(200, 0, 0), R)
    assert p.word == "LSL"
    assert p.lengths == pytest.approx((0.0, 200.0, 0.0), abs=1e-9)


def test_csc_semicircle_onto_goal_pose():
    p = csc_shortest(Pose(0, 0, 0), Pose(0, 160, math.pi), R)
    assert p.word == "LSL"
    assert p.lengths == pytest.approx((80 * math.pi, 0.0, 0.0), abs=1e-9)


def test_csc_cross_word_infeasible_when_circles_overlap():
    # left circle of the start centred at (0, 80), right circle of the goal at (0, -60)
    assert csc_candidate(Pose(0, 0, 0), Pose(0, 20, 0), R, "LSR") is None
    with pytest.raises(ValueError):
        csc_candidate(Pose(0, 0, 0), Pose(10, 0, 0), R, "LRL")


@settings(max_examples=300, deadline=None)
@given(coord, coord, heading, coord, coord, heading, radius)
def test_csc_shortest_is_min_over_words_and_lands_on_goal(x, y, th, gx, gy, gth, r):
    start, goal = Pose(x, y, th), Pose(gx, gy, gth)
    cands = [csc_candidate(start, goal, r, w) for w in CSC_WORDS]
    lengths = [c.total_length for c in cands if c is not None]
    p = csc_shortest(start, goal, r)
    assert p.total_length == pytest.approx(min(lengths), rel=1e-12)
    assert csc_length(start, goal, r) == pytest.approx(min(lengths), rel=1e-12)
    # no word earlier in the tie order is shorter
    for c in cands[: CSC_WORDS.index(p.word)]:
        assert c is None or c.total_length >= p.total_length * (1 - 1e-12)
    assert len(p.segments) == 3
    assert math.hypot(p.end.x - gx, p.end.y - gy) < 1e-6 * r
    assert angle_diff(p.end.theta, gth) < 1e-9
    assert p.total_length >= math.hypot(gx - x, gy - y) - 1e-9


def test_csc_matches_numeric_oracle_far_pairs():
    rng = np.random.default_rng(5)
    n = 1000
    starts = np.column_stack([rng.uniform(0, 2500, (n, 2)), rng.uniform(0, 2 * np.pi, n)])
    goals = np.column_stack([rng.uniform(0, 2500, (n, 2)), rng.uniform(0, 2 * np.pi, n)])
    far = np.hypot(*(starts[:, :2] - goals[:, :2]).T) > 4 * R
    starts, goals = starts[far], goals[far]
    want = np.min([csc_oracle(starts, goals, R, w) for w in CSC_WORDS], axis=0)
    got = np.array([csc_length(Pose(*s), Pose(*g), R) for s, g in zip(starts, goals)])
    assert np.max(np.abs(got - want)) < 1e-6


# -- connect and sampling ---------------------------------------------------

def test_connect_dispatches_on_heading():
    a = connect(Pose(0, 0, 0), (100, 0), None, R)
    assert a.word in ("LS", "RS") and a.total_length == pytest.approx(100)
    b = connect(Pose(0, 0, 0), (0, 160), math.pi, R)
    assert b.word in CSC_WORDS and b.total_length == pytest.approx(80 * math.pi)


def test_free_heading_never_longer_than_imposed():
    free = connect(Pose(0, 0, 0), (0, 160), None, R).total_length
    assert free == pytest.approx(80 * math.pi, abs=1e-6)
    for h in np.linspace(0, 2 * np.pi, 64, endpoint=False):
        assert free <= connect(Pose(0, 0, 0), (0, 160), float(h), R).total_length + 1e-9


def test_sample_pose_straight():
    p = chain_segments(Pose(0, 0, 0), [("S", 100.0, 0.0)])
    from uavmission.geometry import DubinsPath

    path = DubinsPath("LS", (chain_segments(Pose(0, 0, 0), [("L", 0.0, R)])[0],) + p, R)
    q = sample_pose(path, 40.0)
    assert (q.x, q.y, q.theta) == pytest.approx((40.0, 0.0, 0.0))


def test_sample_pose_quarter_of_semicircle_matches_integration():
    path = cs_shortest(Pose(0, 0, 0), (0, 160), R)
    q = sample_pose(path, 40 * math.pi)
    want = integrate_segments([("L", 40 * math.pi, R)], (0.0, 0.0, 0.0))[-1]
    assert (q.x, q.y) == pytest.approx(want[:2], abs=1e-6)
    assert (q.x, q.y) == pytest.approx((80.0, 80.0), abs=1e-9)
    assert q.theta == pytest.approx(math.pi / 2)


def test_sample_pose_bounds():
    path = cs_shortest(Pose(0, 0, 0), (300, 200), R)
    assert sample_pose(path, 0.0) == path.start
    end = sample_pose(path, path.total_length)
    assert (end.x, end.y) == pytest.approx((300, 200), abs=1e-6)
    for bad in (-1.0, path.total_length + 1.0):
        with pytest.raises(ValueError):
            sample_pose(path, bad)


@settings(max_examples=25, deadline=None)
@given(coord, coord, heading, coord, coord, heading, st.floats(0, 1), st.floats(0, 1))
def test_sampling_is_arc_length_consistent(x, y, th, gx, gy, gth, u1, u2):
    path = csc_shortest(Pose(x, y, th), Pose(gx, gy, gth), R)
    s1, s2 = sorted((u1 * path.total_length, u2 * path.total_length))
    a = sample_pose(path, s1)
    b = sample_pose(path, s2)
    # re-integrate the stretch between s1 and s2 from the first sample
    pieces, acc = [], 0.0
    for seg in path.segments:
        lo, hi = max(s1, acc), min(s2, acc + seg.length)
        if hi > lo:
            pieces.append((seg.kind, hi - lo, seg.radius))
        acc += seg.length
    end = integrate_segments(pieces, (a.x, a.y, a.theta), step=0.05)[-1]
    assert math.hypot(end[0] - b.x, end[1] - b.y) < 1e-3
    assert sum(p[1] for p in pieces) == pytest.approx(s2 - s1, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(coord, coord, heading, coord, coord, heading, st.sampled_from([0.5, 2.0, 3.0, 10.0]))
def test_scale_covariance(x, y, th, gx, gy, gth, lam):
    a = csc_shortest(Pose(x, y, th), Pose(gx, gy, gth), R)
    b = csc_shortest(Pose(lam * x, lam * y, th), Pose(lam * gx, lam * gy, gth), lam * R)
    assert b.total_length == pytest.approx(lam * a.total_length, rel=1e-9, abs=1e-6)
    c = cs_shortest(Pose(x, y, th), (gx, gy), R)
    d = cs_shortest(Pose(lam * x, lam * y, th), (lam * gx, lam * gy), lam * R)
    assert d.total_length == pytest.approx(lam * c.total_length, rel=1e-9, abs=1e-6)


def test_segment_replay_matches_integration():
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = Pose(*rng.uniform(0, 1000, 2), rng.uniform(0, 2 * np.pi))
        g = Pose(*rng.uniform(0, 1000, 2), rng.uniform(0, 2 * np.pi))
        p = csc_shortest(s, g, R)
        end = integrate_segments(_pieces(p), (s.x, s.y, s.theta), step=0.01)[-1]
        assert math.hypot(end[0] - g.x, end[1] - g.y) < 1e-3


def test_invalid_radius():
    for bad in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            cs_shortest(Pose(0, 0, 0), (1, 1), bad)
        with pytest.raises(ValueError):
            csc_shortest(Pose(0, 0, 0), Pose(1, 1, 0), bad)


def test_unreachable_is_raised_when_no_word_exists(monkeypatch):
    import uavmission.geometry as g

    monkeypatch.setattr(g, "_cs_params", lambda *a: None)
    with pytest.raises(Unreachable):
        g.cs_shortest(Pose(0, 0, 0), (10, 0), R)
    monkeypatch.setattr(g, "_csc_params", lambda *a: None)
    with pytest.raises(Unreachable):
        g.csc_shortest(Pose(0, 0, 0), Pose(10, 0, 0), R)
