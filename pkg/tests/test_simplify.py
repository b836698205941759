import numpy as np
import pytest

from pivotmap import (
    Polyline,
    SimplifyConfig,
    ValidationError,
    check_tolerance,
    vw_reduce,
    vw_simplify,
)
from pivotmap.geometry import points_in_order_subsequence


def xy(line):
    return [(p.x, p.y) for p in line.points]


def random_polyline(rng, n=None, grid=64):
    """Random open polyline on a dyadic grid (exact midpoint arithmetic)."""
    n = n or int(rng.integers(3, 16))
    while True:
        pts = rng.integers(-15 * grid, 15 * grid, size=(n, 2)) / grid
        if all((pts[i] != pts[i + 1]).any() for i in range(n - 1)):
            return Polyline.from_xy(pts)


def test_collinear_interior_point_removed():
    out = vw_simplify(Polyline.from_xy([(0, 0), (1, 0), (2, 0)]))
    assert xy(out) == [(0, 0), (2, 0)]


def test_hand_computed_removal_sequence():
    # Areas: (1,0) and (2,1) are exactly collinear (0); after both are gone
    # the corner (2,0) spans triangle (0,0),(2,0),(2,2) with area 2.
    out = vw_simplify(Polyline.from_xy([(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]))
    assert xy(out) == [(0, 0), (2, 0), (2, 2)]


def test_two_point_polyline_unchanged():
    line = Polyline.from_xy([(0, 0), (3, 4)])
    assert vw_simplify(line) == line


def test_endpoints_always_retained():
    rng = np.random.default_rng(0)
    for _ in range(50):
        line = random_polyline(rng)
        out = vw_simplify(line, SimplifyConfig(area_threshold=100.0))
        assert out.points[0] == line.points[0]
        assert out.points[-1] == line.points[-1]


def test_closed_polyline_keeps_at_least_three_points():
    square = Polyline.from_xy([(0, 0), (1, 0), (1, 1), (0, 1)], closed=True)
    out = vw_simplify(square, SimplifyConfig(area_threshold=1e9))
    assert len(out) == 3
    assert out.closed


def test_closed_corners_survive_default_threshold():
    square = Polyline.from_xy(
        [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)], closed=True)
    out = vw_simplify(square)
    assert xy(out) == [(0, 0), (2, 0), (2, 2), (0, 2)]


def test_tie_break_prefers_smallest_index():
    # Two symmetric spikes with equal areas: the earlier one goes first, and
    # with a threshold between areas nothing else is removed.
    line = Polyline.from_xy([(0, 0), (1, 0.5), (2, 0), (3, 0.5), (4, 0)])
    out = vw_reduce(line, 4)
    assert xy(out) == [(0, 0), (2, 0), (3, 0.5), (4, 0)]


def test_vw_reduce_to_budget():
    line = Polyline.from_xy([(0, 0), (1, 0.1), (2, 0), (3, 0.3), (4, 0)])
    assert len(vw_reduce(line, 3)) == 3
    assert vw_reduce(line, 10) == line
    with pytest.raises(ValidationError):
        vw_reduce(line, 1)


def test_subsequence_invariant():
    rng = np.random.default_rng(1)
    for _ in range(100):
        line = random_polyline(rng)
        out = vw_simplify(line, SimplifyConfig(area_threshold=float(rng.uniform(0.001, 2.0))))
        assert points_in_order_subsequence(out.points, line.points)


def test_threshold_monotonicity():
    rng = np.random.default_rng(2)
    for _ in range(100):
        line = random_polyline(rng)
        t1, t2 = sorted(rng.uniform(0.001, 2.0, size=2))
        low = vw_simplify(line, SimplifyConfig(area_threshold=t1))
        high = vw_simplify(line, SimplifyConfig(area_threshold=t2))
        assert len(high) <= len(low)


def test_vanishing_threshold_removes_exactly_collinear_points():
    # Dyadic grid coordinates make injected midpoints exactly collinear.
    rng = np.random.default_rng(3)
    for _ in range(100):
        base = random_polyline(rng, n=int(rng.integers(3, 8)))
        pts = []
        collinear = 0
        for a, b in zip(base.points, base.points[1:]):
            pts.append((a.x, a.y))
            if rng.random() < 0.5:
                pts.append(((a.x + b.x) / 2, (a.y + b.y) / 2))
                collinear += 1
        pts.append((base.points[-1].x, base.points[-1].y))
        line = Polyline.from_xy(pts)
        out = vw_simplify(line, SimplifyConfig(area_threshold=1e-300))
        survivors = [p for p in line.points if _strictly_noncollinear(line, p)]
        assert len(out) <= len(line) - collinear
        for p in survivors:
            assert p in out.points


def _strictly_noncollinear(line, p):
    from pivotmap.geometry import triangle_area

    pts = line.points
    i = pts.index(p)
    if i == 0 or i == len(pts) - 1:
        return True
    return triangle_area(pts[i - 1], pts[i], pts[i + 1]) > 0.0


def test_check_tolerance_identity():
    line = Polyline.from_xy([(0, 0), (1, 2), (3, 1)])
    ok, dev = check_tolerance(line, line, 0.1)
    assert ok and dev == 0.0


def test_check_tolerance_hand_distance():
    original = Polyline.from_xy([(0, 0), (1, 0.05), (2, 0)])
    pivots = Polyline.from_xy([(0, 0), (2, 0)])
    ok, dev = check_tolerance(pivots, original, 0.1)
    assert ok and dev == pytest.approx(0.05, abs=1e-15)
    ok, dev = check_tolerance(pivots, original, 0.04)
    assert not ok and dev == pytest.approx(0.05, abs=1e-15)


def test_check_tolerance_rejects_non_subsequence():
    original = Polyline.from_xy([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(ValidationError, match="subsequence"):
        check_tolerance(Polyline.from_xy([(0, 0), (5, 5)]), original, 0.1)


def test_simplify_self_consistency_with_tolerance():
    rng = np.random.default_rng(4)
    for _ in range(50):
        line = random_polyline(rng)
        out = vw_simplify(line)
        _, dev = check_tolerance(out, line, 1e9)
        ok, dev2 = check_tolerance(out, line, dev + 1e-12)
        assert ok and dev2 == dev


def test_config_validation():
    with pytest.raises(ValidationError):
        SimplifyConfig(area_threshold=0.0)
    with pytest.raises(ValidationError):
        SimplifyConfig(tolerance_epsilon=-1.0)
