"""Ground-truth pivot extraction by Visvalingam-Whyatt simplification.

Interior vertices are removed in order of smallest neighbor-triangle area
(ties broken by smallest vertex index, so output is deterministic), with
areas recomputed after every removal. Open polylines always keep their
endpoints; on closed polylines every vertex is interior (neighbors wrap
around) and at least 3 vertices are retained.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .geometry import point_polyline_distance, triangle_area
from .model import Point2, Polyline


@dataclass(frozen=True)
class SimplifyConfig:
    area_threshold: float = 0.01   # m^2
    tolerance_epsilon: float = 0.1  # m

    def __post_init__(self):
        if self.area_threshold <= 0.0:
            raise ValidationError(f"area_threshold must be positive, got {self.area_threshold}")
        if self.tolerance_epsilon <= 0.0:
            raise ValidationError(f"tolerance_epsilon must be positive, got {self.tolerance_epsilon}")


def _check_simplifiable(line: Polyline) -> None:
    if len(line) < 2:
        raise ValidationError("polyline needs at least 2 points")
    if line.closed and len(line) < 3:
        raise ValidationError("closed polyline needs at least 3 points to simplify")


def _vertex_area(pts: list[Point2], i: int, closed: bool) -> float:
    n = len(pts)
    if closed:
        return triangle_area(pts[(i - 1) % n], pts[i], pts[(i + 1) % n])
    return triangle_area(pts[i - 1], pts[i], pts[i + 1])


def _removable_range(n: int, closed: bool) -> range:
    return range(n) if closed else range(1, n - 1)


def _vw_remove(pts: list[Point2], closed: bool,
               area_threshold: float | None, target_count: int | None) -> list[Point2]:
    """Shared removal loop: stop at the area threshold or at a point budget."""
    pts = list(pts)
    min_len = 3 if closed else 2
    floor = min_len if target_count is None else max(target_count, min_len)
    areas = [_vertex_area(pts, i, closed) if i in _removable_range(len(pts), closed) else None
             for i in range(len(pts))]
    while len(pts) > floor:
        best_i = -1
        best_area = None
        for i, a in enumerate(areas):
            if a is not None and (best_area is None or a < best_area):
                best_i, best_area = i, a
        if best_i < 0:
            break
        if area_threshold is not None and best_area >= area_threshold:
            break
        del pts[best_i]
        del areas[best_i]
        # Only the two vertices adjacent to the removal change their triangle.
        n = len(pts)
        for j in (best_i - 1, best_i):
            jj = j % n if closed else j
            if 0 <= jj < n and areas[jj] is not None:
                areas[jj] = _vertex_area(pts, jj, closed)
    return pts


def vw_simplify(line: Polyline, cfg: SimplifyConfig = SimplifyConfig()) -> Polyline:
    """Return the pivot subsequence: vertices surviving area-threshold removal."""
    _check_simplifiable(line)
    pts = _vw_remove(list(line.points), line.closed, cfg.area_threshold, None)
    return Polyline(tuple(pts), closed=line.closed)


def vw_reduce(line: Polyline, k: int) -> Polyline:
    """Remove smallest-area vertices until exactly k remain (pivot budget).

    Returns the line unchanged when it already has at most k points.
    """
    _check_simplifiable(line)
    min_len = 3 if line.closed else 2
    if k < min_len:
        raise ValidationError(f"cannot reduce below {min_len} points, got k={k}")
    if len(line) <= k:
        return line
    pts = _vw_remove(list(line.points), line.closed, None, k)
    return Polyline(tuple(pts), closed=line.closed)


def check_tolerance(pivots: Polyline, original: Polyline, epsilon: float) -> tuple[bool, float]:
    """Check the simplification against a tolerable error.

    The deviation is the maximum over original vertices of the distance to
    the simplified polyline (nearest point on any of its segments). Returns
    (deviation < epsilon, deviation).
    """
    if pivots.closed != original.closed:
        raise ValidationError("pivots and original must share the closed flag")
    it = iter(original.points)
    for s in pivots.points:
        if not any(s == p for p in it):
            raise ValidationError("pivots are not a subsequence of the original vertices")
    deviation = max(point_polyline_distance(p, pivots) for p in original.points)
    return deviation < epsilon, deviation
