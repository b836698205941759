"""Planar primitives shared by simplification, rasterization, and metrics."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import Point2, Polyline


def triangle_area(a: Point2, b: Point2, c: Point2) -> float:
    """Area of the triangle abc (half the cross product magnitude)."""
    return abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) / 2.0


def point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    """Euclidean distance from p to the closed segment ab."""
    dx = b.x - a.x
    dy = b.y - a.y
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return p.dist(a)
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / denom
    t = min(max(t, 0.0), 1.0)
    return math.sqrt((p.x - (a.x + t * dx)) ** 2 + (p.y - (a.y + t * dy)) ** 2)


def point_polyline_distance(p: Point2, line: Polyline) -> float:
    return min(point_segment_distance(p, a, b) for a, b in line.segments())


def _segment_arrays(line: Polyline) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Segment starts, ends (s, 2) and cumulative arc lengths (s + 1,)."""
    pts = line.to_array()
    if line.closed:
        starts = pts
        ends = np.roll(pts, -1, axis=0)
    else:
        starts = pts[:-1]
        ends = pts[1:]
    seg_len = np.hypot(ends[:, 0] - starts[:, 0], ends[:, 1] - starts[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    return starts, ends, cum


def _points_at_arcs(line: Polyline, arcs: np.ndarray) -> np.ndarray:
    """Sample the polyline at the given (sorted) arc-length positions."""
    starts, ends, cum = _segment_arrays(line)
    total = cum[-1]
    seg_idx = np.clip(np.searchsorted(cum, arcs, side="right") - 1, 0, len(starts) - 1)
    seg_len = cum[seg_idx + 1] - cum[seg_idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(seg_len > 0.0, (arcs - cum[seg_idx]) / seg_len, 0.0)
    t = np.clip(t, 0.0, 1.0)
    out = starts[seg_idx] + t[:, None] * (ends[seg_idx] - starts[seg_idx])
    # Arc positions at the very end of an open line map exactly onto the
    # last vertex, avoiding float drift at the endpoint.
    if not line.closed and len(arcs) and arcs[-1] >= total:
        out[-1] = ends[-1]
    return out


def polyline_length(line: Polyline) -> float:
    _, _, cum = _segment_arrays(line)
    return float(cum[-1])


def resample_even(line: Polyline, k: int) -> Polyline:
    """Resample to k points equally spaced by arc length.

    Open polylines keep both endpoints; closed ones get k perimeter-uniform
    points starting at vertex 0 (the result stays closed).
    """
    if k < 2:
        raise ValidationError(f"resampling needs at least 2 points, got k={k}")
    total = polyline_length(line)
    if line.closed:
        arcs = np.arange(k) * (total / k)
    else:
        arcs = np.arange(k) * (total / (k - 1))
    pts = _points_at_arcs(line, arcs)
    pts[0] = (line.points[0].x, line.points[0].y)
    if not line.closed:
        pts[-1] = (line.points[-1].x, line.points[-1].y)
    return Polyline.from_xy(pts, closed=line.closed)


def resample_step(line: Polyline, step: float) -> np.ndarray:
    """Sample points every `step` meters of arc length, as an (s, 2) array.

    Open polylines always include both endpoints; closed ones are sampled
    around the full perimeter (no duplicated start point).
    """
    if step <= 0.0:
        raise ValidationError(f"sample step must be positive, got {step}")
    total = polyline_length(line)
    arcs = np.arange(0.0, total, step)
    if not line.closed and (len(arcs) == 0 or arcs[-1] < total):
        arcs = np.concatenate((arcs, [total]))
    return _points_at_arcs(line, arcs)


def points_in_order_subsequence(sub: Sequence[Point2], full: Sequence[Point2]) -> bool:
    """True if `sub` appears in `full` in order, comparing by exact value."""
    it = iter(full)
    return all(any(s == p for p in it) for s in sub)
