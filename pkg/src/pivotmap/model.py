"""Domain types for vectorized local maps and the JSONL interchange format.

Coordinates are metric bird's-eye-view: x is lateral (positive right), y is
longitudinal (positive forward), both in meters. All types are immutable
after construction and safe to share across threads.

The on-disk format is JSONL, one frame per line:

    {"frame_id": str,
     "range": {"x_min": f, "x_max": f, "y_min": f, "y_max": f},
     "elements": [{"class": "divider"|"ped_crossing"|"boundary",
                   "closed": bool, "score": f|null,
                   "points": [[x, y], ...]}]}

Numbers are serialized with Python's shortest round-trip float repr, so
``parse(serialize(m))`` reproduces every field bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Point2:
    """A point in metric BEV coordinates."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def l1(self, other: "Point2") -> float:
        return abs(self.x - other.x) + abs(self.y - other.y)

    def dist(self, other: "Point2") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2)


@dataclass(frozen=True)
class Polyline:
    """Ordered 2-D point sequence, open or closed.

    A closed polyline does NOT repeat its first point as the last one;
    closure is implied by the flag, so the point count stays unambiguous.
    Consecutive duplicate points are rejected (for closed polylines the
    wrap-around pair counts as consecutive).
    """

    points: tuple[Point2, ...]
    closed: bool = False

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValidationError(f"polyline needs at least 2 points, got {len(pts)}")
        for i in range(1, len(pts)):
            if pts[i] == pts[i - 1]:
                raise ValidationError(f"consecutive duplicate point at index {i}")
        if self.closed and pts[0] == pts[-1]:
            raise ValidationError("closed polyline must not duplicate its first point as last")

    @classmethod
    def from_xy(cls, xy: Iterable[Sequence[float]], closed: bool = False) -> "Polyline":
        return cls(tuple(Point2(float(x), float(y)) for x, y in xy), closed)

    def __len__(self) -> int:
        return len(self.points)

    def to_array(self) -> np.ndarray:
        """Points as a float64 array of shape (n, 2)."""
        return np.array([(p.x, p.y) for p in self.points], dtype=np.float64)

    def segments(self) -> Iterator[tuple[Point2, Point2]]:
        """Consecutive point pairs; includes the wrap segment when closed."""
        pts = self.points
        for i in range(len(pts) - 1):
            yield pts[i], pts[i + 1]
        if self.closed:
            yield pts[-1], pts[0]

    def length(self) -> float:
        return sum(a.dist(b) for a, b in self.segments())


def _unchecked_polyline(points: Iterable[Point2], closed: bool = False) -> Polyline:
    # Derived point selections (e.g. the pivot split of a prediction) may
    # legitimately repeat values; bypass the duplicate check, keep the shape.
    line = object.__new__(Polyline)
    object.__setattr__(line, "points", tuple(points))
    object.__setattr__(line, "closed", closed)
    return line


class ElementClass(str, Enum):
    DIVIDER = "divider"
    PED_CROSSING = "ped_crossing"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class MapElement:
    """A classed polyline; predictions carry a confidence score, GT does not."""

    element_class: ElementClass
    line: Polyline
    score: float | None = None

    def __post_init__(self):
        if self.score is not None:
            if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
                raise ValidationError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class BevRange:
    """Axis-aligned evaluation rectangle around the ego vehicle."""

    x_min: float = -15.0
    x_max: float = 15.0
    y_min: float = -30.0
    y_max: float = 30.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(
                f"degenerate range: x [{self.x_min}, {self.x_max}], y [{self.y_min}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, p: Point2) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


_DEFAULT_MAX_INSTANCES = {
    ElementClass.DIVIDER: 20,
    ElementClass.PED_CROSSING: 25,
    ElementClass.BOUNDARY: 15,
}
_DEFAULT_MAX_POINTS = {
    ElementClass.DIVIDER: 10,
    ElementClass.PED_CROSSING: 2,
    ElementClass.BOUNDARY: 30,
}


@dataclass(frozen=True)
class ClassBudget:
    """Per-class limits: max instances per frame, max points per instance."""

    max_instances: Mapping[ElementClass, int] = field(
        default_factory=lambda: dict(_DEFAULT_MAX_INSTANCES)
    )
    max_points: Mapping[ElementClass, int] = field(
        default_factory=lambda: dict(_DEFAULT_MAX_POINTS)
    )

    def __post_init__(self):
        for cls in ElementClass:
            if self.max_instances.get(cls, 1) < 1:
                raise ValidationError(f"max_instances must be >= 1 for {cls.value}")
            if self.max_points.get(cls, 2) < 2:
                raise ValidationError(f"max_points must be >= 2 for {cls.value}")


@dataclass(frozen=True)
class LocalMap:
    """One frame's worth of map elements within a BEV range."""

    frame_id: str
    bev_range: BevRange
    elements: tuple[MapElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))


def parse_local_map(text: str, line_number: int | None = None) -> LocalMap:
    """Parse one JSONL record into a validated LocalMap.

    Elements violating invariants are rejected with an error naming the field
    and element index, never silently fixed.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", line=line_number) from e
    if not isinstance(raw, dict):
        raise ParseError("record must be a JSON object", line=line_number)
    try:
        frame_id = raw["frame_id"]
        rng_raw = raw["range"]
        elements_raw = raw["elements"]
    except KeyError as e:
        raise ValidationError(f"missing required key {e.args[0]!r}") from e
    if not isinstance(frame_id, str):
        raise ValidationError("frame_id must be a string")
    try:
        rng = BevRange(
            float(rng_raw["x_min"]), float(rng_raw["x_max"]),
            float(rng_raw["y_min"]), float(rng_raw["y_max"]),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"range: {e}") from e

    elements = []
    for i, el in enumerate(elements_raw):
        try:
            cls = ElementClass(el["class"])
        except (KeyError, ValueError) as e:
            raise ValidationError(f"element {i}: class: {e}") from e
        closed = bool(el.get("closed", False))
        score_raw = el.get("score")
        pts_raw = el.get("points")
        if not isinstance(pts_raw, list):
            raise ValidationError(f"element {i}: points: must be a list of [x, y] pairs")
        try:
            line = Polyline.from_xy(pts_raw, closed=closed)
            score = None if score_raw is None else float(score_raw)
            elements.append(MapElement(cls, line, score))
        except ValidationError as e:
            raise ValidationError(f"element {i}: {e}") from e
        except (TypeError, ValueError) as e:
            raise ValidationError(f"element {i}: points: {e}") from e
    return LocalMap(frame_id, rng, tuple(elements))


def serialize_local_map(local_map: LocalMap) -> str:
    """One JSONL line; floats use their shortest round-trip representation."""
    obj = {
        "frame_id": local_map.frame_id,
        "range": {
            "x_min": local_map.bev_range.x_min,
            "x_max": local_map.bev_range.x_max,
            "y_min": local_map.bev_range.y_min,
            "y_max": local_map.bev_range.y_max,
        },
        "elements": [
            {
                "class": el.element_class.value,
                "closed": el.line.closed,
                "score": el.score,
                "points": [[p.x, p.y] for p in el.line.points],
            }
            for el in local_map.elements
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def load_local_maps(lines: Iterable[str]) -> list[LocalMap]:
    """Parse a JSONL stream, skipping blank lines; line numbers start at 1."""
    maps = []
    for i, line in enumerate(lines, start=1):
        if line.strip():
            maps.append(parse_local_map(line, line_number=i))
    return maps


# Rectangle clipping. Segment endpoints produced on a clipping edge get that
# edge's coordinate assigned exactly (and the free coordinate clamped into
# the rectangle), which makes clip_to_range idempotent bit-for-bit.

def _clip_segment(p: Point2, q: Point2, rng: BevRange) -> tuple[Point2, Point2, bool, bool] | None:
    """Liang-Barsky clip of segment p->q against the range rectangle.

    Returns (entry, exit, started_inside, ended_inside) for the in-range part,
    or None if the segment misses the rectangle.
    """
    dx = q.x - p.x
    dy = q.y - p.y
    t0, t1 = 0.0, 1.0
    edge0 = edge1 = None
    # (delta, boundary distance, clipped axis, edge value) per rectangle edge
    edges = (
        (-dx, p.x - rng.x_min, 0, rng.x_min),
        (dx, rng.x_max - p.x, 0, rng.x_max),
        (-dy, p.y - rng.y_min, 1, rng.y_min),
        (dy, rng.y_max - p.y, 1, rng.y_max),
    )
    for delta, dist, axis, value in edges:
        if delta == 0.0:
            if dist < 0.0:
                return None
            continue
        t = dist / delta
        if delta < 0.0:
            if t > t1:
                return None
            if t > t0:
                t0, edge0 = t, (axis, value)
        else:
            if t < t0:
                return None
            if t < t1:
                t1, edge1 = t, (axis, value)
    if t0 > t1:
        return None

    def at(t: float, edge: tuple[int, float]) -> Point2:
        # The clipped axis takes the edge value exactly; the free axis is
        # clamped so float rounding never lands a hair outside the rectangle.
        axis, value = edge
        if axis == 0:
            return Point2(value, min(max(p.y + t * dy, rng.y_min), rng.y_max))
        return Point2(min(max(p.x + t * dx, rng.x_min), rng.x_max), value)

    a = p if edge0 is None else at(t0, edge0)
    b = q if edge1 is None else at(t1, edge1)
    return a, b, edge0 is None, edge1 is None


def _emit_piece(pieces: list[list[Point2]], piece: list[Point2]) -> None:
    deduped: list[Point2] = []
    for pt in piece:
        if not deduped or pt != deduped[-1]:
            deduped.append(pt)
    if len(deduped) >= 2:
        pieces.append(deduped)


def clip_polyline(line: Polyline, rng: BevRange) -> list[Polyline]:
    """Clip a polyline against the range rectangle.

    Boundary crossings are cut at the exact intersection point; a polyline
    split into disjoint in-range pieces yields multiple (open) polylines, and
    one fully outside yields none. A polyline entirely inside is returned
    unchanged (closed ones stay closed).
    """
    if all(rng.contains(p) for p in line.points):
        return [line]

    pts = list(line.points)
    if line.closed:
        # Rotate so the walk starts at an out-of-range vertex, then treat the
        # cycle as an open chain including the wrap segment.
        start = next(i for i, p in enumerate(pts) if not rng.contains(p))
        pts = pts[start:] + pts[: start + 1]

    pieces: list[list[Point2]] = []
    current: list[Point2] = []
    for p, q in zip(pts[:-1], pts[1:]):
        clipped = _clip_segment(p, q, rng)
        if clipped is None:
            _emit_piece(pieces, current)
            current = []
            continue
        a, b, starts_inside, ends_inside = clipped
        if not starts_inside or not current:
            _emit_piece(pieces, current)
            current = [a]
        current.append(b)
        if not ends_inside:
            _emit_piece(pieces, current)
            current = []
    _emit_piece(pieces, current)
    return [Polyline(tuple(piece), closed=False) for piece in pieces]


def clip_to_range(local_map: LocalMap) -> LocalMap:
    """Clip every element to the map's range; clipping is total and idempotent."""
    elements = []
    for el in local_map.elements:
        for piece in clip_polyline(el.line, local_map.bev_range):
            elements.append(MapElement(el.element_class, piece, el.score))
    return LocalMap(local_map.frame_id, local_map.bev_range, tuple(elements))
