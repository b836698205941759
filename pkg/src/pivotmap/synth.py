"""Synthetic map elements and the even-vs-pivot representation experiment.

Shapes are generated deterministically from (kind, seed), densely sampled
(>= 50 vertices) so each element approximates a continuous curve, and sized
to fit inside the BEV range with a safety margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .evaluate import chamfer_distance
from .geometry import resample_even
from .model import BevRange, ElementClass, MapElement, Polyline
from .simplify import vw_reduce

DENSE_VERTEX_COUNT = 60


class ShapeKind(str, Enum):
    STRAIGHT = "straight"
    L_CORNER = "l_corner"
    U_SHAPE = "u_shape"
    ZIGZAG = "zigzag"
    ARC = "arc"
    RECTANGLE = "rectangle"


CORNER_HEAVY_KINDS = (ShapeKind.L_CORNER, ShapeKind.U_SHAPE, ShapeKind.ZIGZAG,
                      ShapeKind.RECTANGLE)

_KIND_CLASS = {
    ShapeKind.STRAIGHT: ElementClass.DIVIDER,
    ShapeKind.L_CORNER: ElementClass.BOUNDARY,
    ShapeKind.U_SHAPE: ElementClass.BOUNDARY,
    ShapeKind.ZIGZAG: ElementClass.DIVIDER,
    ShapeKind.ARC: ElementClass.DIVIDER,
    ShapeKind.RECTANGLE: ElementClass.PED_CROSSING,
}
_KIND_STREAM = {kind: i for i, kind in enumerate(ShapeKind)}


def _densify(corners: list[tuple[float, float]], closed: bool,
             total_points: int = DENSE_VERTEX_COUNT) -> Polyline:
    """Spread interior samples along the edges, keeping every corner exact."""
    pts = [np.asarray(c, dtype=np.float64) for c in corners]
    edges = list(zip(pts, pts[1:] + ([pts[0]] if closed else [])))
    lengths = [float(np.hypot(*(b - a))) for a, b in edges]
    total_len = sum(lengths)
    budget = max(total_points - len(pts), 0)
    out: list[tuple[float, float]] = []
    for (a, b), seg_len in zip(edges, lengths):
        out.append((float(a[0]), float(a[1])))
        m = max(int(round(budget * seg_len / total_len)), 1)
        for i in range(1, m + 1):
            t = i / (m + 1)
            p = a + t * (b - a)
            out.append((float(p[0]), float(p[1])))
    if not closed:
        out.append((float(pts[-1][0]), float(pts[-1][1])))
    return Polyline.from_xy(out, closed=closed)


def _rotate(points: list[tuple[float, float]], angle: float,
            center: tuple[float, float]) -> list[tuple[float, float]]:
    c, s = math.cos(angle), math.sin(angle)
    cx, cy = center
    return [(cx + c * (x - cx) - s * (y - cy), cy + s * (x - cx) + c * (y - cy))
            for x, y in points]


def _place(rng_state: np.random.Generator, bev_range: BevRange,
           half_extent: float) -> tuple[float, float]:
    margin = half_extent + 1.0
    cx = rng_state.uniform(bev_range.x_min + margin, bev_range.x_max - margin)
    cy = rng_state.uniform(bev_range.y_min + margin, bev_range.y_max - margin)
    return cx, cy


def gen_element(kind: ShapeKind, seed: int, bev_range: BevRange = BevRange()) -> MapElement:
    """Deterministic dense synthetic element for (kind, seed)."""
    kind = ShapeKind(kind)
    rs = np.random.default_rng([int(seed), _KIND_STREAM[kind]])
    angle = rs.uniform(0.0, 2.0 * math.pi)
    if kind is ShapeKind.STRAIGHT:
        length = rs.uniform(6.0, 12.0)
        cx, cy = _place(rs, bev_range, length / 2.0)
        corners = [(cx - length / 2.0, cy), (cx + length / 2.0, cy)]
        closed = False
    elif kind is ShapeKind.L_CORNER:
        leg_a = rs.uniform(4.0, 8.0)
        leg_b = rs.uniform(4.0, 8.0)
        cx, cy = _place(rs, bev_range, max(leg_a, leg_b))
        corners = [(cx - leg_a, cy), (cx, cy), (cx, cy + leg_b)]
        closed = False
    elif kind is ShapeKind.U_SHAPE:
        w = rs.uniform(4.0, 8.0)
        h = rs.uniform(4.0, 8.0)
        cx, cy = _place(rs, bev_range, math.hypot(w, h) / 2.0)
        corners = [
            (cx - w / 2.0, cy + h / 2.0),
            (cx - w / 2.0, cy - h / 2.0),
            (cx + w / 2.0, cy - h / 2.0),
            (cx + w / 2.0, cy + h / 2.0),
        ]
        closed = False
    elif kind is ShapeKind.ZIGZAG:
        step = rs.uniform(2.0, 4.0)
        amp = rs.uniform(1.5, 3.0)
        cx, cy = _place(rs, bev_range, math.hypot(2.5 * step, amp))
        corners = [(cx + (i - 2.5) * step, cy + (amp if i % 2 else -amp))
                   for i in range(6)]
        closed = False
    elif kind is ShapeKind.ARC:
        radius = rs.uniform(3.0, 8.0)
        span = rs.uniform(math.pi / 2.0, math.pi)
        cx, cy = _place(rs, bev_range, radius)
        thetas = np.linspace(0.0, span, DENSE_VERTEX_COUNT)
        pts = [(cx + radius * math.cos(th + angle), cy + radius * math.sin(th + angle))
               for th in thetas]
        line = Polyline.from_xy(pts, closed=False)
        return MapElement(_KIND_CLASS[kind], line)
    elif kind is ShapeKind.RECTANGLE:
        w = rs.uniform(3.0, 7.0)
        h = rs.uniform(2.0, 5.0)
        cx, cy = _place(rs, bev_range, math.hypot(w, h) / 2.0)
        corners = [
            (cx - w / 2.0, cy - h / 2.0),
            (cx + w / 2.0, cy - h / 2.0),
            (cx + w / 2.0, cy + h / 2.0),
            (cx - w / 2.0, cy + h / 2.0),
        ]
        closed = True
    else:  # pragma: no cover - enum is exhaustive
        raise ValidationError(f"unknown shape kind {kind}")
    corners = _rotate(corners, angle, (cx, cy))
    line = _densify(corners, closed)
    return MapElement(_KIND_CLASS[kind], line)


def even_resample(line: Polyline, k: int) -> Polyline:
    """Arc-length-uniform resampling to k points (the fixed-size baseline)."""
    return resample_even(line, k)


@dataclass
class CompactnessEntry:
    index: int
    element_class: ElementClass
    chamfer_even: float | None
    chamfer_pivot: float | None
    skipped: str | None = None


@dataclass
class CompactnessReport:
    """Per-element and mean Chamfer errors of the two K-point representations."""

    k: int
    entries: list[CompactnessEntry] = field(default_factory=list)

    @property
    def mean_even(self) -> float:
        vals = [e.chamfer_even for e in self.entries if e.skipped is None]
        return sum(vals) / len(vals)

    @property
    def mean_pivot(self) -> float:
        vals = [e.chamfer_pivot for e in self.entries if e.skipped is None]
        return sum(vals) / len(vals)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "entries": [
                {
                    "index": e.index,
                    "class": e.element_class.value,
                    "chamfer_even": e.chamfer_even,
                    "chamfer_pivot": e.chamfer_pivot,
                    "skipped": e.skipped,
                }
                for e in self.entries
            ],
            "mean_even": self.mean_even,
            "mean_pivot": self.mean_pivot,
        }


def compactness_experiment(corpus: Sequence[MapElement], k: int,
                           step: float = 0.1) -> CompactnessReport:
    """Compare K-point even resampling against the K best pivots per element.

    Both representations are scored by Chamfer distance to the dense
    original; elements with fewer than k vertices are skipped with a note.
    """
    if not corpus:
        raise ValidationError("compactness experiment needs a non-empty corpus")
    report = CompactnessReport(k=k)
    for i, el in enumerate(corpus):
        if len(el.line) < k:
            report.entries.append(CompactnessEntry(
                i, el.element_class, None, None,
                skipped=f"only {len(el.line)} vertices for k={k}",
            ))
            continue
        even = even_resample(el.line, k)
        pivots = vw_reduce(el.line, k)
        report.entries.append(CompactnessEntry(
            i, el.element_class,
            chamfer_even=chamfer_distance(el.line, even, step),
            chamfer_pivot=chamfer_distance(el.line, pivots, step),
        ))
    return report
