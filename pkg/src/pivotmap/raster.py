"""BEV-grid rasterization and segmentation mask losses.

Grids are plain float64 arrays of shape (rows, cols) with values in [0, 1].
Row 0 sits at y_min (rear of the vehicle), column 0 at x_min (left edge);
a cell is lit when its center lies within half the stroke thickness of the
polyline. The default grid is 64 x 32 over the default range, i.e. square
0.9375 m cells, and the default thickness is one cell diagonal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model import BevRange, Polyline

DEFAULT_GRID_SHAPE = (64, 32)  # (rows: longitudinal, cols: lateral)
MASK_CLAMP = 1e-7
DICE_SMOOTHING = 1.0


@dataclass(frozen=True)
class MaskLossWeights:
    lambda1: float = 5.0  # line-aware term
    lambda2: float = 3.0  # BEV term

    def __post_init__(self):
        if min(self.lambda1, self.lambda2) < 0.0:
            raise ValidationError("mask loss weights must be non-negative")


def _check_grid(mask: np.ndarray, name: str) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise ValidationError(f"{name}: expected a 2-D grid, got shape {mask.shape}")
    if not np.all(np.isfinite(mask)) or mask.min() < 0.0 or mask.max() > 1.0:
        raise ValidationError(f"{name}: cell values must lie in [0, 1]")
    return mask


def cell_centers(bev_range: BevRange, shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center coordinates: ys (rows,), xs (cols,)."""
    rows, cols = shape
    cell_h = bev_range.height / rows
    cell_w = bev_range.width / cols
    ys = bev_range.y_min + (np.arange(rows) + 0.5) * cell_h
    xs = bev_range.x_min + (np.arange(cols) + 0.5) * cell_w
    return ys, xs


def rasterize(
    line: Polyline,
    bev_range: BevRange = BevRange(),
    shape: tuple[int, int] = DEFAULT_GRID_SHAPE,
    thickness: float | None = None,
) -> np.ndarray:
    """Binary mask of cells whose center is within thickness/2 of the polyline."""
    rows, cols = shape
    if rows < 1 or cols < 1:
        raise ValidationError(f"degenerate grid shape {shape}")
    if thickness is None:
        thickness = math.hypot(bev_range.height / rows, bev_range.width / cols)
    ys, xs = cell_centers(bev_range, shape)
    cx, cy = np.meshgrid(xs, ys)  # (rows, cols)
    min_d = np.full(shape, np.inf)
    for a, b in line.segments():
        dx, dy = b.x - a.x, b.y - a.y
        denom = dx * dx + dy * dy
        t = ((cx - a.x) * dx + (cy - a.y) * dy) / denom
        t = np.clip(t, 0.0, 1.0)
        d = np.hypot(cx - (a.x + t * dx), cy - (a.y + t * dy))
        np.minimum(min_d, d, out=min_d)
    return (min_d <= thickness / 2.0).astype(np.float64)


def dice_loss(pred: np.ndarray, gt: np.ndarray) -> float:
    """1 - smoothed Dice overlap; 0 for identical nonempty binary masks."""
    pred = _check_grid(pred, "pred")
    gt = _check_grid(gt, "gt")
    if pred.shape != gt.shape:
        raise ValidationError(f"grid shape mismatch: {pred.shape} vs {gt.shape}")
    inter = float(np.sum(pred * gt))
    denom = float(np.sum(pred) + np.sum(gt))
    return 1.0 - (2.0 * inter + DICE_SMOOTHING) / (denom + DICE_SMOOTHING)


def bce_mask_loss(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean per-cell binary cross-entropy with clamped predictions."""
    pred = _check_grid(pred, "pred")
    gt = _check_grid(gt, "gt")
    if pred.shape != gt.shape:
        raise ValidationError(f"grid shape mismatch: {pred.shape} vs {gt.shape}")
    p = np.clip(pred, MASK_CLAMP, 1.0 - MASK_CLAMP)
    return float(np.mean(-(gt * np.log(p) + (1.0 - gt) * np.log(1.0 - p))))


def mask_loss(pred: np.ndarray, gt: np.ndarray) -> float:
    return bce_mask_loss(pred, gt) + dice_loss(pred, gt)


def union_mask(
    lines: Sequence[Polyline],
    bev_range: BevRange = BevRange(),
    shape: tuple[int, int] = DEFAULT_GRID_SHAPE,
    thickness: float | None = None,
) -> np.ndarray:
    """Cellwise maximum of the per-instance masks."""
    out = np.zeros(shape)
    for line in lines:
        np.maximum(out, rasterize(line, bev_range, shape, thickness), out=out)
    return out


def line_aware_loss(
    pred_masks: Sequence[np.ndarray],
    gt_lines: Sequence[Polyline],
    bev_range: BevRange = BevRange(),
    thickness: float | None = None,
) -> float:
    """Mean over paired instances of (BCE + Dice) against rasterized GT lines."""
    if len(pred_masks) != len(gt_lines):
        raise ValidationError(
            f"{len(pred_masks)} predicted masks paired with {len(gt_lines)} ground-truth lines"
        )
    if not pred_masks:
        warnings.warn("line-aware loss over an empty instance list is 0 by convention")
        return 0.0
    total = 0.0
    for mask, line in zip(pred_masks, gt_lines):
        mask = _check_grid(mask, "pred mask")
        gt_mask = rasterize(line, bev_range, mask.shape, thickness)
        total += mask_loss(mask, gt_mask)
    return total / len(pred_masks)


def bev_loss(
    pred_mask: np.ndarray,
    gt_lines: Sequence[Polyline],
    bev_range: BevRange = BevRange(),
    thickness: float | None = None,
) -> float:
    """(BCE + Dice) of the frame-level mask against the union of all GT lines."""
    pred_mask = _check_grid(pred_mask, "pred mask")
    gt_mask = union_mask(gt_lines, bev_range, pred_mask.shape, thickness)
    return mask_loss(pred_mask, gt_mask)


def total_loss(dvs, la: float, bev: float,
               weights: MaskLossWeights = MaskLossWeights()) -> float:
    """Weighted sum of the sequence loss and the two mask losses.

    `dvs` may be the weighted sequence-loss scalar or a DvsReport (its
    `total` is used).
    """
    dvs_value = float(getattr(dvs, "total", dvs))
    for name, value in (("dvs", dvs_value), ("line-aware", la), ("bev", bev)):
        if not math.isfinite(value):
            raise ValidationError(f"{name} loss component is not finite: {value}")
    return dvs_value + weights.lambda1 * la + weights.lambda2 * bev
