"""Dynamic sequence losses: pivotal L1, collinear L1, pivot classification.

All three terms are differentiated by hand. The matching is recomputed per
evaluation and treated as a constant for the gradient (never differentiated
through), and the L1 subgradient at an exactly-zero residual is 0, the
minimum-norm choice, so fitted points rest at the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .matching import PivotMatch, pdm_dp, split_sequence
from .model import Point2, Polyline

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class DvsWeights:
    alpha1: float = 5.0  # pivotal term
    alpha2: float = 2.0  # collinear term
    alpha3: float = 2.0  # classification term

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.alpha3) < 0.0:
            raise ValidationError("loss weights must be non-negative")


@dataclass(frozen=True, eq=False)
class DvsReport:
    """Loss components, weighted total, and per-point gradients.

    `grad` is d(total)/d(x, y) per prediction point, shape (N, 2);
    `cls_grad` is d(total)/d(logit) per point, shape (N,), taking the
    supplied probability as the sigmoid of that logit. `residuals` holds
    each point's signed coordinate offset from its matched pivot or
    interpolated target (the distance to the L1 kink, useful for capping
    descent steps).
    """

    l_pp: float
    l_cp: float
    l_cls: float
    total: float
    grad: np.ndarray
    cls_grad: np.ndarray
    residuals: np.ndarray
    match: PivotMatch


def pivotal_loss(match: PivotMatch, gt: Polyline) -> float:
    """Mean L1 distance between matched pivots and ground-truth pivots."""
    pivots = match.pivot_seq.points
    if len(pivots) != len(gt):
        raise ValidationError(
            f"pivot sequence length {len(pivots)} != ground-truth length {len(gt)}"
        )
    total = 0.0
    for g, p in zip(gt.points, pivots):
        total += abs(g.x - p.x) + abs(g.y - p.y)
    return total / len(gt)


def collinear_targets(gt_pivots: Polyline, gap_sizes: Sequence[int]) -> list[list[Point2]]:
    """Per-gap target points interpolated between adjacent ground-truth pivots.

    The r-th of R targets in a gap sits at fraction r / (R + 1) of the way
    from the gap's left pivot to its right pivot, so targets are ordered
    monotonically along the segment.
    """
    pts = gt_pivots.points
    if len(gap_sizes) != len(pts) - 1:
        raise ValidationError(
            f"expected {len(pts) - 1} gap sizes for {len(pts)} pivots, got {len(gap_sizes)}"
        )
    out: list[list[Point2]] = []
    for (a, b), r_n in zip(zip(pts, pts[1:]), gap_sizes):
        if r_n < 0:
            raise ValidationError(f"gap size must be non-negative, got {r_n}")
        group = []
        for r in range(1, r_n + 1):
            theta = r / (r_n + 1)
            group.append(Point2((1 - theta) * a.x + theta * b.x,
                                (1 - theta) * a.y + theta * b.y))
        out.append(group)
    return out


def collinear_loss(match: PivotMatch, gt: Polyline) -> float:
    """Mean L1 distance of collinear points to their interpolated targets.

    Zero by convention when the prediction has no collinear points.
    """
    n_collinear = sum(len(g) for g in match.collinear_groups)
    if n_collinear == 0:
        return 0.0
    targets = collinear_targets(gt, match.gap_sizes)
    total = 0.0
    for group, target_group in zip(match.collinear_groups, targets):
        for p, c in zip(group, target_group):
            total += abs(p.x - c.x) + abs(p.y - c.y)
    return total / n_collinear


def _clamped(p: float) -> float:
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def pivot_cls_loss(probs: Sequence[float], match: PivotMatch) -> float:
    """Mean binary cross-entropy of per-point pivot probabilities.

    Labels are 1 at the matched combination's indices and 0 elsewhere;
    probabilities are clamped away from {0, 1} so the loss stays finite.
    """
    n = match.num_pred_points
    if len(probs) != n:
        raise ValidationError(f"expected {n} probabilities, got {len(probs)}")
    pivot_idx = set(match.combination.indices)
    total = 0.0
    for i, p in enumerate(probs):
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"probability {i} outside [0, 1]: {p}")
        q = _clamped(p)
        total += -math.log(q) if i in pivot_idx else -math.log(1.0 - q)
    return total / n


def dvs_total(
    pred: Polyline,
    probs: Sequence[float],
    gt: Polyline,
    weights: DvsWeights = DvsWeights(),
    match: PivotMatch | None = None,
) -> DvsReport:
    """Full weighted loss with analytic subgradients.

    The matching is computed internally (pass `match` to freeze a known one,
    e.g. for finite-difference checks). Gradients treat the matching as
    constant; the classification gradient is taken with respect to the
    pre-sigmoid logit of each (clamped) probability.
    """
    if pred.closed or gt.closed:
        raise ValidationError(
            "sequence losses are defined on open sequences; cut polygons open first "
            "(see matching.open_for_matching)"
        )
    if match is None:
        match = pdm_dp(pred, gt)
    else:
        # Freezing a matching freezes its combination; the pivot/collinear
        # split is rebound to the current prediction points.
        match = split_sequence(pred, match.combination, cost=match.cost)
    n = len(pred)
    t = len(gt)
    if match.num_pred_points != n:
        raise ValidationError(
            f"match covers {match.num_pred_points} prediction points, polyline has {n}"
        )
    l_pp = pivotal_loss(match, gt)
    l_cp = collinear_loss(match, gt)
    l_cls = pivot_cls_loss(probs, match)
    total = weights.alpha1 * l_pp + weights.alpha2 * l_cp + weights.alpha3 * l_cls

    residuals = np.zeros((n, 2))
    grad = np.zeros((n, 2))
    pts = pred.points
    scale = weights.alpha1 / t
    for g, j in zip(gt.points, match.combination.indices):
        p = pts[j]
        residuals[j] = (p.x - g.x, p.y - g.y)
        grad[j] = (scale * _sign(residuals[j, 0]), scale * _sign(residuals[j, 1]))
    n_collinear = n - t
    if n_collinear > 0:
        targets = collinear_targets(gt, match.gap_sizes)
        scale = weights.alpha2 / n_collinear
        for idx_group, target_group in zip(match.collinear_indices(), targets):
            for j, c in zip(idx_group, target_group):
                p = pts[j]
                residuals[j] = (p.x - c.x, p.y - c.y)
                grad[j] = (scale * _sign(residuals[j, 0]), scale * _sign(residuals[j, 1]))

    labels = np.zeros(n)
    labels[list(match.combination.indices)] = 1.0
    clamped = np.clip(np.asarray(probs, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    cls_grad = weights.alpha3 * (clamped - labels) / n

    return DvsReport(l_pp, l_cp, l_cls, total, grad, cls_grad, residuals, match)


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0
