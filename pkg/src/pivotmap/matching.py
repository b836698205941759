"""Pivot sequence matching.

A prediction with N ordered points is matched to a ground-truth pivot
sequence of length T by choosing T prediction indices (a combination) with
both endpoints fixed: index 0 pairs with the first pivot and index N-1 with
the last. The matching cost is the mean per-pivot L1 distance, minimized
either by brute-force enumeration (the oracle) or by an O(N*T) dynamic
program over the band i <= j <= N-T+i with running-minimum arrays.

Cost ties are broken toward the lexicographically smallest index list in
both implementations, so they agree exactly, not just on cost. The T > N
case falls back to prefix matching: the first N pivots pair with prediction
indices 0..N-1 in order, and the reported cost is the raw (un-normalized)
sum of those pair distances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CapacityError, ValidationError
from .model import ElementClass, Point2, Polyline, _unchecked_polyline

_MIN_POINTS_MSG = "A line should contain two points at least"
_BRUTEFORCE_GUARD = 1_000_000


@dataclass(frozen=True)
class Combination:
    """Strictly increasing prediction indices selected as pivots."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) < 2:
            raise ValidationError(f"combination needs at least 2 indices, got {len(idx)}")
        if idx[0] != 0:
            raise ValidationError(f"combination must start at index 0, got {idx[0]}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError(f"combination indices must be strictly increasing: {idx}")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True)
class PivotMatch:
    """An optimal combination, its cost, and the induced pivot/collinear split.

    For a closed prediction polygon the matcher first cuts it open (see
    `open_for_matching`); `rotation` is the original index of the opened
    sequence's first point, so opened index i maps back to
    (i + rotation) % N.
    """

    combination: Combination
    cost: float
    pivot_seq: Polyline
    collinear_groups: tuple[tuple[Point2, ...], ...]
    rotation: int = 0

    @property
    def num_pred_points(self) -> int:
        return self.combination.indices[-1] + 1

    @property
    def gap_sizes(self) -> tuple[int, ...]:
        idx = self.combination.indices
        return tuple(b - a - 1 for a, b in zip(idx, idx[1:]))

    def collinear_indices(self) -> tuple[tuple[int, ...], ...]:
        """Prediction indices of each collinear group, in sequence order."""
        idx = self.combination.indices
        return tuple(tuple(range(a + 1, b)) for a, b in zip(idx, idx[1:]))


def split_sequence(pred: Polyline, beta: Combination, cost: float = 0.0,
                   rotation: int = 0) -> PivotMatch:
    """Split a prediction into its pivot subsequence and per-gap collinear groups."""
    _validate_combination(beta, n=len(pred))
    pts = pred.points
    idx = beta.indices
    pivot_seq = _unchecked_polyline((pts[i] for i in idx), closed=False)
    groups = tuple(tuple(pts[a + 1:b]) for a, b in zip(idx, idx[1:]))
    return PivotMatch(beta, cost, pivot_seq, groups, rotation)


def _validate_combination(beta: Combination, n: int, t: int | None = None) -> None:
    if beta.indices[-1] != n - 1:
        raise ValidationError(
            f"combination must end at the last prediction index {n - 1}, got {beta.indices[-1]}"
        )
    if t is not None and len(beta) != t:
        raise ValidationError(f"combination length {len(beta)} != ground-truth length {t}")


def _cost_sum(pred_pts: Sequence[Point2], gt_pts: Sequence[Point2], indices: Sequence[int]) -> float:
    # Shared by every matcher so equal combinations always yield bit-equal
    # costs: terms are accumulated left to right in ground-truth order.
    total = 0.0
    for g, j in zip(gt_pts, indices):
        p = pred_pts[j]
        total += abs(g.x - p.x) + abs(g.y - p.y)
    return total


def match_cost(pred: Polyline, gt: Polyline, beta: Combination) -> float:
    """Mean per-pivot L1 distance of the pairing selected by `beta`."""
    if pred.closed or gt.closed:
        raise ValidationError("sequence matching is defined for open polylines")
    _validate_combination(beta, n=len(pred), t=len(gt))
    return _cost_sum(pred.points, gt.points, beta.indices) / len(gt)


def _check_lengths(n: int, t: int) -> None:
    if n < 2 or t < 2:
        raise ValidationError(_MIN_POINTS_MSG)


def open_for_matching(pred: Polyline, gt: Polyline) -> tuple[Polyline, Polyline, int]:
    """Turn closed polygons into open sequences the matcher can handle.

    A closed ground truth is opened at its own first vertex; a closed
    prediction is cut at the vertex nearest the ground truth's first vertex
    (smallest index on ties). Returns (pred, gt, rotation) where rotation is
    the original index of the opened prediction's first point.
    """
    gt_open = Polyline(gt.points, closed=False) if gt.closed else gt
    if not pred.closed:
        return pred, gt_open, 0
    anchor = gt_open.points[0]
    k = min(range(len(pred.points)), key=lambda i: pred.points[i].dist(anchor))
    rotated = pred.points[k:] + pred.points[:k]
    return Polyline(rotated, closed=False), gt_open, k


def _prefix_match(pred: Polyline, gt: Polyline, rotation: int) -> PivotMatch:
    # T > N: pair the first N ground-truth points with prediction indices
    # 0..N-1; the cost here is the raw sum, mirroring the reference branch.
    n = len(pred)
    indices = tuple(range(n))
    cost = _cost_sum(pred.points, gt.points, indices)
    return split_sequence(pred, Combination(indices), cost=cost, rotation=rotation)


def pdm_bruteforce(pred: Polyline, gt: Polyline) -> PivotMatch:
    """Enumerate all endpoint-constrained combinations and keep the cheapest.

    Ties go to the lexicographically smallest index list. Refuses instances
    with more than 10^6 candidate combinations.
    """
    pred, gt, rotation = open_for_matching(pred, gt)
    n, t = len(pred), len(gt)
    _check_lengths(n, t)
    if t > n:
        return _prefix_match(pred, gt, rotation)
    if math.comb(n - 2, t - 2) > _BRUTEFORCE_GUARD:
        raise CapacityError(
            f"brute force refused: C({n - 2}, {t - 2}) combinations exceed {_BRUTEFORCE_GUARD}"
        )
    pred_pts, gt_pts = pred.points, gt.points
    best_sum = math.inf
    best: tuple[int, ...] | None = None
    for interior in itertools.combinations(range(1, n - 1), t - 2):
        indices = (0, *interior, n - 1)
        s = _cost_sum(pred_pts, gt_pts, indices)
        if s < best_sum:
            best_sum, best = s, indices
    return split_sequence(pred, Combination(best), cost=best_sum / t, rotation=rotation)


def pdm_dp(pred: Polyline, gt: Polyline) -> PivotMatch:
    """O(N*T) dynamic-programming matcher; agrees exactly with the oracle.

    Suffix costs S[i][j] (cheapest way to pair ground-truth points i.. with
    prediction indices starting exactly at j and ending at N-1) are built
    backward with a running-minimum array; the combination is then read off
    front to back, taking the smallest feasible index at every step, which
    yields the lexicographically smallest cost-minimal combination.
    """
    pred, gt, rotation = open_for_matching(pred, gt)
    n, t = len(pred), len(gt)
    _check_lengths(n, t)
    if t > n:
        return _prefix_match(pred, gt, rotation)

    pa = pred.to_array()
    ga = gt.to_array()
    cost = np.abs(ga[:, :1] - pa[None, :, 0]) + np.abs(ga[:, 1:] - pa[None, :, 1])

    suffix = np.full((t, n), np.inf)
    suffix[t - 1, n - 1] = cost[t - 1, n - 1]
    for i in range(t - 2, -1, -1):
        # best_from[j] = min over j' >= j of suffix[i+1][j']
        best_from = np.minimum.accumulate(suffix[i + 1][::-1])[::-1]
        lo, hi = i, n - t + i
        suffix[i, lo:hi + 1] = cost[i, lo:hi + 1] + best_from[lo + 1:hi + 2]

    indices = [0]
    prev = 0
    for i in range(1, t):
        lo, hi = prev + 1, n - t + i
        window = suffix[i, lo:hi + 1]
        prev = lo + int(np.argmin(window))
        indices.append(prev)
    total = _cost_sum(pred.points, gt.points, indices)
    return split_sequence(pred, Combination(tuple(indices)), cost=total / t, rotation=rotation)


@dataclass(frozen=True)
class InstanceAssignment:
    """One-to-one pairing of prediction and ground-truth instance indices."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_predictions: tuple[int, ...]

    def __post_init__(self):
        preds = [p for p, _ in self.pairs]
        gts = [g for _, g in self.pairs]
        if len(set(preds)) != len(preds) or len(set(gts)) != len(gts):
            raise ValidationError("assignment pairs must be one-to-one")


def assign_instances(
    preds: Sequence[Polyline],
    gts: Sequence[Polyline],
    element_class: ElementClass | None = None,
) -> InstanceAssignment:
    """Optimal instance assignment minimizing total sequence-matching cost.

    Every ground-truth instance is matched (requires #preds >= #GT);
    leftover predictions are listed as unmatched.
    """
    label = element_class.value if element_class is not None else "instances"
    if len(gts) > len(preds):
        raise CapacityError(
            f"{label}: {len(gts)} ground-truth instances exceed the {len(preds)} available predictions"
        )
    if not gts:
        return InstanceAssignment((), tuple(range(len(preds))))
    costs = np.array([[pdm_dp(p, g).cost for g in gts] for p in preds])
    rows, cols = linear_sum_assignment(costs)
    pairs = tuple(sorted((int(r), int(c)) for r, c in zip(rows, cols)))
    matched = {r for r, _ in pairs}
    unmatched = tuple(i for i in range(len(preds)) if i not in matched)
    return InstanceAssignment(pairs, unmatched)
