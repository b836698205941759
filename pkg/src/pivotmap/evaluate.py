"""Chamfer-distance average-precision evaluation.

Predictions are matched to ground truth greedily in descending score order;
a prediction is a true positive when its Chamfer distance to some still
unmatched ground-truth instance of the same class is strictly below the
threshold. AP is the area under the monotone precision envelope of the full
precision/recall curve (all-point interpolation), computed from a global
score sort across frames.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .geometry import resample_step
from .model import ElementClass, LocalMap, MapElement, Polyline

DEFAULT_THRESHOLDS = (0.2, 0.5, 1.0)
ALT_THRESHOLDS = (0.5, 1.0, 1.5)


@dataclass(frozen=True)
class EvalConfig:
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    sample_step: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(self.thresholds))
        if not self.thresholds or any(t <= 0.0 for t in self.thresholds):
            raise ValidationError("thresholds must be positive")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValidationError("thresholds must be strictly ascending")
        if self.sample_step <= 0.0:
            raise ValidationError("sample_step must be positive")


@dataclass
class EvalResult:
    """AP per class and threshold; None marks classes absent from GT and preds."""

    ap: dict[ElementClass, dict[float, float | None]]
    class_mean: dict[ElementClass, float | None]
    mean_ap: float | None

    def to_json_dict(self) -> dict:
        return {
            "ap": {
                cls.value: {repr(thr): v for thr, v in per_cls.items()}
                for cls, per_cls in self.ap.items()
            },
            "class_mean": {cls.value: v for cls, v in self.class_mean.items()},
            "mAP": self.mean_ap,
        }


def chamfer_distance(a: Polyline, b: Polyline, step: float = 0.1) -> float:
    """Symmetric mean nearest-sample distance between two resampled polylines."""
    sa = resample_step(a, step)
    sb = resample_step(b, step)
    d = np.hypot(sa[:, 0:1] - sb[None, :, 0], sa[:, 1:2] - sb[None, :, 1])
    return 0.5 * (float(d.min(axis=1).mean()) + float(d.min(axis=0).mean()))


def match_for_eval(
    preds: Sequence[MapElement],
    gts: Sequence[MapElement],
    threshold: float,
    step: float = 0.1,
) -> list[bool]:
    """Per-prediction TP flags (input order) under greedy score-ordered matching."""
    classes = {el.element_class for el in list(preds) + list(gts)}
    if len(classes) > 1:
        raise ValidationError(f"matching mixes classes: {sorted(c.value for c in classes)}")
    matrix = chamfer_matrix(preds, gts, step)
    return greedy_tp_flags(matrix, [el.score for el in preds], threshold)


def chamfer_matrix(preds: Sequence[MapElement], gts: Sequence[MapElement],
                   step: float) -> np.ndarray:
    """Pairwise Chamfer distances, shape (#preds, #gts)."""
    out = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            out[i, j] = chamfer_distance(p.line, g.line, step)
    return out


def greedy_tp_flags(matrix: np.ndarray, scores: Sequence[float | None],
                    threshold: float) -> list[bool]:
    for i, s in enumerate(scores):
        if s is None:
            raise ValidationError(f"prediction {i} has no score")
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    taken = np.zeros(matrix.shape[1], dtype=bool)
    flags = [False] * len(scores)
    for i in order:
        if matrix.shape[1] == 0:
            break
        dists = np.where(taken, np.inf, matrix[i])
        j = int(np.argmin(dists))
        if dists[j] < threshold:
            taken[j] = True
            flags[i] = True
    return flags


def average_precision(flags: Sequence[bool], scores: Sequence[float],
                      num_gt: int) -> float | None:
    """Area under the monotone precision envelope.

    Returns None (undefined) when there is neither ground truth nor any
    prediction for the class; all-false-positive predictions against zero
    ground truth score 0.
    """
    if num_gt < 0:
        raise ValidationError(f"num_gt must be >= 0, got {num_gt}")
    if num_gt == 0:
        return None if len(flags) == 0 else 0.0
    if len(flags) == 0:
        return 0.0
    order = sorted(range(len(flags)), key=lambda i: -scores[i])
    tp = np.cumsum([1.0 if flags[i] else 0.0 for i in order])
    fp = np.cumsum([0.0 if flags[i] else 1.0 for i in order])
    recall = tp / num_gt
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev_recall) * envelope))


def _frame_class_matrices(task):
    (preds, gts, step) = task
    return chamfer_matrix(preds, gts, step)


def evaluate(
    pred_maps: Sequence[LocalMap],
    gt_maps: Sequence[LocalMap],
    cfg: EvalConfig = EvalConfig(),
    jobs: int = 1,
) -> EvalResult:
    """Full AP table over classes and thresholds, plus class means and mAP.

    Frames are paired one-to-one by frame_id. Frames are independent, so the
    Chamfer matrices may be computed in parallel (`jobs`); aggregation uses a
    deterministic global score sort afterwards.
    """
    pred_by_frame = {m.frame_id: m for m in pred_maps}
    gt_by_frame = {m.frame_id: m for m in gt_maps}
    if len(pred_by_frame) != len(pred_maps) or len(gt_by_frame) != len(gt_maps):
        raise ValidationError("duplicate frame_id")
    missing_gt = sorted(set(pred_by_frame) - set(gt_by_frame))
    missing_pred = sorted(set(gt_by_frame) - set(pred_by_frame))
    if missing_gt or missing_pred:
        raise ValidationError(
            f"frame mismatch: missing from gts {missing_gt}, missing from preds {missing_pred}"
        )

    frame_ids = sorted(gt_by_frame)
    tasks = []
    for fid in frame_ids:
        for cls in ElementClass:
            preds = [el for el in pred_by_frame[fid].elements if el.element_class == cls]
            gts = [el for el in gt_by_frame[fid].elements if el.element_class == cls]
            tasks.append((cls, preds, gts))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            matrices = list(pool.map(
                _frame_class_matrices,
                [(preds, gts, cfg.sample_step) for _, preds, gts in tasks],
            ))
    else:
        matrices = [chamfer_matrix(preds, gts, cfg.sample_step) for _, preds, gts in tasks]

    ap: dict[ElementClass, dict[float, float | None]] = {}
    class_mean: dict[ElementClass, float | None] = {}
    for cls in ElementClass:
        num_gt = sum(len(gts) for c, _, gts in tasks if c == cls)
        per_threshold: dict[float, float | None] = {}
        for thr in cfg.thresholds:
            scores: list[float] = []
            flags: list[bool] = []
            for (c, preds, _), matrix in zip(tasks, matrices):
                if c != cls or not preds:
                    continue
                pred_scores = [el.score for el in preds]
                frame_flags = greedy_tp_flags(matrix, pred_scores, thr)
                scores.extend(pred_scores)
                flags.extend(frame_flags)
            per_threshold[thr] = average_precision(flags, scores, num_gt)
        ap[cls] = per_threshold
        defined = [v for v in per_threshold.values() if v is not None]
        class_mean[cls] = sum(defined) / len(defined) if defined else None
    defined_classes = [v for v in class_mean.values() if v is not None]
    mean_ap = sum(defined_classes) / len(defined_classes) if defined_classes else None
    return EvalResult(ap, class_mean, mean_ap)
