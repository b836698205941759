"""Desk-scale optimization harness.

Fits N free points (plus per-point pivot probabilities) to a ground-truth
pivot sequence by iterating: rematch with the dynamic program, evaluate the
sequence loss, and take sign-gradient steps on coordinates and plain
gradient steps on the probability logits. Sign steps suit the piecewise
linear L1 landscape; both learning rates decay by 0.2 at 70% and 90% of the
step budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .evaluate import chamfer_distance
from .losses import DvsWeights, dvs_total
from .matching import PivotMatch
from .model import Polyline
from .simplify import SimplifyConfig, vw_simplify

INIT_PADDING = 1.0  # meters around the ground-truth bounding box
PIVOT_PROB_THRESHOLD = 0.5


@dataclass(frozen=True)
class FitConfig:
    steps: int = 2000
    learning_rate: float = 0.05
    prob_lr: float = 0.1
    seed: int = 0
    weights: DvsWeights = field(default_factory=DvsWeights)
    log_interval: int = 50

    def __post_init__(self):
        if self.steps < 1 or self.learning_rate <= 0.0 or self.prob_lr <= 0.0:
            raise ValidationError("steps and learning rates must be positive")
        if self.log_interval < 1:
            raise ValidationError("log_interval must be positive")


@dataclass
class FitTraceEntry:
    step: int
    l_pp: float
    l_cp: float
    l_cls: float
    total: float


@dataclass
class FitTrace:
    entries: list[FitTraceEntry]
    init_line: Polyline
    final_line: Polyline
    final_probs: np.ndarray
    final_match: PivotMatch
    combination_history: list[tuple[int, ...]]


def _decay(base: float, step: int, total_steps: int) -> float:
    if step >= 0.9 * total_steps:
        return base * 0.04
    if step >= 0.7 * total_steps:
        return base * 0.2
    return base


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_points(gt: Polyline, n_points: int, cfg: FitConfig = FitConfig(),
               init: np.ndarray | None = None) -> FitTrace:
    """Drive a random point set to the ground-truth pivot representation.

    Points start uniformly random inside the ground truth's padded bounding
    box (or at `init`, shape (N, 2)), probabilities at 0.5.
    """
    if gt.closed:
        raise ValidationError("fitting expects an open ground-truth sequence")
    t = len(gt)
    if not 2 <= t <= n_points:
        raise ValidationError(f"need 2 <= T <= N, got T={t}, N={n_points}")
    if init is None:
        rng = np.random.default_rng(cfg.seed)
        ga = gt.to_array()
        lo = ga.min(axis=0) - INIT_PADDING
        hi = ga.max(axis=0) + INIT_PADDING
        coords = rng.uniform(lo, hi, size=(n_points, 2))
    else:
        coords = np.array(init, dtype=np.float64)
        if coords.shape != (n_points, 2):
            raise ValidationError(f"init must have shape ({n_points}, 2), got {coords.shape}")
    logits = np.zeros(n_points)
    init_line = Polyline.from_xy(coords)

    entries: list[FitTraceEntry] = []
    history: list[tuple[int, ...]] = []
    report = None
    for step in range(cfg.steps + 1):
        line = Polyline.from_xy(coords)
        probs = _sigmoid(logits)
        report = dvs_total(line, probs, gt, cfg.weights)
        history.append(report.match.combination.indices)
        if step % cfg.log_interval == 0 or step == cfg.steps:
            entries.append(FitTraceEntry(step, report.l_pp, report.l_cp,
                                         report.l_cls, report.total))
        if step == cfg.steps:
            break
        # Sign steps, capped at the distance to the L1 kink so points settle
        # exactly on their targets instead of orbiting at the learning rate.
        lr = _decay(cfg.learning_rate, step, cfg.steps)
        coords = coords - np.sign(report.grad) * np.minimum(lr, np.abs(report.residuals))
        logits = logits - _decay(cfg.prob_lr, step, cfg.steps) * report.cls_grad

    return FitTrace(entries, init_line, Polyline.from_xy(coords), _sigmoid(logits),
                    report.match, history)


@dataclass
class RoundTripReport:
    pivots: Polyline
    trace: FitTrace
    reconstructed: Polyline | None
    recovered_count: int
    chamfer: float


def round_trip(gt_dense: Polyline, simplify_cfg: SimplifyConfig = SimplifyConfig(),
               n_points: int = 10, fit_cfg: FitConfig = FitConfig()) -> RoundTripReport:
    """End-to-end consistency check: simplify, fit, reconstruct, and score.

    The fitted points with pivot probability above 0.5 form the
    reconstruction, which is scored by Chamfer distance against the dense
    original.
    """
    pivots = vw_simplify(gt_dense, simplify_cfg)
    trace = fit_points(pivots, n_points, fit_cfg)
    kept = [p for p, prob in zip(trace.final_line.points, trace.final_probs)
            if prob > PIVOT_PROB_THRESHOLD]
    if len(kept) >= 2:
        reconstructed = Polyline(tuple(kept))
        dist = chamfer_distance(reconstructed, gt_dense)
    else:
        reconstructed = None
        dist = float("inf")
    return RoundTripReport(pivots, trace, reconstructed, len(kept), dist)
