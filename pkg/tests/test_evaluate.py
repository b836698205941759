import numpy as np
import pytest

from pivotmap import (
    BevRange,
    ElementClass,
    EvalConfig,
    LocalMap,
    MapElement,
    Polyline,
    ValidationError,
    average_precision,
    chamfer_distance,
    evaluate,
    match_for_eval,
)


def seg(y, x0=-5.0, x1=5.0):
    return Polyline.from_xy([(x0, y), (x1, y)])


def element(line, cls=ElementClass.DIVIDER, score=None):
    return MapElement(cls, line, score)


def frame(fid, elements):
    return LocalMap(fid, BevRange(), tuple(elements))


# --- chamfer ----------------------------------------------------------------

def test_chamfer_identical_is_zero():
    line = Polyline.from_xy([(0, 0), (3, 1), (5, 0)])
    assert chamfer_distance(line, line) == 0.0


def test_chamfer_parallel_segments():
    assert chamfer_distance(seg(0.0), seg(0.5)) == pytest.approx(0.5, abs=1e-12)


def test_chamfer_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = Polyline.from_xy(rng.uniform(-10, 10, size=(4, 2)))
        b = Polyline.from_xy(rng.uniform(-10, 10, size=(3, 2)))
        assert chamfer_distance(a, b) == chamfer_distance(b, a)


def test_chamfer_step_convergence():
    a = Polyline.from_xy([(0, 0), (4, 0), (4, 4)])
    b = Polyline.from_xy([(0, 0.3), (4, 0.3), (4.3, 4)])
    coarse = chamfer_distance(a, b, step=0.1)
    fine = chamfer_distance(a, b, step=0.05)
    assert abs(fine - coarse) < 0.05


def test_chamfer_closed_resamples_full_perimeter():
    square = Polyline.from_xy([(0, 0), (2, 0), (2, 2), (0, 2)], closed=True)
    shifted = Polyline.from_xy([(0.1, 0), (2.1, 0), (2.1, 2), (0.1, 2)], closed=True)
    d = chamfer_distance(square, shifted)
    assert 0.0 < d <= 0.1 + 1e-9


# --- per-frame matching -----------------------------------------------------

def test_match_single_exact_prediction_is_tp():
    gt = element(seg(0.0))
    pred = element(seg(0.0), score=0.9)
    assert match_for_eval([pred], [gt], threshold=0.5) == [True]


def test_match_one_to_one_constraint():
    gt = element(seg(0.0))
    best = element(seg(0.0), score=0.9)
    other = element(seg(0.01), score=0.5)
    assert match_for_eval([best, other], [gt], threshold=0.5) == [True, False]
    # Score order decides who wins, regardless of list position.
    assert match_for_eval([other, best], [gt], threshold=0.5) == [False, True]


def test_match_strict_threshold():
    gt = element(seg(0.0))
    pred = element(seg(0.6), score=0.9)
    assert match_for_eval([pred], [gt], threshold=0.5) == [False]
    assert match_for_eval([pred], [gt], threshold=0.6) == [False]  # strictly below
    assert match_for_eval([pred], [gt], threshold=0.61) == [True]


def test_match_requires_scores():
    with pytest.raises(ValidationError, match="score"):
        match_for_eval([element(seg(0.0))], [element(seg(0.0))], threshold=0.5)


def test_match_rejects_mixed_classes():
    with pytest.raises(ValidationError, match="classes"):
        match_for_eval([element(seg(0.0), score=0.5)],
                       [element(seg(0.0), cls=ElementClass.BOUNDARY)], threshold=0.5)


# --- average precision ------------------------------------------------------

def test_ap_all_true_positives():
    assert average_precision([True, True], [0.9, 0.8], num_gt=2) == 1.0


def test_ap_tp_then_fp_reaches_full_recall_at_full_precision():
    assert average_precision([True, False], [0.9, 0.8], num_gt=1) == 1.0


def test_ap_fp_then_tp_halves():
    assert average_precision([False, True], [0.9, 0.8], num_gt=1) == 0.5


def test_ap_no_gt_no_preds_is_undefined():
    assert average_precision([], [], num_gt=0) is None


def test_ap_preds_against_zero_gt_score_zero():
    assert average_precision([False], [0.9], num_gt=0) == 0.0


def test_ap_score_rank_invariance():
    flags = [True, False, True, False, True]
    scores = [0.9, 0.8, 0.7, 0.6, 0.5]
    transformed = [0.99, 0.5, 0.4, 0.3, 0.01]  # same ranking
    assert average_precision(flags, scores, 3) == average_precision(flags, transformed, 3)


# --- evaluate ---------------------------------------------------------------

def fixture_two_frames():
    """Divider plays the TP-then-FP AP=1.0 case, boundary the FP-then-TP 0.5 case."""
    gt1 = frame("f1", [element(seg(0.0))])
    gt2 = frame("f2", [element(seg(5.0), cls=ElementClass.BOUNDARY)])
    pred1 = frame("f1", [
        element(seg(0.0), score=0.9),
        element(seg(-20.0, x0=-3, x1=3), cls=ElementClass.BOUNDARY, score=0.9),  # far FP
    ])
    pred2 = frame("f2", [
        element(seg(12.0), score=0.8),  # far FP divider
        element(seg(5.0), cls=ElementClass.BOUNDARY, score=0.8),
    ])
    return [pred1, pred2], [gt1, gt2]


def test_evaluate_hand_built_two_frame_fixture():
    preds, gts = fixture_two_frames()
    result = evaluate(preds, gts)
    for thr in (0.2, 0.5, 1.0):
        assert result.ap[ElementClass.DIVIDER][thr] == 1.0
        assert result.ap[ElementClass.BOUNDARY][thr] == 0.5
        assert result.ap[ElementClass.PED_CROSSING][thr] is None
    assert result.class_mean[ElementClass.DIVIDER] == 1.0
    assert result.class_mean[ElementClass.BOUNDARY] == 0.5
    assert result.mean_ap == pytest.approx(0.75)


def test_evaluate_perfect_predictions():
    gts = [frame("f", [element(seg(0.0)), element(seg(3.0), cls=ElementClass.BOUNDARY)])]
    preds = [frame("f", [element(seg(0.0), score=1.0),
                         element(seg(3.0), cls=ElementClass.BOUNDARY, score=1.0)])]
    result = evaluate(preds, gts)
    assert result.mean_ap == 1.0


def test_evaluate_empty_predictions():
    gts = [frame("f", [element(seg(0.0))])]
    preds = [frame("f", [])]
    result = evaluate(preds, gts)
    assert result.ap[ElementClass.DIVIDER][0.5] == 0.0
    assert result.mean_ap == 0.0


def test_evaluate_ap_monotone_in_threshold():
    rng = np.random.default_rng(1)
    gts, preds = [], []
    for f in range(3):
        gt_el = [element(seg(float(y))) for y in range(-9, 10, 3)]
        pred_el = [element(seg(y + float(rng.uniform(-0.8, 0.8))), score=float(rng.random()))
                   for y in range(-9, 10, 3)]
        gts.append(frame(f"f{f}", gt_el))
        preds.append(frame(f"f{f}", pred_el))
    result = evaluate(preds, gts, EvalConfig(thresholds=(0.2, 0.5, 1.0)))
    aps = [result.ap[ElementClass.DIVIDER][t] for t in (0.2, 0.5, 1.0)]
    assert aps[0] <= aps[1] <= aps[2]


def test_evaluate_rejects_frame_mismatch():
    gts = [frame("a", [element(seg(0.0))])]
    preds = [frame("b", [element(seg(0.0), score=1.0)])]
    with pytest.raises(ValidationError, match="frame mismatch"):
        evaluate(preds, gts)


def test_evaluate_parallel_jobs_deterministic():
    preds, gts = fixture_two_frames()
    sequential = evaluate(preds, gts)
    parallel = evaluate(preds, gts, jobs=2)
    assert sequential.to_json_dict() == parallel.to_json_dict()


def test_eval_config_validation():
    with pytest.raises(ValidationError):
        EvalConfig(thresholds=(0.5, 0.2))
    with pytest.raises(ValidationError):
        EvalConfig(sample_step=0.0)
