"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
tolerances and budgets are pinned in the assertions, never adjusted at run
time.
"""

import math
import time

import numpy as np

from pivotmap import (
    BevRange,
    ElementClass,
    FitConfig,
    LocalMap,
    MapElement,
    Polyline,
    SimplifyConfig,
    collinear_targets,
    compactness_experiment,
    dice_loss,
    dvs_total,
    evaluate,
    fit_points,
    gen_element,
    match_cost,
    pdm_bruteforce,
    pdm_dp,
    vw_simplify,
)
from pivotmap.geometry import points_in_order_subsequence
from pivotmap.synth import CORNER_HEAVY_KINDS


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def random_open(rng, n):
    return Polyline.from_xy(rng.uniform(-15, 15, size=(n, 2)))


def test_oracle_equivalence_exhaustive_sweep():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    checked = 0
    for n in range(2, 13):
        for t in range(2, n + 1):
            for _ in range(500):
                pred, gt = random_open(rng, n), random_open(rng, t)
                bf = pdm_bruteforce(pred, gt)
                dp = pdm_dp(pred, gt)
                assert dp.cost == bf.cost, (n, t, dp.cost, bf.cost)
                assert dp.combination == bf.combination, (n, t)
                checked += 1
    elapsed = time.perf_counter() - start
    report("oracle-equivalence",
           checked == 33000 and elapsed < 60.0,
           f"{checked} instances exact-equal in {elapsed:.1f}s (< 60s)")


def test_dp_performance_large_instance():
    rng = np.random.default_rng(7)
    pred = random_open(rng, 1000)
    gt = random_open(rng, 100)
    pdm_dp(pred, gt)  # warm-up
    best = math.inf
    for _ in range(3):
        t0 = time.perf_counter()
        big = pdm_dp(pred, gt)
        best = min(best, time.perf_counter() - t0)
    # Spot-check oracle: a sub-sampled instance small enough to enumerate.
    sub_pred = Polyline(tuple(pred.points[i] for i in range(0, 1000, 91)))  # 11 pts incl. 0
    sub_pred = Polyline(tuple(sub_pred.points[:10]) + (pred.points[999],))
    sub_gt = Polyline(tuple(gt.points[i] for i in (0, 30, 60, 99)))
    sub_dp, sub_bf = pdm_dp(sub_pred, sub_gt), pdm_bruteforce(sub_pred, sub_gt)
    report("dp-performance",
           best < 0.100 and sub_dp.cost == sub_bf.cost and big.cost >= 0.0,
           f"N=1000,T=100 in {best * 1000:.1f}ms (< 100ms); sub-sampled oracle equal")


def test_prefix_special_case_t_greater_than_n():
    rng = np.random.default_rng(9)
    ok = True
    for _ in range(50):
        n = int(rng.integers(2, 6))
        t = int(rng.integers(n + 1, n + 6))
        pred, gt = random_open(rng, n), random_open(rng, t)
        m = pdm_dp(pred, gt)
        expected = 0.0
        for j in range(n):
            expected += (abs(gt.points[j].x - pred.points[j].x)
                         + abs(gt.points[j].y - pred.points[j].y))
        ok = ok and m.cost == expected and m.combination.indices == tuple(range(n))
    report("prefix-special-case", ok, "50 T>N instances reproduce the diagonal prefix sum")


def test_gradient_against_central_differences():
    rng = np.random.default_rng(11)
    h = 1e-5
    worst = 0.0
    instances = 0
    while instances < 100:
        n = int(rng.integers(3, 9))
        t = int(rng.integers(2, n))
        pred, gt = random_open(rng, n), random_open(rng, t)
        probs = rng.uniform(0.2, 0.8, size=n)
        match = pdm_dp(pred, gt)
        rep = dvs_total(pred, probs, gt, match=match)
        if np.abs(rep.residuals).min() <= 10 * h:
            continue
        instances += 1
        coords = pred.to_array()
        for i in range(n):
            for axis in range(2):
                fd = 0.0
                for delta, sign in ((h, 1.0), (-h, -1.0)):
                    shifted = coords.copy()
                    shifted[i, axis] += delta
                    fd += sign * dvs_total(Polyline.from_xy(shifted), probs, gt,
                                           match=match).total
                fd /= 2 * h
                err = abs(rep.grad[i, axis] - fd) / max(abs(fd), 1e-12)
                worst = max(worst, err)
    report("gradient-correctness", worst < 1e-5,
           f"100 instances, max relative error {worst:.2e} (< 1e-5)")


def test_collinear_targets_exact_for_all_gap_sizes():
    rng = np.random.default_rng(13)
    worst = 0.0
    for r_n in range(21):
        a = rng.uniform(-15, 15, size=2)
        b = rng.uniform(-15, 15, size=2)
        groups = collinear_targets(Polyline.from_xy([a, b]), [r_n])
        for r, p in enumerate(groups[0], start=1):
            theta = r / (r_n + 1)
            worst = max(worst,
                        abs(p.x - ((1 - theta) * a[0] + theta * b[0])),
                        abs(p.y - ((1 - theta) * a[1] + theta * b[1])))
    report("collinear-targets", worst <= 1e-12,
           f"R=0..20 max deviation {worst:.2e} (<= 1e-12)")


def test_loss_identities():
    rng = np.random.default_rng(17)
    l_pp_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 10))
        t = int(rng.integers(2, n + 1))
        pred, gt = random_open(rng, n), random_open(rng, t)
        rep = dvs_total(pred, rng.uniform(0, 1, size=n), gt)
        l_pp_ok = l_pp_ok and rep.l_pp == match_cost(pred, gt, rep.match.combination)

    mask = (rng.random((16, 16)) < 0.25).astype(float)
    mask[0, 0] = 1.0  # ensure nonempty
    dice_ok = dice_loss(mask, mask) == 0.0

    aps = _fixture_ap_by_threshold()
    ap_ok = aps[0.2] <= aps[0.5] <= aps[1.0]
    report("loss-identities", l_pp_ok and dice_ok and ap_ok,
           f"l_pp==match_cost exactly; dice(m,m)=0; AP by threshold {aps}")


def _fixture_ap_by_threshold():
    def seg(y, offset):
        return Polyline.from_xy([(-5, y + offset), (5, y + offset)])

    gts, preds = [], []
    offsets = [0.05, 0.3, 0.7, 0.05, 0.3, 0.7]
    scores = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4]
    gt_el = [MapElement(ElementClass.DIVIDER, seg(3.0 * i, 0.0)) for i in range(6)]
    pred_el = [MapElement(ElementClass.DIVIDER, seg(3.0 * i, offsets[i]), scores[i])
               for i in range(6)]
    gts.append(LocalMap("f", BevRange(), tuple(gt_el)))
    preds.append(LocalMap("f", BevRange(), tuple(pred_el)))
    result = evaluate(preds, gts)
    return {t: result.ap[ElementClass.DIVIDER][t] for t in (0.2, 0.5, 1.0)}


def test_fitting_convergence_rectangle_outline():
    gt = Polyline.from_xy([(0, 0), (2, 0), (2, 1), (0, 1)])
    converged = 0
    slowest = 0.0
    finals = []
    for seed in range(5):
        t0 = time.perf_counter()
        trace = fit_points(gt, 10, FitConfig(seed=seed))
        elapsed = time.perf_counter() - t0
        slowest = max(slowest, elapsed)
        finals.append(trace.entries[-1].l_pp)
        if trace.entries[-1].l_pp < 0.05:
            converged += 1
    report("fitting-convergence", converged >= 4 and slowest < 30.0,
           f"{converged}/5 seeds below 0.05 (final l_pp {['%.1e' % v for v in finals]}), "
           f"slowest seed {slowest:.1f}s (< 30s)")


def test_compactness_pivot_beats_even_by_factor_two():
    t0 = time.perf_counter()
    corpus = [gen_element(CORNER_HEAVY_KINDS[i % len(CORNER_HEAVY_KINDS)], i)
              for i in range(100)]
    result = compactness_experiment(corpus, 5)
    elapsed = time.perf_counter() - t0
    ratio = result.mean_pivot / result.mean_even
    report("compactness", ratio < 0.5 and elapsed < 60.0,
           f"mean pivot {result.mean_pivot:.3f} vs even {result.mean_even:.3f}, "
           f"ratio {ratio:.2f} (< 0.5) in {elapsed:.1f}s (< 60s)")


def test_evaluation_hand_checked_fixture():
    def seg(y, cls=ElementClass.DIVIDER, score=None, x0=-5.0, x1=5.0):
        return MapElement(cls, Polyline.from_xy([(x0, y), (x1, y)]), score)

    gts = [
        LocalMap("f1", BevRange(), (seg(0.0),)),
        LocalMap("f2", BevRange(), (seg(5.0, ElementClass.BOUNDARY),)),
    ]
    preds = [
        LocalMap("f1", BevRange(), (seg(0.0, score=0.9),
                                    seg(-20.0, ElementClass.BOUNDARY, 0.9, -3.0, 3.0))),
        LocalMap("f2", BevRange(), (seg(12.0, score=0.8),
                                    seg(5.0, ElementClass.BOUNDARY, 0.8))),
    ]
    result = evaluate(preds, gts)
    ok = all(result.ap[ElementClass.DIVIDER][t] == 1.0 for t in (0.2, 0.5, 1.0)) and \
        all(result.ap[ElementClass.BOUNDARY][t] == 0.5 for t in (0.2, 0.5, 1.0)) and \
        result.mean_ap == 0.75
    report("evaluation-hand-check", ok,
           f"divider AP 1.0, boundary AP 0.5, mAP {result.mean_ap} exactly")


def test_vw_properties_on_random_polylines():
    rng = np.random.default_rng(23)
    grid = 64
    sub_ok = mono_ok = elim_ok = True
    for _ in range(1000):
        n = int(rng.integers(3, 14))
        while True:
            pts = rng.integers(-14 * grid, 14 * grid, size=(n, 2)) / grid
            if all((pts[i] != pts[i + 1]).any() for i in range(n - 1)):
                break
        line = Polyline.from_xy(pts)

        out = vw_simplify(line, SimplifyConfig(area_threshold=float(rng.uniform(0.005, 1.0))))
        sub_ok = sub_ok and points_in_order_subsequence(out.points, line.points)

        t1, t2 = sorted(rng.uniform(0.001, 2.0, size=2))
        mono_ok = mono_ok and len(vw_simplify(line, SimplifyConfig(area_threshold=t2))) <= \
            len(vw_simplify(line, SimplifyConfig(area_threshold=t1)))

        # Inject one exact midpoint: with a vanishing threshold exactly the
        # collinear points disappear.
        k = int(rng.integers(0, n - 1))
        a, b = line.points[k], line.points[k + 1]
        injected = (list(line.points[:k + 1])
                    + [type(a)((a.x + b.x) / 2, (a.y + b.y) / 2)]
                    + list(line.points[k + 1:]))
        dense = Polyline(tuple(injected))
        out0 = vw_simplify(dense, SimplifyConfig(area_threshold=1e-300))
        from pivotmap.geometry import triangle_area

        originally_collinear = sum(
            1 for i in range(1, len(dense) - 1)
            if triangle_area(dense.points[i - 1], dense.points[i], dense.points[i + 1]) == 0.0
        )
        elim_ok = elim_ok and len(out0) == len(dense) - originally_collinear
    report("vw-properties", sub_ok and mono_ok and elim_ok,
           "1000 polylines: subsequence, threshold-monotone, collinear-elimination")
