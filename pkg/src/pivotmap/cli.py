"""Command-line interface: every operation as a subcommand with JSONL in/out.

Exit codes: 0 success, 2 invalid input, 3 capacity guard exceeded, 4 I/O
error. Data errors are reported on stderr as one JSON object:
``{"error": {"kind": ..., "detail": ...}}``. Given identical inputs, flags,
and seed, every subcommand produces byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CapacityError, ParseError, PivotMapError, ValidationError
from .evaluate import DEFAULT_THRESHOLDS, EvalConfig, chamfer_distance, evaluate
from .fitting import FitConfig, fit_points
from .losses import DvsWeights, collinear_targets, dvs_total
from .matching import assign_instances, open_for_matching, pdm_dp
from .model import (
    BevRange,
    ClassBudget,
    ElementClass,
    LocalMap,
    MapElement,
    Polyline,
    clip_to_range,
    load_local_maps,
    serialize_local_map,
)
from .raster import DEFAULT_GRID_SHAPE, MaskLossWeights, rasterize, union_mask
from .simplify import SimplifyConfig, vw_reduce, vw_simplify
from .synth import ShapeKind, compactness_experiment, even_resample, gen_element


@dataclass
class Config:
    """Defaults overridable through a --config JSON file.

    `budgets` stays None (no enforcement) unless the config file provides
    per-class limits, which `match` and `loss` then apply to predictions.
    """

    dvs_weights: DvsWeights = field(default_factory=DvsWeights)
    mask_weights: MaskLossWeights = field(default_factory=MaskLossWeights)
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    sample_step: float = 0.1
    area_threshold: float = 0.01
    tolerance_epsilon: float = 0.1
    budgets: ClassBudget | None = None
    grid_shape: tuple[int, int] = DEFAULT_GRID_SHAPE
    thickness: float | None = None


_CONFIG_KEYS = {
    "dvs_weights", "mask_weights", "thresholds", "sample_step",
    "area_threshold", "tolerance_epsilon", "budgets", "grid_shape", "thickness",
}


def load_config(path: str | None) -> Config:
    cfg = Config()
    if path is None:
        return cfg
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"config {path}: {e.msg}") from e
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"config {path}: unknown keys {sorted(unknown)}")
    if "dvs_weights" in raw:
        cfg.dvs_weights = DvsWeights(**raw["dvs_weights"])
    if "mask_weights" in raw:
        cfg.mask_weights = MaskLossWeights(**raw["mask_weights"])
    if "thresholds" in raw:
        cfg.thresholds = tuple(float(t) for t in raw["thresholds"])
    if "sample_step" in raw:
        cfg.sample_step = float(raw["sample_step"])
    if "area_threshold" in raw:
        cfg.area_threshold = float(raw["area_threshold"])
    if "tolerance_epsilon" in raw:
        cfg.tolerance_epsilon = float(raw["tolerance_epsilon"])
    if "budgets" in raw:
        cfg.budgets = ClassBudget(
            max_instances={ElementClass(k): int(v["max_instances"]) for k, v in raw["budgets"].items()},
            max_points={ElementClass(k): int(v["max_points"]) for k, v in raw["budgets"].items()},
        )
    if "grid_shape" in raw:
        rows, cols = raw["grid_shape"]
        cfg.grid_shape = (int(rows), int(cols))
    if "thickness" in raw and raw["thickness"] is not None:
        cfg.thickness = float(raw["thickness"])
    return cfg


def _read_lines(path: str | None) -> list[str]:
    if path is None or path == "-":
        return sys.stdin.read().splitlines()
    return Path(path).read_text(encoding="utf-8").splitlines()


class _Output:
    def __init__(self, path: str | None):
        self.path = path
        self._lines: list[str] = []

    def write(self, line: str) -> None:
        self._lines.append(line)

    def flush(self) -> None:
        text = "".join(f"{line}\n" for line in self._lines)
        if self.path is None or self.path == "-":
            sys.stdout.write(text)
        else:
            Path(self.path).write_text(text, encoding="utf-8")


def _load_maps(path: str | None) -> list[LocalMap]:
    return load_local_maps(_read_lines(path))


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _polyline_from_json(raw, what: str) -> Polyline:
    if not isinstance(raw, dict) or "points" not in raw:
        raise ValidationError(f"{what}: expected an object with a 'points' list")
    return Polyline.from_xy(raw["points"], closed=bool(raw.get("closed", False)))


def _normalizer(rng: BevRange):
    def transform(line: Polyline) -> Polyline:
        return Polyline.from_xy(
            (((p.x - rng.x_min) / rng.width, (p.y - rng.y_min) / rng.height)
             for p in line.points),
            closed=line.closed,
        )
    return transform


def _check_budgets(pred_map: LocalMap, budgets: ClassBudget | None) -> None:
    if budgets is None:
        return
    counts: dict[ElementClass, int] = {}
    for el in pred_map.elements:
        cls = el.element_class
        counts[cls] = counts.get(cls, 0) + 1
        limit = budgets.max_points.get(cls)
        if limit is not None and len(el.line) > limit:
            raise CapacityError(
                f"{pred_map.frame_id}: {cls.value} prediction has {len(el.line)} points, "
                f"budget allows {limit}"
            )
    for cls, count in counts.items():
        limit = budgets.max_instances.get(cls)
        if limit is not None and count > limit:
            raise CapacityError(
                f"{pred_map.frame_id}: {count} {cls.value} predictions exceed the budget of {limit}"
            )


def _paired_frames(preds: list[LocalMap], gts: list[LocalMap]):
    pred_by_id = {m.frame_id: m for m in preds}
    gt_by_id = {m.frame_id: m for m in gts}
    missing = sorted(set(pred_by_id) ^ set(gt_by_id))
    if missing:
        raise ValidationError(f"frame mismatch between prediction and ground-truth files: {missing}")
    for fid in sorted(pred_by_id):
        yield fid, pred_by_id[fid], gt_by_id[fid]


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simplify(args) -> int:
    cfg = load_config(args.config)
    area = args.area_threshold if args.area_threshold is not None else cfg.area_threshold
    eps = args.epsilon if args.epsilon is not None else cfg.tolerance_epsilon
    simplify_cfg = SimplifyConfig(area_threshold=area, tolerance_epsilon=eps)
    out = _Output(args.out)
    for local_map in _load_maps(args.infile):
        elements = tuple(
            MapElement(el.element_class, vw_simplify(el.line, simplify_cfg), el.score)
            for el in local_map.elements
        )
        out.write(serialize_local_map(LocalMap(local_map.frame_id, local_map.bev_range, elements)))
    out.flush()
    return 0


def _match_records(fid: str, pred_map: LocalMap, gt_map: LocalMap):
    for cls in ElementClass:
        preds = [el.line for el in pred_map.elements if el.element_class == cls]
        gts = [el.line for el in gt_map.elements if el.element_class == cls]
        if not preds and not gts:
            continue
        assignment = assign_instances(preds, gts, element_class=cls)
        for pred_i, gt_i in assignment.pairs:
            match = pdm_dp(preds[pred_i], gts[gt_i])
            record = {
                "frame_id": fid,
                "class": cls.value,
                "pred_index": pred_i,
                "gt_index": gt_i,
                "combination": list(match.combination.indices),
                "cost": match.cost,
            }
            if match.rotation:
                record["rotation"] = match.rotation
            yield record
        for pred_i in assignment.unmatched_predictions:
            yield {
                "frame_id": fid,
                "class": cls.value,
                "pred_index": pred_i,
                "gt_index": None,
            }


def _cmd_match(args) -> int:
    cfg = load_config(args.config)
    out = _Output(args.out)
    for fid, pred_map, gt_map in _paired_frames(_load_maps(args.preds), _load_maps(args.gts)):
        _check_budgets(pred_map, cfg.budgets)
        for record in _match_records(fid, pred_map, gt_map):
            out.write(_dumps(record))
    out.flush()
    return 0


def _probs_by_frame(lines: list[str]) -> dict[str, list[list[float] | None]]:
    """Optional per-element "probs" arrays riding along prediction records."""
    result: dict[str, list[list[float] | None]] = {}
    for line in lines:
        if not line.strip():
            continue
        raw = json.loads(line)
        result[raw["frame_id"]] = [el.get("probs") for el in raw["elements"]]
    return result


def _cmd_loss(args) -> int:
    cfg = load_config(args.config)
    pred_lines = _read_lines(args.preds)
    preds = load_local_maps(pred_lines)
    gts = _load_maps(args.gts)
    probs_by_frame = _probs_by_frame(pred_lines)
    out = _Output(args.out)
    for fid, pred_map, gt_map in _paired_frames(preds, gts):
        _check_budgets(pred_map, cfg.budgets)
        transform = _normalizer(pred_map.bev_range) if args.normalize else (lambda line: line)
        frame_probs = probs_by_frame.get(fid, [])
        for cls in ElementClass:
            indexed_preds = [(i, el) for i, el in enumerate(pred_map.elements)
                             if el.element_class == cls]
            gt_lines = [el.line for el in gt_map.elements if el.element_class == cls]
            if not indexed_preds and not gt_lines:
                continue
            assignment = assign_instances([el.line for _, el in indexed_preds], gt_lines,
                                          element_class=cls)
            for pred_i, gt_i in assignment.pairs:
                orig_index, el = indexed_preds[pred_i]
                raw_probs = frame_probs[orig_index] if orig_index < len(frame_probs) else None
                probs = [0.5] * len(el.line) if raw_probs is None else [float(p) for p in raw_probs]
                # Polygons are cut open for sequence losses; probabilities and
                # gradients then refer to the rotated point order.
                pred_line, gt_line, rotation = open_for_matching(
                    transform(el.line), transform(gt_lines[gt_i]))
                if rotation:
                    probs = probs[rotation:] + probs[:rotation]
                report = dvs_total(pred_line, probs, gt_line, cfg.dvs_weights)
                record = {
                    "frame_id": fid,
                    "class": cls.value,
                    "pred_index": pred_i,
                    "gt_index": gt_i,
                    "l_pp": report.l_pp,
                    "l_cp": report.l_cp,
                    "l_cls": report.l_cls,
                    "total": report.total,
                    "combination": list(report.match.combination.indices),
                    "grad": [[gx, gy] for gx, gy in report.grad.tolist()],
                    "cls_grad": report.cls_grad.tolist(),
                }
                if rotation:
                    record["rotation"] = rotation
                out.write(_dumps(record))
    out.flush()
    return 0


def _rle_encode(mask: np.ndarray) -> list[int]:
    """Row-major run lengths, alternating zero/one runs, starting with zeros."""
    flat = mask.reshape(-1).astype(int)
    runs = []
    current, count = 0, 0
    for v in flat:
        if v == current:
            count += 1
        else:
            runs.append(count)
            current, count = v, 1
    runs.append(count)
    return runs


def _cmd_rasterize(args) -> int:
    cfg = load_config(args.config)
    shape = _parse_shape(args.shape) if args.shape else cfg.grid_shape
    thickness = args.thickness if args.thickness is not None else cfg.thickness
    maps = _load_maps(args.infile)
    if args.format == "pgm":
        if not args.out_dir:
            raise ValidationError("--format pgm requires --out-dir")
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for local_map in maps:
            mask = union_mask([el.line for el in local_map.elements],
                              local_map.bev_range, shape, thickness)
            _write_pgm(out_dir / f"{local_map.frame_id}.pgm", mask)
        return 0
    out = _Output(args.out)
    for local_map in maps:
        for i, el in enumerate(local_map.elements):
            mask = rasterize(el.line, local_map.bev_range, shape, thickness)
            out.write(_dumps({
                "frame_id": local_map.frame_id,
                "index": i,
                "class": el.element_class.value,
                "shape": list(mask.shape),
                "rle": _rle_encode(mask),
            }))
    out.flush()
    return 0


def _write_pgm(path: Path, mask: np.ndarray) -> None:
    rows = ["P2", f"{mask.shape[1]} {mask.shape[0]}", "255"]
    for row in mask:
        rows.append(" ".join("255" if v > 0 else "0" for v in row))
    path.write_text("".join(f"{r}\n" for r in rows), encoding="ascii")


def _parse_shape(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError as e:
        raise ValidationError(f"grid shape must look like 64x32, got {text!r}") from e


def _cmd_eval(args) -> int:
    cfg = load_config(args.config)
    thresholds = (tuple(float(t) for t in args.thresholds.split(","))
                  if args.thresholds else cfg.thresholds)
    step = args.sample_step if args.sample_step is not None else cfg.sample_step
    eval_cfg = EvalConfig(thresholds=thresholds, sample_step=step)
    preds = _load_maps(args.preds)
    gts = _load_maps(args.gts)
    if args.clip:
        preds = [clip_to_range(m) for m in preds]
        gts = [clip_to_range(m) for m in gts]
    result = evaluate(preds, gts, eval_cfg, jobs=args.jobs)
    out = _Output(args.out)
    out.write(_dumps(result.to_json_dict()))
    out.flush()
    if args.csv:
        _write_eval_csv(Path(args.csv), result, eval_cfg.thresholds)
    return 0


def _write_eval_csv(path: Path, result, thresholds: Sequence[float]) -> None:
    def fmt(v):
        return "" if v is None else repr(v)

    lines = ["threshold,AP_divider,AP_ped,AP_boundary,mAP"]
    for thr in thresholds:
        row = [result.ap[cls][thr] for cls in ElementClass]
        defined = [v for v in row if v is not None]
        row_map = sum(defined) / len(defined) if defined else None
        lines.append(",".join([repr(thr)] + [fmt(v) for v in row] + [fmt(row_map)]))
    means = [result.class_mean[cls] for cls in ElementClass]
    lines.append(",".join(["mean"] + [fmt(v) for v in means] + [fmt(result.mean_ap)]))
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")


def _cmd_synth(args) -> int:
    kinds = ([ShapeKind(k) for k in args.kinds.split(",")]
             if args.kinds else list(ShapeKind))
    rng = BevRange()
    out = _Output(args.out)
    for i in range(args.count):
        kind = kinds[i % len(kinds)]
        element = gen_element(kind, args.seed + i, rng)
        out.write(serialize_local_map(LocalMap(f"synth-{i:06d}", rng, (element,))))
    out.flush()
    return 0


def _compare_one(task):
    element, k, step = task
    return compactness_experiment([element], k, step).entries[0]


def _cmd_compare(args) -> int:
    cfg = load_config(args.config)
    step = args.sample_step if args.sample_step is not None else cfg.sample_step
    elements = [el for m in _load_maps(args.infile) for el in m.elements]
    if not elements:
        raise ValidationError("compare needs at least one element")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(_compare_one, [(el, args.k, step) for el in elements]))
        from .synth import CompactnessReport

        report = CompactnessReport(k=args.k)
        for i, entry in enumerate(entries):
            entry.index = i
            report.entries.append(entry)
    else:
        report = compactness_experiment(elements, args.k, step)
    out = _Output(args.out)
    out.write(_dumps(report.to_json_dict()))
    out.flush()
    if args.svg_dir:
        svg_dir = Path(args.svg_dir)
        svg_dir.mkdir(parents=True, exist_ok=True)
        for i, el in enumerate(elements):
            if len(el.line) < args.k:
                continue
            overlay = [
                (el.line, "#888888", 0.06),
                (even_resample(el.line, args.k), "#d62728", 0.1),
                (vw_reduce(el.line, args.k), "#2ca02c", 0.1),
            ]
            (svg_dir / f"element-{i:04d}.svg").write_text(_svg(overlay), encoding="utf-8")
    return 0


def _cmd_fit(args) -> int:
    cfg = load_config(args.config)
    maps = _load_maps(args.gt)
    if not maps or not maps[0].elements:
        raise ValidationError("fit needs a ground-truth file with at least one element")
    gt_line = maps[0].elements[0].line
    fit_cfg = FitConfig(steps=args.steps, learning_rate=args.lr, prob_lr=args.prob_lr,
                        seed=args.seed, weights=cfg.dvs_weights,
                        log_interval=args.log_interval)
    trace = fit_points(gt_line, args.n, fit_cfg)
    out = _Output(args.out)
    for entry in trace.entries:
        out.write(_dumps({
            "step": entry.step,
            "l_pp": entry.l_pp,
            "l_cp": entry.l_cp,
            "l_cls": entry.l_cls,
            "total": entry.total,
        }))
    out.write(_dumps({
        "final": {
            "points": [[p.x, p.y] for p in trace.final_line.points],
            "probs": trace.final_probs.tolist(),
            "combination": list(trace.final_match.combination.indices),
        }
    }))
    out.flush()
    if args.svg:
        overlay = [
            (trace.init_line, "#bbbbbb", 0.04),
            (trace.final_line, "#1f77b4", 0.06),
            (gt_line, "#2ca02c", 0.1),
        ]
        Path(args.svg).write_text(_svg(overlay), encoding="utf-8")
    return 0


def _cmd_chamfer(args) -> int:
    out = _Output(args.out)
    for i, line in enumerate(_read_lines(args.infile), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed JSON: {e.msg}", line=i) from e
        a = _polyline_from_json(raw.get("a"), "a")
        b = _polyline_from_json(raw.get("b"), "b")
        record = {"chamfer": chamfer_distance(a, b, args.step)}
        if "id" in raw:
            record = {"id": raw["id"], **record}
        out.write(_dumps(record))
    out.flush()
    return 0


def _cmd_targets(args) -> int:
    out = _Output(args.out)
    for i, line in enumerate(_read_lines(args.infile), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed JSON: {e.msg}", line=i) from e
        pivots = _polyline_from_json({"points": raw.get("pivots")}, "pivots")
        gaps = [int(g) for g in raw.get("gaps", [])]
        groups = collinear_targets(pivots, gaps)
        out.write(_dumps({
            "targets": [[[p.x, p.y] for p in group] for group in groups],
        }))
    out.flush()
    return 0


def _svg(layers: list[tuple[Polyline, str, float]]) -> str:
    xs = [p.x for line, _, _ in layers for p in line.points]
    ys = [p.y for line, _, _ in layers for p in line.points]
    pad = 1.0
    x0, y0 = min(xs) - pad, min(ys) - pad
    w, h = max(xs) + pad - x0, max(ys) + pad - y0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="400">',
        f'<g transform="translate({-x0},{y0 + h}) scale(1,-1)">',
    ]
    for line, color, width in layers:
        pts = " ".join(f"{p.x},{p.y}" for p in line.points)
        tag = "polygon" if line.closed else "polyline"
        parts.append(f'<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')
    parts.append("</g></svg>")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pivotmap",
        description="Pivot-based vectorized map toolkit: simplification, matching, losses, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, infile=True):
        if infile:
            p.add_argument("--in", dest="infile", default=None, help="input JSONL (default stdin)")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--config", default=None, help="JSON file overriding defaults")

    p = sub.add_parser("simplify", help="extract pivot sequences from dense map elements")
    add_common(p)
    p.add_argument("--area-threshold", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=_cmd_simplify)

    p = sub.add_parser("match", help="assign instances and match pivot sequences")
    p.add_argument("--preds", required=True)
    p.add_argument("--gts", required=True)
    add_common(p, infile=False)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("loss", help="sequence loss reports for matched instances")
    p.add_argument("--preds", required=True)
    p.add_argument("--gts", required=True)
    p.add_argument("--normalize", action="store_true",
                   help="compute losses in range-normalized [0,1] coordinates")
    add_common(p, infile=False)
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("rasterize", help="render elements onto the BEV grid")
    add_common(p)
    p.add_argument("--format", choices=("rle", "pgm"), default="rle")
    p.add_argument("--shape", default=None, help="grid shape as ROWSxCOLS, e.g. 64x32")
    p.add_argument("--thickness", type=float, default=None)
    p.add_argument("--out-dir", default=None, help="output directory for --format pgm")
    p.set_defaults(func=_cmd_rasterize)

    p = sub.add_parser("eval", help="Chamfer-distance average precision")
    p.add_argument("--preds", required=True)
    p.add_argument("--gts", required=True)
    p.add_argument("--thresholds", default=None, help="comma-separated meters, e.g. 0.2,0.5,1.0")
    p.add_argument("--sample-step", type=float, default=None)
    p.add_argument("--csv", default=None, help="also write a CSV table")
    p.add_argument("--clip", action="store_true", help="clip both files to their ranges first")
    p.add_argument("--jobs", type=int, default=1)
    add_common(p, infile=False)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic element corpus")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--kinds", default=None, help="comma-separated shape kinds")
    p.add_argument("--seed", type=int, default=0)
    add_common(p, infile=False)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("compare", help="evenly-spaced vs pivot representation experiment")
    add_common(p)
    p.add_argument("--k", type=int, required=True, help="point budget per representation")
    p.add_argument("--sample-step", type=float, default=None)
    p.add_argument("--svg-dir", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("fit", help="gradient-descend a point set onto a pivot sequence")
    p.add_argument("--gt", required=True, help="JSONL whose first element is the pivot GT")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--prob-lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-interval", type=int, default=50)
    p.add_argument("--svg", default=None)
    add_common(p, infile=False)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("chamfer", help="Chamfer distance between polyline pairs")
    add_common(p)
    p.add_argument("--step", type=float, default=0.1)
    p.set_defaults(func=_cmd_chamfer)

    p = sub.add_parser("targets", help="interpolated collinear target points")
    add_common(p)
    p.set_defaults(func=_cmd_targets)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def _emit_error(kind: str, detail: str) -> None:
    sys.stderr.write(json.dumps({"error": {"kind": kind, "detail": detail}}) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except PivotMapError as e:
        _emit_error(e.kind, str(e))
        return e.exit_code
    except OSError as e:
        _emit_error("io", str(e))
        return 4


if __name__ == "__main__":
    sys.exit(main())
