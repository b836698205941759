/**
 * pivotmap-bindings: typed access to the pivot-map core over its CLI.
 *
 * Exposes the sequence matcher, simplifier, collinear targets, sequence
 * loss, Chamfer distance, and the AP evaluator on Float64Array views.
 * Outputs are parsed from the core's full-precision JSON, so values are
 * bit-identical to what the CLI itself reports. The core is pure and every
 * call is a fresh process; concurrent calls are safe.
 */

import { CoreError, parseJsonLines, runCli, runCliWithFiles } from "./runner.js";
import { PointsView, ProbsView, ViewError, pointCount, pointsJson, probsJson } from "./views.js";

export { CoreError } from "./runner.js";
export { ViewError } from "./views.js";
export type { PointsView, ProbsView } from "./views.js";

const MIN_POINTS_MSG = "A line should contain two points at least";
const DEFAULT_RANGE = { x_min: -1e9, x_max: 1e9, y_min: -1e9, y_max: 1e9 };

export interface PdmResult {
  cost: number;
  combination: number[];
}

export interface DvsLossReport {
  l_pp: number;
  l_cp: number;
  l_cls: number;
  total: number;
  combination: number[];
  grad: number[][];
  cls_grad: number[];
}

export interface DvsWeights {
  alpha1: number;
  alpha2: number;
  alpha3: number;
}

export interface MapElementJson {
  class: "divider" | "ped_crossing" | "boundary";
  closed: boolean;
  score: number | null;
  points: number[][];
  probs?: number[];
}

export interface LocalMapJson {
  frame_id: string;
  range: { x_min: number; x_max: number; y_min: number; y_max: number };
  elements: MapElementJson[];
}

export interface EvalResultJson {
  ap: Record<string, Record<string, number | null>>;
  class_mean: Record<string, number | null>;
  mAP: number | null;
}

function frameFor(id: string, elements: MapElementJson[]): LocalMapJson {
  return { frame_id: id, range: DEFAULT_RANGE, elements };
}

function elementFor(points: number[][], score: number | null = null): MapElementJson {
  return { class: "divider", closed: false, score, points };
}

function requireLine(view: PointsView, what: string): number[][] {
  if (pointCount(view, what) < 2) {
    throw new CoreError("invalid_input", MIN_POINTS_MSG, 2);
  }
  return pointsJson(view, what);
}

/**
 * Match a predicted point sequence to a ground-truth pivot sequence.
 * Returns the minimum sequence-matching cost and the optimal combination
 * (strictly increasing prediction indices).
 */
export function pdmMatch(pred: PointsView, gt: PointsView): PdmResult {
  return pdmMatchBatch([[pred, gt]])[0];
}

/** Batched matching: one core invocation for a whole list of instance pairs. */
export function pdmMatchBatch(pairs: Array<[PointsView, PointsView]>): PdmResult[] {
  const predLines: string[] = [];
  const gtLines: string[] = [];
  pairs.forEach(([pred, gt], i) => {
    predLines.push(JSON.stringify(frameFor(`i${i}`, [elementFor(requireLine(pred, `pred[${i}]`))])));
    gtLines.push(JSON.stringify(frameFor(`i${i}`, [elementFor(requireLine(gt, `gt[${i}]`))])));
  });
  const stdout = runCliWithFiles(["match"], {
    "--preds": predLines.join("\n") + "\n",
    "--gts": gtLines.join("\n") + "\n",
  });
  const byFrame = new Map<string, PdmResult>();
  for (const record of parseJsonLines(stdout)) {
    byFrame.set(record.frame_id, { cost: record.cost, combination: record.combination });
  }
  return pairs.map((_, i) => {
    const result = byFrame.get(`i${i}`);
    if (!result) {
      throw new CoreError("error", `core returned no match for pair ${i}`, -1);
    }
    return result;
  });
}

export interface SimplifyOptions {
  closed?: boolean;
  areaThreshold?: number;
}

/** Pivot extraction: vertices surviving smallest-triangle-area removal. */
export function simplify(line: PointsView, options: SimplifyOptions = {}): number[][] {
  const element: MapElementJson = {
    ...elementFor(requireLine(line, "line")),
    closed: options.closed ?? false,
  };
  const args = ["simplify"];
  if (options.areaThreshold !== undefined) {
    args.push("--area-threshold", String(options.areaThreshold));
  }
  const stdout = runCli(args, JSON.stringify(frameFor("s", [element])) + "\n");
  return parseJsonLines(stdout)[0].elements[0].points;
}

/**
 * Interpolated collinear target points per pivot gap: the r-th of R targets
 * sits at fraction r/(R+1) between adjacent pivots.
 */
export function collinearTargets(pivots: PointsView, gaps: readonly number[]): number[][][] {
  const record = { pivots: requireLine(pivots, "pivots"), gaps: Array.from(gaps) };
  const stdout = runCli(["targets"], JSON.stringify(record) + "\n");
  return parseJsonLines(stdout)[0].targets;
}

/**
 * Full sequence loss (pivotal + collinear + classification) with per-point
 * gradients, matched internally by the dynamic program.
 */
export function dvsLoss(
  pred: PointsView,
  probs: ProbsView,
  gt: PointsView,
  weights?: DvsWeights,
): DvsLossReport {
  const predElement: MapElementJson = {
    ...elementFor(requireLine(pred, "pred")),
    probs: probsJson(probs, "probs"),
  };
  const files: Record<string, string> = {
    "--preds": JSON.stringify(frameFor("l", [predElement])) + "\n",
    "--gts": JSON.stringify(frameFor("l", [elementFor(requireLine(gt, "gt"))])) + "\n",
  };
  if (weights) {
    files["--config"] = JSON.stringify({ dvs_weights: weights });
  }
  const record = parseJsonLines(runCliWithFiles(["loss"], files))[0];
  return {
    l_pp: record.l_pp,
    l_cp: record.l_cp,
    l_cls: record.l_cls,
    total: record.total,
    combination: record.combination,
    grad: record.grad,
    cls_grad: record.cls_grad,
  };
}

export interface ChamferOptions {
  step?: number;
  closedA?: boolean;
  closedB?: boolean;
}

/** Symmetric mean nearest-sample distance between two polylines. */
export function chamfer(a: PointsView, b: PointsView, options: ChamferOptions = {}): number {
  const record = {
    a: { points: requireLine(a, "a"), closed: options.closedA ?? false },
    b: { points: requireLine(b, "b"), closed: options.closedB ?? false },
  };
  const args = ["chamfer"];
  if (options.step !== undefined) {
    args.push("--step", String(options.step));
  }
  return parseJsonLines(runCli(args, JSON.stringify(record) + "\n"))[0].chamfer;
}

export interface EvaluateOptions {
  thresholds?: readonly number[];
  sampleStep?: number;
}

/** Chamfer-distance AP over classes and thresholds; frames pair by id. */
export function evaluate(
  preds: readonly LocalMapJson[],
  gts: readonly LocalMapJson[],
  options: EvaluateOptions = {},
): EvalResultJson {
  const args = ["eval"];
  if (options.thresholds) {
    args.push("--thresholds", options.thresholds.join(","));
  }
  if (options.sampleStep !== undefined) {
    args.push("--sample-step", String(options.sampleStep));
  }
  const stdout = runCliWithFiles(args, {
    "--preds": preds.map((m) => JSON.stringify(m)).join("\n") + "\n",
    "--gts": gts.map((m) => JSON.stringify(m)).join("\n") + "\n",
  });
  return JSON.parse(stdout);
}
