/**
 * views.ts: array-view handling for point sequences and probabilities.
 *
 * Point sequences travel as contiguous row-major float64 buffers of shape
 * (K, 2): [x0, y0, x1, y1, ...]. Plain number[][] input is accepted too.
 * Views are read in place (no intermediate copy) while being serialized for
 * the core process.
 */

export type PointsView = Float64Array | ReadonlyArray<readonly [number, number]> | number[][];
export type ProbsView = Float64Array | readonly number[];

export class ViewError extends Error {
  readonly kind = "invalid_view";
}

/** Number of points in a view, validating shape and finiteness. */
export function pointCount(view: PointsView, what: string): number {
  if (view instanceof Float64Array) {
    if (view.length % 2 !== 0) {
      throw new ViewError(`${what}: flat view length ${view.length} is not a multiple of 2`);
    }
    for (let i = 0; i < view.length; i++) {
      if (!Number.isFinite(view[i])) {
        throw new ViewError(`${what}: non-finite value at offset ${i}`);
      }
    }
    return view.length / 2;
  }
  for (let i = 0; i < view.length; i++) {
    const row = view[i];
    if (row.length !== 2 || !Number.isFinite(row[0]) || !Number.isFinite(row[1])) {
      throw new ViewError(`${what}: row ${i} is not a finite [x, y] pair`);
    }
  }
  return view.length;
}

/** Point i of a view as [x, y]. */
export function pointAt(view: PointsView, i: number): [number, number] {
  if (view instanceof Float64Array) {
    return [view[2 * i], view[2 * i + 1]];
  }
  const row = view[i];
  return [row[0], row[1]];
}

/** Serialize a view as a JSON array of [x, y] pairs. */
export function pointsJson(view: PointsView, what: string): number[][] {
  const k = pointCount(view, what);
  const out: number[][] = new Array(k);
  for (let i = 0; i < k; i++) {
    out[i] = pointAt(view, i) as number[];
  }
  return out;
}

export function probsJson(view: ProbsView, what: string): number[] {
  const out: number[] = new Array(view.length);
  for (let i = 0; i < view.length; i++) {
    const v = view[i];
    if (!Number.isFinite(v)) {
      throw new ViewError(`${what}: non-finite probability at index ${i}`);
    }
    out[i] = v;
  }
  return out;
}
