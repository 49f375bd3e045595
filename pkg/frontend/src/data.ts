// Dataset plumbing: CSID records to network tensors, seeded train/val
// splitting (90/10 by default, matching the sounder's convention), input
// normalization, and the two baselines the sanity criteria compare against
// (mean inter-sample spacing, naive mean-position predictor).

import { CsidRecord } from "./csid.js";
import { mulberry32, shuffled } from "./rand.js";

export type Normalization = "global" | "raw";

export interface Dataset {
  nAnt: number;
  nSub: number;
  inputs: Float64Array[]; // [nAnt * nSub * 2] each, channels = (re, im)
  positions: Float64Array[]; // [3] metres
  inputScale: number;
}

export function toDataset(records: CsidRecord[], nAnt: number, nSub: number,
                          normalization: Normalization = "global"): Dataset {
  if (records.length === 0) throw new Error("empty record list");
  let scale = 1.0;
  if (normalization === "global") {
    let acc = 0.0;
    let n = 0;
    for (const rec of records) {
      for (let k = 0; k < rec.csiRe.length; k++) {
        acc += rec.csiRe[k] * rec.csiRe[k] + rec.csiIm[k] * rec.csiIm[k];
      }
      n += rec.csiRe.length;
    }
    const rms = Math.sqrt(acc / Math.max(1, 2 * n));
    if (rms > 0) scale = 1.0 / rms;
  }
  const inputs: Float64Array[] = [];
  const positions: Float64Array[] = [];
  for (const rec of records) {
    const x = new Float64Array(nAnt * nSub * 2);
    for (let k = 0; k < nAnt * nSub; k++) {
      x[2 * k] = rec.csiRe[k] * scale;
      x[2 * k + 1] = rec.csiIm[k] * scale;
    }
    inputs.push(x);
    positions.push(Float64Array.from(rec.positionM));
  }
  return { nAnt, nSub, inputs, positions, inputScale: scale };
}

export interface Split {
  train: number[];
  val: number[];
}

export function splitTrainVal(n: number, trainFraction = 0.9, seed = 0): Split {
  if (!(trainFraction > 0 && trainFraction < 1)) throw new Error("train fraction must be in (0, 1)");
  if (n < 2) throw new Error("need at least two records to split");
  const nVal = Math.max(1, Math.floor(n * (1 - trainFraction) + 0.5));
  const order = shuffled(n, mulberry32(seed >>> 0));
  return {
    train: Array.from(order.subarray(0, n - nVal)),
    val: Array.from(order.subarray(n - nVal)),
  };
}

// Centres regression targets per axis and scales all axes by one common
// factor, so the training loss stays proportional to squared metric distance
// (per-axis scaling would blow up low-variance axes, e.g. a nearly constant
// height, and let their noise dominate the gradients).
export class TargetScaler {
  readonly mean: Float64Array;
  readonly std: Float64Array;

  constructor(positions: Float64Array[], indices: number[], readonly dims: number) {
    this.mean = new Float64Array(dims);
    this.std = new Float64Array(dims);
    for (const i of indices) for (let d = 0; d < dims; d++) this.mean[d] += positions[i][d];
    for (let d = 0; d < dims; d++) this.mean[d] /= indices.length;
    let common = 0.0;
    for (const i of indices) {
      for (let d = 0; d < dims; d++) {
        const dd = positions[i][d] - this.mean[d];
        common += dd * dd;
      }
    }
    common = Math.sqrt(common / (indices.length * dims));
    if (common < 1e-9) common = 1.0;
    this.std.fill(common);
  }

  encode(p: Float64Array): Float64Array {
    const out = new Float64Array(this.dims);
    for (let d = 0; d < this.dims; d++) out[d] = (p[d] - this.mean[d]) / this.std[d];
    return out;
  }

  decode(y: Float64Array): Float64Array {
    const out = new Float64Array(this.dims);
    for (let d = 0; d < this.dims; d++) out[d] = y[d] * this.std[d] + this.mean[d];
    return out;
  }
}

export function meanInterSampleSpacing(positions: Float64Array[]): number {
  let acc = 0.0;
  for (let i = 1; i < positions.length; i++) {
    acc += distance(positions[i], positions[i - 1]);
  }
  return acc / Math.max(1, positions.length - 1);
}

export function naiveMeanPredictorError(positions: Float64Array[], trainIdx: number[],
                                        valIdx: number[], dims = 3): number {
  const centroid = new Float64Array(dims);
  for (const i of trainIdx) for (let d = 0; d < dims; d++) centroid[d] += positions[i][d];
  for (let d = 0; d < dims; d++) centroid[d] /= trainIdx.length;
  let acc = 0.0;
  for (const i of valIdx) acc += distance(positions[i].subarray(0, dims), centroid);
  return acc / valIdx.length;
}

export function distance(a: ArrayLike<number>, b: ArrayLike<number>): number {
  let acc = 0.0;
  for (let d = 0; d < Math.min(a.length, b.length); d++) {
    const dd = a[d] - b[d];
    acc += dd * dd;
  }
  return Math.sqrt(acc);
}
