import { describe, expect, it } from "vitest";

import { CsidRecord } from "../src/csid.js";
import { naiveMeanPredictorError, splitTrainVal, toDataset } from "../src/data.js";
import { buildModel, defaultNetConfig } from "../src/model.js";
import { mulberry32, shuffled } from "../src/rand.js";
import { trainModel } from "../src/train.js";

function syntheticRecords(n: number, nAnt: number, nSub: number, seed: number,
                          constantPosition = false): CsidRecord[] {
  // CSI is a smooth deterministic function of position so the mapping is
  // learnable; not a propagation model, just structure + mild noise.
  const rng = mulberry32(seed);
  const out: CsidRecord[] = [];
  for (let i = 0; i < n; i++) {
    const pos: [number, number, number] = constantPosition
      ? [1.0, 2.0, 0.5]
      : [3 * rng(), 2 * rng(), rng()];
    const re = new Float32Array(nAnt * nSub);
    const im = new Float32Array(nAnt * nSub);
    for (let a = 0; a < nAnt; a++) {
      for (let k = 0; k < nSub; k++) {
        const phase = 2 * Math.PI * (0.8 * pos[0] * (a + 1) + 0.6 * pos[1] * (k + 1) / nSub
          + 0.4 * pos[2]);
        re[a * nSub + k] = Math.cos(phase) + 0.02 * (rng() - 0.5);
        im[a * nSub + k] = Math.sin(phase) + 0.02 * (rng() - 0.5);
      }
    }
    out.push({
      timestampS: i, positionM: pos,
      snrDb: new Float32Array(nAnt).fill(25), csiRe: re, csiIm: im,
    });
  }
  return out;
}

describe("splitTrainVal", () => {
  it("is a deterministic 90/10 partition", () => {
    const a = splitTrainVal(6000, 0.9, 3);
    const b = splitTrainVal(6000, 0.9, 3);
    expect(a.train).toHaveLength(5400);
    expect(a.val).toHaveLength(600);
    expect(a).toEqual(b);
    const all = [...a.train, ...a.val].sort((x, y) => x - y);
    expect(all).toHaveLength(6000);
    expect(new Set(all).size).toBe(6000);
  });

  it("keeps at least one validation record", () => {
    const s = splitTrainVal(10, 0.95, 1);
    expect(s.val).toHaveLength(1);
  });
});

describe("training sanity", () => {
  it("memorizes a constant-position dataset", () => {
    const records = syntheticRecords(60, 2, 16, 1, true);
    const data = toDataset(records, 2, 16);
    const split = splitTrainVal(records.length, 0.9, 2);
    const { model } = buildModel(defaultNetConfig(2, 16), 3);
    const report = trainModel(model, data, split, { epochs: 12, seed: 4, patience: 0,
                                                    augmentNoise: 0 });
    expect(report.finalStats.meanDistanceErrorM).toBeLessThan(1e-3);
    // training loss is non-increasing on the degenerate task (tiny slack
    // for Adam's step-to-step wobble)
    for (let e = 1; e < report.trainLoss.length; e++) {
      expect(report.trainLoss[e]).toBeLessThan(report.trainLoss[e - 1] + 1e-6);
    }
  });

  it("label-shuffled data trains to the naive-mean baseline", () => {
    const records = syntheticRecords(150, 2, 16, 5);
    // destroy the input-position relation
    const perm = shuffled(records.length, mulberry32(6));
    const shuffledRecords = records.map((r, i) => ({
      ...r, positionM: records[perm[i]].positionM,
    }));
    const data = toDataset(shuffledRecords, 2, 16);
    const split = splitTrainVal(records.length, 0.8, 7);
    const { model } = buildModel(defaultNetConfig(2, 16), 8);
    const report = trainModel(model, data, split, { epochs: 10, seed: 9 });
    const naive = naiveMeanPredictorError(data.positions, split.train, split.val);
    // no signal: cannot beat the baseline by a meaningful margin
    expect(report.finalStats.meanDistanceErrorM).toBeGreaterThan(0.6 * naive);
  });

  it("prediction is deterministic for a fixed trained model", () => {
    const records = syntheticRecords(40, 2, 16, 10);
    const data = toDataset(records, 2, 16);
    const split = splitTrainVal(records.length, 0.9, 11);
    const { model } = buildModel(defaultNetConfig(2, 16), 12);
    trainModel(model, data, split, { epochs: 2, seed: 13 });
    const a = model.forward(data.inputs[0]);
    const b = model.forward(data.inputs[0]);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("learns position from structured CSI better than the baseline", () => {
    const records = syntheticRecords(200, 2, 16, 14);
    const data = toDataset(records, 2, 16);
    const split = splitTrainVal(records.length, 0.9, 15);
    const { model } = buildModel(defaultNetConfig(2, 16), 16);
    const report = trainModel(model, data, split, { epochs: 25, seed: 17 });
    const naive = naiveMeanPredictorError(data.positions, split.train, split.val);
    expect(report.finalStats.meanDistanceErrorM).toBeLessThan(0.5 * naive);
  });
});
