// Training loop: Adam on mean squared position error with standardized
// targets, early stop on validation mean distance error (best weights kept).
// Deterministic under a fixed seed: seeded init, seeded shuffles, single
// threaded arithmetic.

import { Dataset, Split, TargetScaler, distance } from "./data.js";
import { PositionErrorStats, positionErrorStats } from "./evaluate.js";
import { Adam, Sequential, mseLoss } from "./nn.js";
import { gaussian, mulberry32, shuffled } from "./rand.js";

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  lrSchedule: "cosine" | "constant"; // cosine decays to lr/20 over the run
  augmentNoise: number; // train-time additive input noise std (inputs are unit RMS)
  seed: number;
  patience: number; // early-stop patience in epochs, 0 disables
  outputDim: 2 | 3;
  verbose: boolean;
}

export const DEFAULT_TRAIN: TrainOptions = {
  epochs: 30,
  batchSize: 8,
  learningRate: 2e-3,
  lrSchedule: "cosine",
  augmentNoise: 0.06,
  seed: 0,
  patience: 8,
  outputDim: 3,
  verbose: false,
};

export interface TrainReport {
  epochsRun: number;
  bestEpoch: number;
  trainLoss: number[];
  valLoss: number[];
  valMeanErrorM: number[];
  paramCount: number;
  finalStats: PositionErrorStats;
}

export function trainModel(
  model: Sequential,
  data: Dataset,
  split: Split,
  opts: Partial<TrainOptions> = {},
): TrainReport {
  const o = { ...DEFAULT_TRAIN, ...opts };
  if (split.train.length === 0 || split.val.length === 0) {
    throw new Error("empty train or validation split");
  }
  const dims = o.outputDim;
  const scaler = new TargetScaler(data.positions, split.train, dims);
  const targets = data.positions.map((p) => scaler.encode(p));
  const blocks = model.params();
  const optimizer = new Adam(blocks, o.learningRate);
  const rng = mulberry32((o.seed ^ 0x5eed) >>> 0);
  const gradBuf = new Float64Array(model.outputDim);

  const trainLoss: number[] = [];
  const valLoss: number[] = [];
  const valMeanError: number[] = [];
  let best = Infinity;
  let bestEpoch = 0;
  let bestParams: Float64Array[] | null = null;
  let sinceBest = 0;

  for (let epoch = 0; epoch < o.epochs; epoch++) {
    const lr = o.lrSchedule === "cosine"
      ? o.learningRate * (0.05 + 0.95 * 0.5
        * (1 + Math.cos((Math.PI * epoch) / Math.max(1, o.epochs - 1))))
      : o.learningRate;
    const order = shuffled(split.train.length, rng);
    let lossAcc = 0.0;
    let noisy: Float64Array | null = null;
    for (let b0 = 0; b0 < order.length; b0 += o.batchSize) {
      const batch = Math.min(o.batchSize, order.length - b0);
      model.zeroGrads();
      for (let k = 0; k < batch; k++) {
        const i = split.train[order[b0 + k]];
        let x = data.inputs[i];
        if (o.augmentNoise > 0) {
          if (noisy === null || noisy.length !== x.length) {
            noisy = new Float64Array(x.length);
          }
          for (let j = 0; j < x.length; j++) {
            noisy[j] = x[j] + o.augmentNoise * gaussian(rng);
          }
          x = noisy;
        }
        const pred = model.forward(x);
        lossAcc += mseLoss(pred, targets[i], gradBuf);
        model.backward(gradBuf);
      }
      optimizer.step(1.0 / batch, lr);
    }
    trainLoss.push(lossAcc / order.length);

    let vLoss = 0.0;
    let vErr = 0.0;
    for (const i of split.val) {
      const pred = model.forward(data.inputs[i]);
      vLoss += mseLoss(pred, targets[i], gradBuf);
      vErr += distance(scaler.decode(pred), data.positions[i].subarray(0, dims));
    }
    vLoss /= split.val.length;
    vErr /= split.val.length;
    valLoss.push(vLoss);
    valMeanError.push(vErr);
    if (o.verbose) {
      console.log(`epoch ${epoch + 1}/${o.epochs}: train ${trainLoss.at(-1)!.toFixed(5)} `
        + `val ${vLoss.toFixed(5)} valErr ${vErr.toFixed(3)} m`);
    }
    if (vErr < best - 1e-12) {
      best = vErr;
      bestEpoch = epoch;
      bestParams = blocks.map((b) => Float64Array.from(b.values));
      sinceBest = 0;
    } else {
      sinceBest += 1;
      if (o.patience > 0 && sinceBest >= o.patience) break;
    }
  }
  if (bestParams) {
    blocks.forEach((b, i) => b.values.set(bestParams![i]));
  }

  const truth = split.val.map((i) => data.positions[i].subarray(0, dims) as Float64Array);
  const preds = split.val.map((i) => scaler.decode(model.forward(data.inputs[i])));
  return {
    epochsRun: trainLoss.length,
    bestEpoch,
    trainLoss,
    valLoss,
    valMeanErrorM: valMeanError,
    paramCount: model.paramCount(),
    finalStats: positionErrorStats(truth, preds),
  };
}

export function predictPositions(
  model: Sequential,
  data: Dataset,
  indices: number[],
  scaler: TargetScaler,
): Float64Array[] {
  return indices.map((i) => scaler.decode(model.forward(data.inputs[i])));
}
