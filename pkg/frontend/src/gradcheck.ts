// Gradient verification: analytic backprop against central finite
// differences on a random subset of parameters. Float64 arithmetic makes
// deviations around 1e-8 attainable; anything above 1e-4 means a broken
// backward pass.

import { Sequential, mseLoss } from "./nn.js";
import { mulberry32 } from "./rand.js";

export interface GradCheckResult {
  maxRelativeDeviation: number;
  probes: number;
}

export function gradientCheck(
  model: Sequential,
  inputs: Float64Array[],
  targets: Float64Array[],
  probesPerBlock = 8,
  seed = 0,
  step = 1e-5,
): GradCheckResult {
  const blocks = model.params();
  const gradBuf = new Float64Array(model.outputDim);

  const batchLoss = (): number => {
    let acc = 0.0;
    for (let i = 0; i < inputs.length; i++) {
      acc += mseLoss(model.forward(inputs[i]), targets[i], gradBuf);
    }
    return acc / inputs.length;
  };

  model.zeroGrads();
  for (let i = 0; i < inputs.length; i++) {
    mseLoss(model.forward(inputs[i]), targets[i], gradBuf);
    model.backward(gradBuf);
  }
  const analytic = blocks.map((b) =>
    Float64Array.from(b.grads, (g) => g / inputs.length));

  const rng = mulberry32(seed >>> 0);
  let worst = 0.0;
  let probes = 0;
  for (let bi = 0; bi < blocks.length; bi++) {
    const values = blocks[bi].values;
    for (let p = 0; p < Math.min(probesPerBlock, values.length); p++) {
      const idx = Math.floor(rng() * values.length);
      const keep = values[idx];
      const h = step * Math.max(1.0, Math.abs(keep));
      values[idx] = keep + h;
      const up = batchLoss();
      values[idx] = keep - h;
      const down = batchLoss();
      values[idx] = keep;
      const numeric = (up - down) / (2.0 * h);
      const a = analytic[bi][idx];
      const dev = Math.abs(a - numeric) / Math.max(1e-10, Math.abs(a) + Math.abs(numeric));
      if (dev > worst) worst = dev;
      probes += 1;
    }
  }
  return { maxRelativeDeviation: worst, probes };
}
