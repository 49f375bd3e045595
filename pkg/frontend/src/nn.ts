// Minimal float64 neural net: 2-D convolution, average pooling along the
// subcarrier axis, ReLU, dense layers, MSE loss, Adam. Float64 throughout so
// finite-difference gradient checks are meaningful; single threaded and
// fully deterministic under a seeded init.
//
// Tensors are flat Float64Arrays in [height(antennas), width(subcarriers),
// channels] row-major order.

import { Rng, gaussian } from "./rand.js";

export interface Shape3 {
  h: number;
  w: number;
  c: number;
}

export interface ParamBlock {
  name: string;
  values: Float64Array;
  grads: Float64Array;
}

export interface Layer {
  readonly kind: string;
  outShape(inShape: Shape3): Shape3;
  forward(x: Float64Array): Float64Array;
  backward(gradOut: Float64Array): Float64Array;
  params(): ParamBlock[];
}

function zeros(n: number): Float64Array {
  return new Float64Array(n);
}

export class Conv2D implements Layer {
  readonly kind = "Conv2D";
  readonly weights: Float64Array; // [kh, kw, cin, cout]
  readonly bias: Float64Array;
  readonly wGrad: Float64Array;
  readonly bGrad: Float64Array;
  private in!: Shape3;
  private out!: Shape3;
  private lastX!: Float64Array;

  constructor(
    readonly cin: number,
    readonly cout: number,
    rng: Rng,
    readonly kh = 3,
    readonly kw = 3,
  ) {
    const fanIn = kh * kw * cin;
    const std = Math.sqrt(2.0 / fanIn);
    this.weights = zeros(kh * kw * cin * cout);
    for (let i = 0; i < this.weights.length; i++) this.weights[i] = std * gaussian(rng);
    this.bias = zeros(cout);
    this.wGrad = zeros(this.weights.length);
    this.bGrad = zeros(cout);
  }

  outShape(inShape: Shape3): Shape3 {
    if (inShape.c !== this.cin) throw new Error(`Conv2D expects ${this.cin} channels, got ${inShape.c}`);
    this.in = inShape;
    this.out = { h: inShape.h, w: inShape.w, c: this.cout };
    return this.out;
  }

  forward(x: Float64Array): Float64Array {
    const { h: H, w: W, c: CI } = this.in;
    const CO = this.cout;
    const out = zeros(H * W * CO);
    this.lastX = x;
    const kh2 = (this.kh - 1) >> 1;
    const kw2 = (this.kw - 1) >> 1;
    const weights = this.weights;
    const bias = this.bias;
    for (let h = 0; h < H; h++) {
      const oRow = h * W * CO;
      for (let w = 0; w < W; w++) {
        const o = oRow + w * CO;
        for (let co = 0; co < CO; co++) out[o + co] = bias[co];
      }
    }
    // kernel-position-outer: no per-pixel bounds checks, contiguous streams
    for (let dh = 0; dh < this.kh; dh++) {
      const oh = dh - kh2;
      const h0 = Math.max(0, -oh);
      const h1 = Math.min(H, H - oh);
      for (let dw = 0; dw < this.kw; dw++) {
        const ow = dw - kw2;
        const w0 = Math.max(0, -ow);
        const w1 = Math.min(W, W - ow);
        const wBase = (dh * this.kw + dw) * CI * CO;
        for (let h = h0; h < h1; h++) {
          for (let w = w0; w < w1; w++) {
            const xBase = ((h + oh) * W + (w + ow)) * CI;
            const o = (h * W + w) * CO;
            let ci = 0;
            for (; ci + 1 < CI; ci += 2) {
              const xv0 = x[xBase + ci];
              const xv1 = x[xBase + ci + 1];
              if (xv0 === 0 && xv1 === 0) continue;
              const wb0 = wBase + ci * CO;
              const wb1 = wb0 + CO;
              for (let co = 0; co < CO; co++) {
                out[o + co] += xv0 * weights[wb0 + co] + xv1 * weights[wb1 + co];
              }
            }
            for (; ci < CI; ci++) {
              const xv = x[xBase + ci];
              if (xv === 0) continue;
              const wb = wBase + ci * CO;
              for (let co = 0; co < CO; co++) out[o + co] += xv * weights[wb + co];
            }
          }
        }
      }
    }
    return out;
  }

  backward(gradOut: Float64Array): Float64Array {
    const { h: H, w: W, c: CI } = this.in;
    const CO = this.cout;
    const gradIn = zeros(H * W * CI);
    const kh2 = (this.kh - 1) >> 1;
    const kw2 = (this.kw - 1) >> 1;
    const weights = this.weights;
    const wGrad = this.wGrad;
    const x = this.lastX;
    for (let i = 0; i < H * W; i++) {
      const o = i * CO;
      for (let co = 0; co < CO; co++) this.bGrad[co] += gradOut[o + co];
    }
    for (let dh = 0; dh < this.kh; dh++) {
      const oh = dh - kh2;
      const h0 = Math.max(0, -oh);
      const h1 = Math.min(H, H - oh);
      for (let dw = 0; dw < this.kw; dw++) {
        const ow = dw - kw2;
        const w0 = Math.max(0, -ow);
        const w1 = Math.min(W, W - ow);
        const wBase = (dh * this.kw + dw) * CI * CO;
        for (let h = h0; h < h1; h++) {
          for (let w = w0; w < w1; w++) {
            const xBase = ((h + oh) * W + (w + ow)) * CI;
            const o = (h * W + w) * CO;
            for (let ci = 0; ci < CI; ci++) {
              const xv = x[xBase + ci];
              const wb = wBase + ci * CO;
              let acc = 0.0;
              if (xv === 0) {
                for (let co = 0; co < CO; co++) acc += weights[wb + co] * gradOut[o + co];
              } else {
                for (let co = 0; co < CO; co++) {
                  const g = gradOut[o + co];
                  wGrad[wb + co] += xv * g;
                  acc += weights[wb + co] * g;
                }
              }
              gradIn[xBase + ci] += acc;
            }
          }
        }
      }
    }
    return gradIn;
  }

  params(): ParamBlock[] {
    return [
      { name: "conv.w", values: this.weights, grads: this.wGrad },
      { name: "conv.b", values: this.bias, grads: this.bGrad },
    ];
  }
}

// Average pooling with window `width` along the subcarrier axis, ceil-mode:
// a ragged final window averages over the elements that exist (matches the
// 922 -> 231 -> 58 reduction chain).
export class AvgPoolW implements Layer {
  readonly kind = "AveragePooling";
  private in!: Shape3;
  private out!: Shape3;

  constructor(readonly width = 4) {}

  outShape(inShape: Shape3): Shape3 {
    this.in = inShape;
    this.out = { h: inShape.h, w: Math.ceil(inShape.w / this.width), c: inShape.c };
    return this.out;
  }

  forward(x: Float64Array): Float64Array {
    const { h: H, w: W, c: C } = this.in;
    const WO = this.out.w;
    const out = zeros(H * WO * C);
    for (let h = 0; h < H; h++) {
      for (let wo = 0; wo < WO; wo++) {
        const w0 = wo * this.width;
        const count = Math.min(this.width, W - w0);
        const o = (h * WO + wo) * C;
        for (let dw = 0; dw < count; dw++) {
          const xBase = (h * W + w0 + dw) * C;
          for (let c = 0; c < C; c++) out[o + c] += x[xBase + c];
        }
        for (let c = 0; c < C; c++) out[o + c] /= count;
      }
    }
    return out;
  }

  backward(gradOut: Float64Array): Float64Array {
    const { h: H, w: W, c: C } = this.in;
    const WO = this.out.w;
    const gradIn = zeros(H * W * C);
    for (let h = 0; h < H; h++) {
      for (let wo = 0; wo < WO; wo++) {
        const w0 = wo * this.width;
        const count = Math.min(this.width, W - w0);
        const o = (h * WO + wo) * C;
        for (let dw = 0; dw < count; dw++) {
          const xBase = (h * W + w0 + dw) * C;
          for (let c = 0; c < C; c++) gradIn[xBase + c] += gradOut[o + c] / count;
        }
      }
    }
    return gradIn;
  }

  params(): ParamBlock[] {
    return [];
  }
}

export class ReLU implements Layer {
  readonly kind = "ReLU";
  private mask!: Uint8Array;
  private size = 0;

  outShape(inShape: Shape3): Shape3 {
    this.size = inShape.h * inShape.w * inShape.c;
    return inShape;
  }

  forward(x: Float64Array): Float64Array {
    const out = zeros(this.size);
    this.mask = new Uint8Array(this.size);
    for (let i = 0; i < this.size; i++) {
      if (x[i] > 0) {
        out[i] = x[i];
        this.mask[i] = 1;
      }
    }
    return out;
  }

  backward(gradOut: Float64Array): Float64Array {
    const gradIn = zeros(this.size);
    for (let i = 0; i < this.size; i++) if (this.mask[i]) gradIn[i] = gradOut[i];
    return gradIn;
  }

  params(): ParamBlock[] {
    return [];
  }
}

// Flatten is shape bookkeeping only; buffers pass through untouched.
export class Flatten implements Layer {
  readonly kind = "Flatten";

  outShape(inShape: Shape3): Shape3 {
    return { h: 1, w: 1, c: inShape.h * inShape.w * inShape.c };
  }

  forward(x: Float64Array): Float64Array {
    return x;
  }

  backward(gradOut: Float64Array): Float64Array {
    return gradOut;
  }

  params(): ParamBlock[] {
    return [];
  }
}

export class Dense implements Layer {
  readonly kind = "Dense";
  readonly weights: Float64Array; // [nIn, nOut]
  readonly bias: Float64Array;
  readonly wGrad: Float64Array;
  readonly bGrad: Float64Array;
  private lastX!: Float64Array;

  constructor(readonly nIn: number, readonly nOut: number, rng: Rng) {
    const std = Math.sqrt(2.0 / nIn);
    this.weights = zeros(nIn * nOut);
    for (let i = 0; i < this.weights.length; i++) this.weights[i] = std * gaussian(rng);
    this.bias = zeros(nOut);
    this.wGrad = zeros(this.weights.length);
    this.bGrad = zeros(nOut);
  }

  outShape(inShape: Shape3): Shape3 {
    const n = inShape.h * inShape.w * inShape.c;
    if (n !== this.nIn) throw new Error(`Dense expects ${this.nIn} inputs, got ${n}`);
    return { h: 1, w: 1, c: this.nOut };
  }

  forward(x: Float64Array): Float64Array {
    this.lastX = x;
    const out = zeros(this.nOut);
    out.set(this.bias);
    for (let i = 0; i < this.nIn; i++) {
      const xv = x[i];
      if (xv === 0) continue;
      const wb = i * this.nOut;
      for (let j = 0; j < this.nOut; j++) out[j] += xv * this.weights[wb + j];
    }
    return out;
  }

  backward(gradOut: Float64Array): Float64Array {
    const gradIn = zeros(this.nIn);
    for (let j = 0; j < this.nOut; j++) this.bGrad[j] += gradOut[j];
    for (let i = 0; i < this.nIn; i++) {
      const xv = this.lastX[i];
      const wb = i * this.nOut;
      let acc = 0.0;
      for (let j = 0; j < this.nOut; j++) {
        const g = gradOut[j];
        this.wGrad[wb + j] += xv * g;
        acc += this.weights[wb + j] * g;
      }
      gradIn[i] = acc;
    }
    return gradIn;
  }

  params(): ParamBlock[] {
    return [
      { name: "dense.w", values: this.weights, grads: this.wGrad },
      { name: "dense.b", values: this.bias, grads: this.bGrad },
    ];
  }
}

export class Sequential {
  readonly shapes: Shape3[] = [];

  constructor(readonly inputShape: Shape3, readonly layers: Layer[]) {
    let shape = inputShape;
    this.shapes.push(shape);
    for (const layer of layers) {
      shape = layer.outShape(shape);
      this.shapes.push(shape);
    }
  }

  get outputDim(): number {
    const s = this.shapes[this.shapes.length - 1];
    return s.h * s.w * s.c;
  }

  forward(x: Float64Array): Float64Array {
    let y = x;
    for (const layer of this.layers) y = layer.forward(y);
    return y;
  }

  backward(gradOut: Float64Array): void {
    let g = gradOut;
    for (let i = this.layers.length - 1; i >= 0; i--) g = this.layers[i].backward(g);
  }

  params(): ParamBlock[] {
    return this.layers.flatMap((l) => l.params());
  }

  zeroGrads(): void {
    for (const p of this.params()) p.grads.fill(0);
  }

  paramCount(): number {
    return this.params().reduce((n, p) => n + p.values.length, 0);
  }
}

// Mean squared error over the output vector; returns the loss and writes
// dLoss/dPred into gradOut.
export function mseLoss(pred: Float64Array, target: Float64Array, gradOut: Float64Array): number {
  const n = pred.length;
  let loss = 0.0;
  for (let i = 0; i < n; i++) {
    const d = pred[i] - target[i];
    loss += d * d;
    gradOut[i] = (2.0 * d) / n;
  }
  return loss / n;
}

export class Adam {
  private readonly m: Float64Array[];
  private readonly v: Float64Array[];
  private t = 0;

  constructor(
    readonly blocks: ParamBlock[],
    readonly lr = 1e-3,
    readonly beta1 = 0.9,
    readonly beta2 = 0.999,
    readonly eps = 1e-8,
  ) {
    this.m = blocks.map((b) => zeros(b.values.length));
    this.v = blocks.map((b) => zeros(b.values.length));
  }

  step(scale = 1.0, lrOverride?: number): void {
    this.t += 1;
    const lr = lrOverride ?? this.lr;
    const c1 = 1.0 - Math.pow(this.beta1, this.t);
    const c2 = 1.0 - Math.pow(this.beta2, this.t);
    for (let bi = 0; bi < this.blocks.length; bi++) {
      const { values, grads } = this.blocks[bi];
      const m = this.m[bi];
      const v = this.v[bi];
      for (let i = 0; i < values.length; i++) {
        const g = grads[i] * scale;
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g;
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g * g;
        values[i] -= (lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.eps);
      }
    }
  }
}
