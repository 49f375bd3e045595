// Positioning network: two conv blocks that pool only the subcarrier axis
// (4 subcarriers per window, the decorrelation width), then a dense stack.
// For a (64, 922, 2) CSI tensor the reported output dimensions are
// 64x922x32 -> 64x231x32 -> 64x231x32 -> 64x58x32 -> 256 -> 256 -> 256 -> 3.

import { AvgPoolW, Conv2D, Dense, Flatten, Layer, ReLU, Sequential, Shape3 } from "./nn.js";
import { mulberry32 } from "./rand.js";

export interface NetConfig {
  nAnt: number;
  nSub: number;
  convChannels: number; // default 32
  poolWidths: [number, number]; // along the subcarrier axis
  denseWidths: number[]; // default [256, 256, 256]
  outputDim: 2 | 3;
}

export function defaultNetConfig(nAnt: number, nSub: number, outputDim: 2 | 3 = 3): NetConfig {
  return {
    nAnt,
    nSub,
    convChannels: 32,
    poolWidths: [4, 4],
    denseWidths: [256, 256, 256],
    outputDim,
  };
}

export interface ModelReport {
  layerNames: string[];
  outputDims: string[]; // human-readable per-layer output dimensions
  paramCount: number;
  paramCountPerLayer: { name: string; count: number }[];
}

export function buildModel(cfg: NetConfig, seed = 0): { model: Sequential; report: ModelReport } {
  if (cfg.nAnt < 1 || cfg.nSub < cfg.poolWidths[0] * cfg.poolWidths[1]) {
    throw new Error(
      `input ${cfg.nAnt} x ${cfg.nSub} cannot support two width-` +
      `${cfg.poolWidths[0]}/${cfg.poolWidths[1]} pooling stages`);
  }
  const rng = mulberry32(seed >>> 0);
  const input: Shape3 = { h: cfg.nAnt, w: cfg.nSub, c: 2 };
  const w1 = Math.ceil(cfg.nSub / cfg.poolWidths[0]);
  const w2 = Math.ceil(w1 / cfg.poolWidths[1]);
  const flat = cfg.nAnt * w2 * cfg.convChannels;

  const layers: Layer[] = [
    new Conv2D(2, cfg.convChannels, rng),
    new ReLU(),
    new AvgPoolW(cfg.poolWidths[0]),
    new Conv2D(cfg.convChannels, cfg.convChannels, rng),
    new ReLU(),
    new AvgPoolW(cfg.poolWidths[1]),
    new Flatten(),
  ];
  let nIn = flat;
  for (const width of cfg.denseWidths) {
    layers.push(new Dense(nIn, width, rng));
    layers.push(new ReLU());
    nIn = width;
  }
  layers.push(new Dense(nIn, cfg.outputDim, rng)); // linear head
  const model = new Sequential(input, layers);

  const names: string[] = ["Input"];
  const dims: string[] = [fmt(input)];
  let shape = input;
  for (const layer of model.layers) {
    shape = nextShape(shape, layer);
    if (layer.kind === "ReLU" || layer.kind === "Flatten") continue; // activation/bookkeeping
    names.push(layer.kind);
    dims.push(fmt(shape));
  }
  const perLayer = model.layers
    .filter((l) => l.params().length > 0)
    .map((l) => ({
      name: l.kind,
      count: l.params().reduce((n, p) => n + p.values.length, 0),
    }));
  return {
    model,
    report: {
      layerNames: names,
      outputDims: dims,
      paramCount: model.paramCount(),
      paramCountPerLayer: perLayer,
    },
  };
}

function nextShape(shape: Shape3, layer: Layer): Shape3 {
  switch (layer.kind) {
    case "Conv2D":
      return { h: shape.h, w: shape.w, c: (layer as Conv2D).cout };
    case "AveragePooling":
      return { h: shape.h, w: Math.ceil(shape.w / (layer as AvgPoolW).width), c: shape.c };
    case "Flatten":
      return { h: 1, w: 1, c: shape.h * shape.w * shape.c };
    case "Dense":
      return { h: 1, w: 1, c: (layer as Dense).nOut };
    default:
      return shape;
  }
}

function fmt(s: Shape3): string {
  return s.h === 1 && s.w === 1 ? `${s.c}` : `${s.h} x ${s.w} x ${s.c}`;
}
