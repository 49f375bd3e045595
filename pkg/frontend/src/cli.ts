// Train/evaluate CLI.
//
//   node dist/src/cli.js --data <file.csid> [--val-fraction 0.1] [--seed 0]
//        [--epochs 30] [--scale desk|paper] [--normalize global|raw]
//        [--output-dim 3] [--out dir] [--verbose]
//
// Prints the TrainReport as JSON and writes per-record error and histogram
// CSV tables next to --out.

import * as fs from "node:fs";
import * as path from "node:path";

import { readCsid } from "./csid.js";
import { meanInterSampleSpacing, naiveMeanPredictorError, splitTrainVal, toDataset } from "./data.js";
import { buildModel, defaultNetConfig } from "./model.js";
import { trainModel } from "./train.js";

interface Args {
  data: string;
  valFraction: number;
  seed: number;
  epochs: number;
  scale: "desk" | "paper";
  normalize: "global" | "raw";
  outputDim: 2 | 3;
  out: string;
  verbose: boolean;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {
    data: "",
    valFraction: 0.1,
    seed: 0,
    epochs: 30,
    scale: "desk",
    normalize: "global",
    outputDim: 3,
    out: ".",
    verbose: false,
  };
  for (let i = 0; i < argv.length; i++) {
    const key = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`missing value for ${key}`);
      return argv[i];
    };
    switch (key) {
      case "--data": args.data = next(); break;
      case "--val-fraction": args.valFraction = Number(next()); break;
      case "--seed": args.seed = Number(next()); break;
      case "--epochs": args.epochs = Number(next()); break;
      case "--scale": args.scale = next() as Args["scale"]; break;
      case "--normalize": args.normalize = next() as Args["normalize"]; break;
      case "--output-dim": args.outputDim = Number(next()) as 2 | 3; break;
      case "--out": args.out = next(); break;
      case "--verbose": args.verbose = true; break;
      default: throw new Error(`unknown flag ${key}`);
    }
  }
  if (!args.data) throw new Error("--data is required");
  return args;
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  const { header, records } = readCsid(args.data);
  const expected = args.scale === "paper" ? [64, 922] : [8, 64];
  if (header.nAnt !== expected[0] || header.nSub !== expected[1]) {
    console.warn(
      `note: --scale ${args.scale} expects ${expected[0]} x ${expected[1]}, `
      + `dataset is ${header.nAnt} x ${header.nSub}; using dataset dimensions`);
  }
  const data = toDataset(records, header.nAnt, header.nSub, args.normalize);
  const split = splitTrainVal(records.length, 1 - args.valFraction, args.seed);
  const { model, report } = buildModel(
    defaultNetConfig(header.nAnt, header.nSub, args.outputDim), args.seed);
  const trained = trainModel(model, data, split, {
    epochs: args.epochs,
    seed: args.seed,
    outputDim: args.outputDim,
    verbose: args.verbose,
  });

  fs.mkdirSync(args.out, { recursive: true });
  const stats = trained.finalStats;
  const errCsv = ["record_index,error_m"];
  split.val.forEach((idx, k) => errCsv.push(`${idx},${stats.errorsM[k]}`));
  fs.writeFileSync(path.join(args.out, "val_errors.csv"), errCsv.join("\n") + "\n");
  const histCsv = ["bin_lo_m,bin_hi_m,count"];
  stats.histogramCounts.forEach((c, k) =>
    histCsv.push(`${stats.histogramEdgesM[k]},${stats.histogramEdgesM[k + 1]},${c}`));
  fs.writeFileSync(path.join(args.out, "error_histogram.csv"), histCsv.join("\n") + "\n");

  const summary = {
    dataset: {
      file: args.data,
      tag: header.scenarioTag,
      nAnt: header.nAnt,
      nSub: header.nSub,
      records: records.length,
      meanSpacingM: meanInterSampleSpacing(data.positions),
      naiveMeanErrorM: naiveMeanPredictorError(
        data.positions, split.train, split.val, args.outputDim),
    },
    network: {
      outputDims: report.outputDims,
      paramCount: report.paramCount,
    },
    training: {
      epochsRun: trained.epochsRun,
      bestEpoch: trained.bestEpoch,
      trainLoss: trained.trainLoss,
      valMeanErrorM: trained.valMeanErrorM,
    },
    validation: {
      meanDistanceErrorM: stats.meanDistanceErrorM,
    },
  };
  console.log(JSON.stringify(summary, null, 2));
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    process.exit(2);
  }
}
