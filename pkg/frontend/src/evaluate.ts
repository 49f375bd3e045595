// Position error statistics: Euclidean errors, mean, 10 cm histogram,
// empirical CDF. Re-implemented here (definitions identical to the sounder's
// metrics module) so this component stays standalone.

export interface PositionErrorStats {
  errorsM: Float64Array;
  meanDistanceErrorM: number;
  histogramCounts: number[];
  histogramEdgesM: number[];
  cdfErrorsM: Float64Array;
  cdfFractions: Float64Array;
}

export function positionErrorStats(
  truth: Float64Array[],
  predicted: Float64Array[],
  binWidthM = 0.1,
): PositionErrorStats {
  if (truth.length !== predicted.length) {
    throw new Error(`count mismatch: ${truth.length} vs ${predicted.length}`);
  }
  const n = truth.length;
  const errors = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    let acc = 0.0;
    const dims = Math.min(truth[i].length, predicted[i].length);
    for (let d = 0; d < dims; d++) {
      const dd = truth[i][d] - predicted[i][d];
      acc += dd * dd;
    }
    errors[i] = Math.sqrt(acc);
  }
  let mean = 0.0;
  let top = binWidthM;
  for (const e of errors) {
    mean += e;
    if (e > top) top = e;
  }
  mean /= n;
  const nBins = Math.ceil(top / binWidthM) + 1;
  const counts = new Array<number>(nBins).fill(0);
  const edges = new Array<number>(nBins + 1);
  for (let i = 0; i <= nBins; i++) edges[i] = i * binWidthM;
  for (const e of errors) {
    counts[Math.min(nBins - 1, Math.floor(e / binWidthM))] += 1;
  }
  const sorted = Float64Array.from(errors).sort();
  const fractions = new Float64Array(n);
  for (let i = 0; i < n; i++) fractions[i] = (i + 1) / n;
  return {
    errorsM: errors,
    meanDistanceErrorM: mean,
    histogramCounts: counts,
    histogramEdgesM: edges,
    cdfErrorsM: sorted,
    cdfFractions: fractions,
  };
}
