/** CSV fixture builders shaped like the simulator's artifact files. */

import { GAIN_HEADER, SUMMARY_HEADER, TRACE_HEADER } from "../src/csv";

export interface SummaryShape {
  algo: string;
  m: number;
  e: number;
  rounds: number;
  gapStart?: number;
  gapStep?: number;
}

/** Rows like a 20-seed showcase summary: gap_mean decays linearly in log space. */
export function summaryCsv(shape: SummaryShape): string {
  const gapStart = shape.gapStart ?? 0.5;
  const gapStep = shape.gapStep ?? 0.004;
  const lines = [SUMMARY_HEADER.join(",")];
  for (let round = 1; round <= shape.rounds; round += 1) {
    const gap = gapStart - gapStep * round;
    const delta = Math.pow(10, gap / 2);
    lines.push([
      shape.algo, shape.m, shape.e, round,
      delta, 1e-4, gap, 2e-3, gap - 0.05, gap + 0.05,
    ].join(","));
  }
  return lines.join("\n") + "\n";
}

export interface TraceShape {
  algo: string;
  m: number;
  e: number;
  seeds: number;
  rounds: number;
}

/** Per (seed, round, model) rows with distinguishable gap values. */
export function traceCsv(shape: TraceShape): string {
  const lines = [TRACE_HEADER.join(",")];
  for (let seed = 1; seed <= shape.seeds; seed += 1) {
    for (let round = 1; round <= shape.rounds; round += 1) {
      for (let model = 1; model <= shape.m; model += 1) {
        const gap = traceGap(seed, round, model);
        lines.push([
          shape.algo, shape.m, shape.e, seed, round, model,
          0.1, 16, Math.pow(10, gap / 2), gap,
        ].join(","));
      }
    }
  }
  return lines.join("\n") + "\n";
}

export function traceGap(seed: number, round: number, model: number): number {
  return -(round * 0.01 + seed * 0.1 + model * 0.001);
}

/** Gain rows over a grid of algorithms, local steps, and model counts. */
export function gainCsv(
  algos: string[] = ["mfa-rand", "mfa-rr"],
  localStepsGrid: number[] = [1, 5, 10],
  modelsGrid: number[] = [2, 3, 6],
  epsilons: number[] = [0.05],
): string {
  const lines = [GAIN_HEADER.join(",")];
  for (const algo of algos) {
    for (const e of localStepsGrid) {
      for (const m of modelsGrid) {
        for (const epsilon of epsilons) {
          const gain = gainValue(algo, m);
          const tMulti = 1000;
          lines.push([
            algo, m, e, epsilon, Math.round((tMulti * gain) / m), tMulti, gain,
          ].join(","));
        }
      }
    }
  }
  return lines.join("\n") + "\n";
}

export function gainValue(algo: string, m: number): number {
  return algo === "mfa-rr" ? m : 1 + 0.8 * (m - 1);
}
