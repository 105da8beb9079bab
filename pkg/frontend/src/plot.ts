/** PlotSpec resolution: inputs -> validated tables -> series -> SVG file. */

import * as fs from "node:fs";
import * as path from "node:path";

import { SchemaError, Table, readTable } from "./csv";
import { Series, gainSeries, meanGapSeries, spaghettiSeries } from "./series";
import { lineChart } from "./svg";

export const PLOT_KINDS = ["mean-gap", "spaghetti", "gain-vs-M"] as const;
export type PlotKind = (typeof PLOT_KINDS)[number];

export interface PlotSpec {
  inputs: string[];
  kind: PlotKind;
  out: string;
  title?: string;
  labels?: string[];
  model?: number;
}

const DEFAULT_FILE: Record<PlotKind, string> = {
  "mean-gap": "summary.csv",
  spaghetti: "trace.csv",
  "gain-vs-M": "gain.csv",
};

/** A run directory stands for its kind-appropriate CSV file. */
export function resolveInput(input: string, kind: PlotKind): string {
  if (fs.existsSync(input) && fs.statSync(input).isDirectory()) {
    return path.join(input, DEFAULT_FILE[kind]);
  }
  return input;
}

function buildSeries(spec: PlotSpec, tables: Table[]): Series[] {
  if (spec.kind === "mean-gap") {
    return meanGapSeries(tables, spec.labels ?? []);
  }
  if (spec.kind === "spaghetti") {
    if (tables.length !== 1) {
      throw new SchemaError("spaghetti takes exactly one trace file");
    }
    return spaghettiSeries(tables[0] as Table, spec.model ?? 1);
  }
  return gainSeries(tables);
}

const AXIS_LABELS: Record<PlotKind, { x: string; y: string; title: string }> = {
  "mean-gap": { x: "round", y: "mean log10 optimality gap", title: "mean gap" },
  spaghetti: { x: "round", y: "log10 optimality gap", title: "per-seed gap" },
  "gain-vs-M": { x: "models M", y: "gain", title: "gain vs number of models" },
};

export function plot(spec: PlotSpec): void {
  if (spec.inputs.length === 0) {
    throw new SchemaError("need at least one --input");
  }
  const tables = spec.inputs.map((input) => readTable(resolveInput(input, spec.kind)));
  const series = buildSeries(spec, tables);
  const labels = AXIS_LABELS[spec.kind];
  const svg = lineChart(series, {
    title: spec.title ?? labels.title,
    xLabel: labels.x,
    yLabel: labels.y,
  });
  fs.writeFileSync(spec.out, svg);
}
