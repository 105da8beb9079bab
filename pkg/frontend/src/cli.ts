#!/usr/bin/env node
/** fedmulti-plots: render SVG charts from simulator CSV artifacts.
 *
 * Exit codes: 0 success, 1 unreadable input or write failure,
 * 2 bad arguments or schema mismatch.
 */

import { parseArgs } from "node:util";

import { SchemaError } from "./csv";
import { PLOT_KINDS, PlotKind, plot } from "./plot";

export class UsageError extends Error {}

const USAGE =
  "usage: fedmulti-plots --kind {mean-gap|spaghetti|gain-vs-M} " +
  "--input FILE_OR_RUN_DIR [--input ...] --out FILE.svg " +
  "[--title TEXT] [--label TEXT ...] [--model N]";

export function main(argv: string[]): number {
  try {
    const spec = parseSpec(argv);
    plot(spec);
    console.log(`wrote ${spec.out}`);
    return 0;
  } catch (error) {
    if (error instanceof UsageError) {
      console.error(String(error.message));
      console.error(USAGE);
      return 2;
    }
    if (error instanceof SchemaError) {
      console.error(error.message);
      return 2;
    }
    console.error(`error: ${error instanceof Error ? error.message : String(error)}`);
    return 1;
  }
}

function parseSpec(argv: string[]) {
  let values;
  try {
    values = parseArgs({
      args: argv,
      options: {
        input: { type: "string", multiple: true },
        kind: { type: "string" },
        out: { type: "string" },
        title: { type: "string" },
        label: { type: "string", multiple: true },
        model: { type: "string" },
      },
      allowPositionals: false,
    }).values;
  } catch (error) {
    throw new UsageError(error instanceof Error ? error.message : String(error));
  }
  if (!values.kind || !(PLOT_KINDS as readonly string[]).includes(values.kind)) {
    throw new UsageError(`--kind must be one of ${PLOT_KINDS.join(", ")}, got ${values.kind ?? "nothing"}`);
  }
  if (!values.input || values.input.length === 0) {
    throw new UsageError("need at least one --input");
  }
  if (!values.out) {
    throw new UsageError("need --out");
  }
  let model: number | undefined;
  if (values.model !== undefined) {
    model = Number(values.model);
    if (!Number.isInteger(model) || model < 1) {
      throw new UsageError(`--model must be a positive integer, got ${values.model}`);
    }
  }
  return {
    inputs: values.input,
    kind: values.kind as PlotKind,
    out: values.out,
    title: values.title,
    labels: values.label,
    model,
  };
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
