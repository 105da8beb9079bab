import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { main } from "../src/cli";
import { gainCsv, summaryCsv, traceCsv } from "./fixtures";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "fedmulti-plots-cli-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function write(name: string, text: string): string {
  const file = path.join(tmp, name);
  fs.mkdirSync(path.dirname(file), { recursive: true });
  fs.writeFileSync(file, text);
  return file;
}

const randSummary = write("rand-summary.csv", summaryCsv({ algo: "mfa-rand", m: 6, e: 5, rounds: 8 }));
const rrSummary = write("rr-summary.csv", summaryCsv({ algo: "mfa-rr", m: 6, e: 5, rounds: 8 }));
const runDir = path.dirname(write("run/summary.csv", summaryCsv({ algo: "mfa-rr", m: 2, e: 1, rounds: 5 })));
const singleSeedTrace = write("single.csv", traceCsv({ algo: "fedavg-seq", m: 1, e: 1, seeds: 1, rounds: 6 }));
const multiSeedTrace = write("multi.csv", traceCsv({ algo: "mfa-rr", m: 2, e: 5, seeds: 4, rounds: 6 }));
const gainFile = write("gain.csv", gainCsv());
const corrupt = write("corrupt.csv", summaryCsv({ algo: "mfa-rr", m: 2, e: 1, rounds: 3 }).replace("gap_mean", "gapmean"));

let logs: string[];
let errors: string[];

beforeEach(() => {
  logs = [];
  errors = [];
  vi.spyOn(console, "log").mockImplementation((...args) => logs.push(args.join(" ")));
  vi.spyOn(console, "error").mockImplementation((...args) => errors.push(args.join(" ")));
});

afterEach(() => vi.restoreAllMocks());

function polylines(file: string): number {
  return fs.readFileSync(file, "utf8").match(/<polyline /g)?.length ?? 0;
}

describe("main", () => {
  it("overlays two summaries into one SVG", () => {
    const out = path.join(tmp, "mean-gap.svg");
    const code = main(["--kind", "mean-gap", "--input", randSummary, "--input", rrSummary, "--out", out]);
    expect(code).toBe(0);
    expect(logs).toEqual([`wrote ${out}`]);
    expect(polylines(out)).toBe(2);
    expect(fs.readFileSync(out, "utf8")).toContain("mfa-rand (M=6)");
  });

  it("resolves a run directory to its summary file", () => {
    const out = path.join(tmp, "dir.svg");
    expect(main(["--kind", "mean-gap", "--input", runDir, "--out", out])).toBe(0);
    expect(polylines(out)).toBe(1);
  });

  it("draws one spaghetti line per seed, and one for a single seed", () => {
    const out = path.join(tmp, "spaghetti.svg");
    expect(main(["--kind", "spaghetti", "--input", multiSeedTrace, "--out", out])).toBe(0);
    expect(polylines(out)).toBe(4);
    expect(main(["--kind", "spaghetti", "--input", singleSeedTrace, "--out", out])).toBe(0);
    expect(polylines(out)).toBe(1);
  });

  it("draws one gain line per algorithm and E", () => {
    const out = path.join(tmp, "gain.svg");
    expect(main(["--kind", "gain-vs-M", "--input", gainFile, "--out", out])).toBe(0);
    expect(polylines(out)).toBe(6);
  });

  it("exits 2 naming the missing column on schema mismatch", () => {
    const out = path.join(tmp, "bad.svg");
    const code = main(["--kind", "mean-gap", "--input", corrupt, "--out", out]);
    expect(code).toBe(2);
    expect(errors.join("\n")).toMatch(/missing column "gap_mean"/);
    expect(fs.existsSync(out)).toBe(false);
  });

  it("exits 2 on usage errors, printing usage", () => {
    expect(main(["--kind", "histogram", "--input", randSummary, "--out", "x.svg"])).toBe(2);
    expect(errors.join("\n")).toMatch(/--kind must be one of mean-gap, spaghetti, gain-vs-M/);
    expect(errors.join("\n")).toContain("usage: fedmulti-plots");

    expect(main(["--kind", "mean-gap", "--input", randSummary])).toBe(2);
    expect(errors.join("\n")).toMatch(/need --out/);

    expect(main(["--kind", "spaghetti", "--input", multiSeedTrace, "--out", "x.svg", "--model", "1.5"])).toBe(2);
    expect(errors.join("\n")).toMatch(/--model must be a positive integer/);

    expect(main(["--kind", "spaghetti", "--input", multiSeedTrace, "--input", singleSeedTrace, "--out", "x.svg"])).toBe(2);
    expect(errors.join("\n")).toMatch(/exactly one trace file/);
  });

  it("exits 1 when an input cannot be read", () => {
    const code = main(["--kind", "mean-gap", "--input", path.join(tmp, "absent.csv"), "--out", path.join(tmp, "x.svg")]);
    expect(code).toBe(1);
    expect(errors.join("\n")).toMatch(/^error: /m);
  });
});
