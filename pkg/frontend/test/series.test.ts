import { describe, expect, it } from "vitest";

import { parseCsv } from "../src/csv";
import { gainSeries, meanGapSeries, spaghettiSeries } from "../src/series";
import { gainCsv, gainValue, summaryCsv, traceCsv, traceGap } from "./fixtures";

function table(text: string, path = "fixture.csv") {
  const cells = parseCsv(text);
  return { path, header: cells[0] as string[], rows: cells.slice(1) };
}

describe("meanGapSeries", () => {
  it("is a pure view of gap_mean, one overlay per file", () => {
    const rand = table(summaryCsv({ algo: "mfa-rand", m: 12, e: 5, rounds: 6 }));
    const rr = table(summaryCsv({ algo: "mfa-rr", m: 12, e: 5, rounds: 6 }));
    const series = meanGapSeries([rand, rr]);
    expect(series.map((s) => s.label)).toEqual(["mfa-rand (M=12)", "mfa-rr (M=12)"]);
    expect(series[0]?.x).toEqual([1, 2, 3, 4, 5, 6]);
    const fromFile = rand.rows.map((row) => Number(row[6]));
    expect(series[0]?.y).toEqual(fromFile);
  });

  it("honors label overrides", () => {
    const t = table(summaryCsv({ algo: "mfa-rr", m: 2, e: 5, rounds: 3 }));
    expect(meanGapSeries([t], ["round robin"])[0]?.label).toBe("round robin");
  });

  it("rejects files mixing algorithms", () => {
    const a = summaryCsv({ algo: "mfa-rr", m: 2, e: 5, rounds: 2 });
    const b = summaryCsv({ algo: "mfa-rand", m: 2, e: 5, rounds: 2 });
    const mixed = table(a + b.split("\n").slice(1).join("\n"));
    expect(() => meanGapSeries([mixed])).toThrowError(/expected one algo/);
  });
});

describe("spaghettiSeries", () => {
  it("draws one line per seed from a single model's rows", () => {
    const t = table(traceCsv({ algo: "mfa-rr", m: 2, e: 5, seeds: 3, rounds: 4 }));
    const series = spaghettiSeries(t);
    expect(series.map((s) => s.label)).toEqual(["seed 1", "seed 2", "seed 3"]);
    for (const [seedIndex, s] of series.entries()) {
      expect(s.x).toEqual([1, 2, 3, 4]);
      expect(s.y).toEqual([1, 2, 3, 4].map((round) => traceGap(seedIndex + 1, round, 1)));
    }
  });

  it("selects other models on request and rejects absent ones", () => {
    const t = table(traceCsv({ algo: "mfa-rr", m: 2, e: 5, seeds: 2, rounds: 3 }));
    const series = spaghettiSeries(t, 2);
    expect(series[0]?.y).toEqual([1, 2, 3].map((round) => traceGap(1, round, 2)));
    expect(() => spaghettiSeries(t, 9)).toThrowError(/no rows for model 9/);
  });

  it("yields a single line for a single-seed trace", () => {
    const t = table(traceCsv({ algo: "fedavg-seq", m: 1, e: 1, seeds: 1, rounds: 5 }));
    expect(spaghettiSeries(t)).toHaveLength(1);
  });
});

describe("gainSeries", () => {
  it("groups by algorithm and local steps, points ordered by M", () => {
    const t = table(gainCsv());
    const series = gainSeries([t]);
    expect(series).toHaveLength(6); // 2 algos x E in {1,5,10}
    for (const s of series) {
      expect(s.x).toEqual([2, 3, 6]);
      expect(s.label).not.toContain("eps");
    }
    const rr1 = series.find((s) => s.label === "mfa-rr E=1");
    expect(rr1?.y).toEqual([2, 3, 6].map((m) => gainValue("mfa-rr", m)));
    const rand5 = series.find((s) => s.label === "mfa-rand E=5");
    expect(rand5?.y).toEqual([2, 3, 6].map((m) => gainValue("mfa-rand", m)));
  });

  it("separates epsilons and labels them when several are present", () => {
    const t = table(gainCsv(["mfa-rr"], [5], [2, 3], [0.1, 0.05]));
    const series = gainSeries([t]);
    expect(series).toHaveLength(2);
    expect(series.every((s) => s.label.includes("eps="))).toBe(true);
  });
});
