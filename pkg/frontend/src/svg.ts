/** Minimal static SVG line charts; no dependencies, deterministic output. */

import { Series } from "./series";

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
}

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) throw new Error("empty series");
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

/** Round tick positions: steps of 1/2/5 times a power of ten. */
export function ticks(lo: number, hi: number, count = 6): number[] {
  const rawStep = (hi - lo) / Math.max(1, count - 1);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((s) => s >= rawStep) ?? candidates[3] as number;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9 * step; v += step) {
    out.push(Math.abs(v) < 1e-12 * step ? 0 : v);
  }
  return out;
}

function formatTick(value: number): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1e4 || magnitude < 1e-3) return value.toExponential(1);
  return String(parseFloat(value.toPrecision(6)));
}

export function lineChart(series: Series[], options: ChartOptions): string {
  if (series.length === 0) throw new Error("nothing to plot");
  const width = options.width ?? 760;
  const height = options.height ?? 480;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const [xLo, xHi] = extent(series.flatMap((s) => s.x));
  const [yLo, yHi] = extent(series.flatMap((s) => s.y));
  const sx = (v: number): number => MARGIN.left + ((v - xLo) / (xHi - xLo)) * plotW;
  const sy = (v: number): number => MARGIN.top + plotH - ((v - yLo) / (yHi - yLo)) * plotH;
  const px = (v: number): string => v.toFixed(2);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="24" text-anchor="middle" font-size="15">` +
    `${escapeXml(options.title)}</text>`,
  );

  for (const tick of ticks(xLo, xHi)) {
    const x = px(sx(tick));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" ` +
      `stroke="#dddddd"/>`,
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle">` +
      `${formatTick(tick)}</text>`,
    );
  }
  for (const tick of ticks(yLo, yHi)) {
    const y = px(sy(tick));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" ` +
      `stroke="#dddddd"/>`,
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle">` +
      `${formatTick(tick)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
    `fill="none" stroke="#333333"/>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 12}" text-anchor="middle">` +
    `${escapeXml(options.xLabel)}</text>`,
    `<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${escapeXml(options.yLabel)}</text>`,
  );

  series.forEach((s, i) => {
    if (s.x.length !== s.y.length) throw new Error(`series ${s.label}: x/y length mismatch`);
    const color = PALETTE[i % PALETTE.length];
    const points = s.x.map((v, j) => `${px(sx(v))},${px(sy(s.y[j] as number))}`).join(" ");
    parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${points}"/>`,
    );
  });

  const legendEntries = series.length <= 12 ? series : series.slice(0, 12);
  legendEntries.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const y = MARGIN.top + 10 + 16 * i;
    const x = MARGIN.left + plotW - 170;
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${x + 28}" y="${y + 4}">${escapeXml(s.label)}</text>`,
    );
  });
  if (series.length > legendEntries.length) {
    const y = MARGIN.top + 10 + 16 * legendEntries.length;
    parts.push(
      `<text x="${MARGIN.left + plotW - 142}" y="${y + 4}">` +
      `+${series.length - legendEntries.length} more</text>`,
    );
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
