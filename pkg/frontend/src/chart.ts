// SVG geometry for the prediction chart. Pure functions over the served
// payload so the band/region/zoom logic is unit-testable without a DOM.

import type { PredictionResponse } from "./types.js";

// Three-region color schema: training history, overall test set, target window.
export const REGION_COLORS = {
  train: "#dbeafe", // blue
  test: "#fef3c7", // yellow
  window: "#fecaca", // red
} as const;

export const QUANTILE_KEYS = ["q10", "q20", "q30", "q40", "q50", "q60", "q70", "q80", "q90"] as const;

export interface Size {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_SIZE: Size = {
  width: 920,
  height: 320,
  padLeft: 56,
  padRight: 12,
  padTop: 12,
  padBottom: 26,
};

export type Scale = (v: number) => number;

export function scaleLinear(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function linePath(points: Array<[number, number]>): string {
  if (points.length === 0) return "";
  return points.map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`).join("");
}

/** Closed band polygon between a lower and an upper track (same x grid). */
export function bandPath(
  xs: number[],
  lower: number[],
  upper: number[],
  sx: Scale,
  sy: Scale,
): string {
  if (xs.length === 0) return "";
  const up = xs.map((x, i) => `${sx(x).toFixed(2)},${sy(upper[i]!).toFixed(2)}`);
  const down = [...xs].reverse().map((x, i) => {
    const j = xs.length - 1 - i;
    return `${sx(x).toFixed(2)},${sy(lower[j]!).toFixed(2)}`;
  });
  return `M${up.join("L")}L${down.join("L")}Z`;
}

export interface RegionRect {
  kind: "train" | "test" | "window";
  color: string;
  x0: number;
  x1: number;
}

/** Region rectangles clipped to the current x-domain (index coordinates). */
export function regionRects(
  regions: PredictionResponse["regions"],
  xDomain: [number, number],
): RegionRect[] {
  const out: RegionRect[] = [];
  for (const kind of ["train", "test", "window"] as const) {
    const [a, b] = regions[kind];
    const x0 = Math.max(a, xDomain[0]);
    const x1 = Math.min(b, xDomain[1]);
    if (x1 > x0) {
      out.push({ kind, color: REGION_COLORS[kind], x0, x1 });
    }
  }
  return out;
}

/** Zoomed x-domain: the whole series or exactly the target window span. */
export function viewDomain(payload: PredictionResponse, view: "global" | "local"): [number, number] {
  if (view === "local") {
    return [payload.regions.window[0], payload.regions.window[1]];
  }
  return [0, payload.timestamps.length];
}

export interface PredictionChart {
  xDomain: [number, number];
  yDomain: [number, number];
  regions: RegionRect[];
  bands: Array<{ lower: string; upper: string; path: string; opacity: number }>;
  median: string;
  truth: string;
  context: string;
  sx: Scale;
  sy: Scale;
}

function finiteValues(values: Array<number | null>): number[] {
  return values.filter((v): v is number => v !== null && Number.isFinite(v));
}

/** Assemble every drawable piece of the prediction view for one variate. */
export function buildPredictionChart(
  payload: PredictionResponse,
  variate: string,
  view: "global" | "local",
  size: Size = DEFAULT_SIZE,
): PredictionChart {
  const xDomain = viewDomain(payload, view);
  const quantiles = payload.quantiles[variate];
  if (!quantiles) throw new Error(`no quantile tracks for variate ${variate}`);
  const series = payload.values[variate] ?? [];
  const [w0, w1] = payload.regions.window;

  const visible = finiteValues(series.slice(Math.floor(xDomain[0]), Math.ceil(xDomain[1])));
  const forecastValues = QUANTILE_KEYS.flatMap((k) => quantiles[k] ?? []);
  const lo = Math.min(...visible, ...forecastValues);
  const hi = Math.max(...visible, ...forecastValues);
  const yPad = (hi - lo || 1) * 0.05;
  const yDomain: [number, number] = [lo - yPad, hi + yPad];

  const sx = scaleLinear(xDomain, [size.padLeft, size.width - size.padRight]);
  const sy = scaleLinear(yDomain, [size.height - size.padBottom, size.padTop]);

  const steps = quantiles.q50?.length ?? 0;
  const xsWindow = Array.from({ length: steps }, (_, i) => w0 + i);

  // symmetric inter-quantile bands around the median, widest first
  const bands = [] as Array<{ lower: string; upper: string; path: string; opacity: number }>;
  const pairs: Array<[string, string, number]> = [
    ["q10", "q90", 0.18],
    ["q20", "q80", 0.22],
    ["q30", "q70", 0.26],
    ["q40", "q60", 0.3],
  ];
  for (const [loKey, hiKey, opacity] of pairs) {
    const lower = quantiles[loKey];
    const upper = quantiles[hiKey];
    if (!lower || !upper) continue;
    bands.push({
      lower: loKey,
      upper: hiKey,
      path: bandPath(xsWindow, lower, upper, sx, sy),
      opacity,
    });
  }

  const medianPts: Array<[number, number]> = (quantiles.q50 ?? []).map((v, i) => [
    sx(w0 + i),
    sy(v),
  ]);
  const truthSeries = payload.truth[variate] ?? [];
  const truthPts: Array<[number, number]> = [];
  truthSeries.forEach((v, i) => {
    if (v !== null) truthPts.push([sx(w0 + i), sy(v)]);
  });
  const contextPts: Array<[number, number]> = [];
  series.forEach((v, i) => {
    if (v !== null && i >= xDomain[0] && i <= xDomain[1]) contextPts.push([sx(i), sy(v)]);
  });

  return {
    xDomain,
    yDomain,
    regions: regionRects(payload.regions, xDomain),
    bands,
    median: linePath(medianPts),
    truth: linePath(truthPts),
    context: linePath(contextPts),
    sx,
    sy,
  };
}

/** Verify q10 <= q50 <= q90 (pixel rows are inverted) at every step. */
export function bandIsMonotone(payload: PredictionResponse, variate: string): boolean {
  const quantiles = payload.quantiles[variate];
  if (!quantiles) return false;
  const steps = quantiles.q50?.length ?? 0;
  for (let i = 0; i < steps; i++) {
    for (let k = 1; k < QUANTILE_KEYS.length; k++) {
      const prev = quantiles[QUANTILE_KEYS[k - 1]!]?.[i];
      const cur = quantiles[QUANTILE_KEYS[k]!]?.[i];
      if (prev === undefined || cur === undefined || cur < prev) return false;
    }
  }
  return steps > 0;
}

export function renderChartSvg(chart: PredictionChart, size: Size = DEFAULT_SIZE): string {
  const top = size.padTop;
  const bottom = size.height - size.padBottom;
  const parts: string[] = [
    `<svg viewBox="0 0 ${size.width} ${size.height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  for (const r of chart.regions) {
    const x0 = chart.sx(r.x0);
    const x1 = chart.sx(r.x1);
    parts.push(
      `<rect class="region-${r.kind}" x="${x0.toFixed(2)}" y="${top}" width="${(x1 - x0).toFixed(2)}" height="${bottom - top}" fill="${r.color}"></rect>`,
    );
  }
  for (const band of chart.bands) {
    parts.push(`<path d="${band.path}" fill="#2563eb" opacity="${band.opacity}"></path>`);
  }
  if (chart.context) parts.push(`<path d="${chart.context}" fill="none" stroke="#475569" stroke-width="1"></path>`);
  if (chart.truth) parts.push(`<path d="${chart.truth}" fill="none" stroke="#0f172a" stroke-width="1.5"></path>`);
  if (chart.median) parts.push(`<path d="${chart.median}" fill="none" stroke="#dc2626" stroke-width="1.5"></path>`);
  parts.push("</svg>");
  return parts.join("");
}
