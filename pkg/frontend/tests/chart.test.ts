import { describe, expect, it } from "vitest";

import {
  bandIsMonotone,
  bandPath,
  buildPredictionChart,
  regionRects,
  REGION_COLORS,
  scaleLinear,
  viewDomain,
} from "../src/chart.js";
import type { PredictionResponse } from "../src/types.js";

function fixture(): PredictionResponse {
  const n = 60;
  const h = 8;
  const windowStart = 48;
  const values = Array.from({ length: n }, (_, i) => Math.sin(i / 5) * 2 + 10);
  const q50 = Array.from({ length: h }, (_, i) => values[windowStart + i]! + 0.1);
  const quantiles: Record<string, number[]> = {};
  const offsets: Record<string, number> = {
    q10: -1.2, q20: -0.8, q30: -0.5, q40: -0.2, q50: 0, q60: 0.2, q70: 0.5, q80: 0.8, q90: 1.2,
  };
  for (const [key, off] of Object.entries(offsets)) {
    quantiles[key] = q50.map((v) => v + off);
  }
  return {
    model: "demo",
    dataset: "d",
    horizon: "short",
    series: "s",
    window: 2,
    timestamps: Array.from({ length: n }, (_, i) => `t${i}`),
    values: { v: values },
    regions: { train: [0, 40], test: [40, 60], window: [windowStart, windowStart + h] },
    quantiles: { v: quantiles },
    truth: { v: values.slice(windowStart, windowStart + h) },
  };
}

describe("prediction chart geometry", () => {
  it("renders the three-region schema in order", () => {
    const payload = fixture();
    const rects = regionRects(payload.regions, [0, 60]);
    expect(rects.map((r) => r.kind)).toEqual(["train", "test", "window"]);
    expect(rects.map((r) => r.color)).toEqual([
      REGION_COLORS.train,
      REGION_COLORS.test,
      REGION_COLORS.window,
    ]);
  });

  it("zoom to the window span sets the x-domain to [t_k, t_k + H]", () => {
    const payload = fixture();
    expect(viewDomain(payload, "local")).toEqual([48, 56]);
    expect(viewDomain(payload, "global")).toEqual([0, 60]);
  });

  it("clips regions to the zoomed domain", () => {
    const payload = fixture();
    const rects = regionRects(payload.regions, [48, 56]);
    expect(rects.find((r) => r.kind === "train")).toBeUndefined();
    const windowRect = rects.find((r) => r.kind === "window");
    expect(windowRect).toMatchObject({ x0: 48, x1: 56 });
  });

  it("quantile band stays ordered at every step (q10 <= q50 <= q90)", () => {
    const payload = fixture();
    expect(bandIsMonotone(payload, "v")).toBe(true);
    payload.quantiles.v!.q90![3] = payload.quantiles.v!.q10![3]! - 1;
    expect(bandIsMonotone(payload, "v")).toBe(false);
  });

  it("band polygon pixels keep upper above lower at every column", () => {
    const payload = fixture();
    const chart = buildPredictionChart(payload, "v", "local");
    const band = chart.bands.find((b) => b.lower === "q10" && b.upper === "q90")!;
    // parse "Mx,yLx,y...Z": first half is the upper track, second the lower
    const pairs = band.path.replace(/^M/, "").replace(/Z$/, "").split("L").map((p) => {
      const [x, y] = p.split(",").map(Number);
      return { x, y };
    });
    const upper = pairs.slice(0, pairs.length / 2);
    const lower = pairs.slice(pairs.length / 2).reverse();
    for (let i = 0; i < upper.length; i++) {
      expect(upper[i]!.x).toBeCloseTo(lower[i]!.x, 6);
      // SVG y grows downward: the upper quantile has the smaller pixel y
      expect(upper[i]!.y).toBeLessThanOrEqual(lower[i]!.y);
    }
  });

  it("degenerate baseline band collapses onto the median line", () => {
    const payload = fixture();
    for (const key of Object.keys(payload.quantiles.v!)) {
      payload.quantiles.v![key] = payload.quantiles.v!.q50!.slice();
    }
    const chart = buildPredictionChart(payload, "v", "local");
    for (const band of chart.bands) {
      const pairs = band.path.replace(/^M/, "").replace(/Z$/, "").split("L").map((p) => {
        const [x, y] = p.split(",").map(Number);
        return { x, y };
      });
      const upper = pairs.slice(0, pairs.length / 2);
      const lower = pairs.slice(pairs.length / 2).reverse();
      for (let i = 0; i < upper.length; i++) {
        expect(upper[i]!.y).toBeCloseTo(lower[i]!.y, 6);
      }
    }
  });

  it("scaleLinear maps domain endpoints to range endpoints", () => {
    const s = scaleLinear([0, 10], [100, 200]);
    expect(s(0)).toBe(100);
    expect(s(10)).toBe(200);
    expect(s(5)).toBe(150);
  });

  it("bandPath yields a closed polygon", () => {
    const sx = scaleLinear([0, 3], [0, 30]);
    const sy = scaleLinear([0, 10], [100, 0]);
    const path = bandPath([0, 1, 2], [1, 1, 1], [2, 3, 2], sx, sy);
    expect(path.startsWith("M")).toBe(true);
    expect(path.endsWith("Z")).toBe(true);
  });
});
