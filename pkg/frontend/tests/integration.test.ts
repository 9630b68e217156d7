// End-to-end tests against the real serve mode: builds the synthetic corpus
// with the Python CLI, starts the server, and drives it through the same
// ApiClient the console uses.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { bandIsMonotone, buildPredictionChart } from "../src/chart.js";
import { cellText, renderTableHtml } from "../src/leaderboard.js";
import { buildQueue, decisionFor } from "../src/review.js";

const PYTHON = process.env.TSBENCH_PYTHON ?? "python3";

let root: string;
let out: string;
let server: ChildProcess | null = null;
let api: ApiClient;

function run(args: string[]): void {
  const result = spawnSync(PYTHON, args, { encoding: "utf-8" });
  if (result.status !== 0) {
    throw new Error(`${PYTHON} ${args.join(" ")} failed:\n${result.stdout}\n${result.stderr}`);
  }
}

async function startServer(outDir: string): Promise<string> {
  return new Promise((resolve, reject) => {
    const proc = spawn(PYTHON, ["-m", "tsbench.cli", "serve", "--out", outDir, "--port", "0"], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    server = proc;
    let buffer = "";
    const timer = setTimeout(() => reject(new Error(`server did not start:\n${buffer}`)), 15000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/http:\/\/[\d.]+:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${match[1]}`);
      }
    });
    proc.stderr!.on("data", (chunk: Buffer) => (buffer += chunk.toString()));
    proc.on("exit", (code) => reject(new Error(`server exited early (${code}):\n${buffer}`)));
  });
}

beforeAll(async () => {
  root = mkdtempSync(join(tmpdir(), "tsbench-console-"));
  out = join(root, "out");
  run(["-m", "tsbench.synthetic", join(root, "inputs")]);
  run(["-m", "tsbench.cli", "validate", "--corpus", join(root, "inputs/corpus/manifest.json"), "--out", out]);
  run(["-m", "tsbench.cli", "screen", "--out", out]);
  run(["-m", "tsbench.cli", "finalize", "--decisions", join(root, "inputs/decisions.json"), "--out", out]);
  run(["-m", "tsbench.cli", "features", "--out", out]);
  run(["-m", "tsbench.cli", "encode", "--out", out]);
  run([
    "-m", "tsbench.cli", "evaluate", "--out", out,
    "--forecasts", join(root, "inputs/forecasts/snaive-replay.csv"),
    "--forecasts", join(root, "inputs/forecasts/noisy-oracle.csv"),
  ]);
  run(["-m", "tsbench.cli", "leaderboard", "--out", out]);
  const base = await startServer(out);
  api = new ApiClient(base);
}, 120000);

afterAll(() => {
  server?.kill();
  rmSync(root, { recursive: true, force: true });
});

describe("review round-trip", () => {
  it("renders the flagged variate in the queue", async () => {
    const report = await api.getQuality("macro-weekly");
    const queue = buildQueue(report);
    const flagged = queue.find((q) => q.variate === "flatline");
    expect(flagged).toBeDefined();
    expect(flagged!.predictable).toBe(false);
    expect(flagged!.failingChecks).toContain("dominance");
  });

  it("drop decision appears in the draft and finalize removes the series downstream", async () => {
    const report = await api.getQuality("meter-daily");
    const queue = buildQueue(report);
    const item = queue.find((q) => q.seriesId === "meter-02") ?? {
      datasetId: "meter-daily",
      seriesId: "meter-02",
      variate: "demand",
      predictable: true,
      failingChecks: [],
      checkDetails: {},
      advisory: [],
      imputations: 0,
    };
    await api.postDecision(decisionFor(item, "drop-series"));
    const draft = await api.getDecisions();
    expect(draft.decisions.some((d) => d.target === "series" && d.id === "meter-02")).toBe(true);

    // apply the draft exactly as the CLI would, into a fresh output directory
    const altOut = join(root, "alt-out");
    run(["-m", "tsbench.cli", "validate", "--corpus", join(root, "inputs/corpus/manifest.json"), "--out", altOut]);
    run(["-m", "tsbench.cli", "screen", "--out", altOut]);
    run(["-m", "tsbench.cli", "finalize", "--decisions", join(out, "decisions_draft.json"), "--out", altOut]);
    run(["-m", "tsbench.cli", "features", "--out", altOut]);
    const manifest = JSON.parse(readFileSync(join(altOut, "final/manifest.json"), "utf-8")) as Array<{
      dataset_id: string;
      series: string[];
    }>;
    const meter = manifest.find((d) => d.dataset_id === "meter-daily")!;
    expect(meter.series.some((p) => p.includes("meter-02"))).toBe(false);
    const featuresCsv = readFileSync(join(altOut, "features.csv"), "utf-8");
    expect(featuresCsv.includes("meter-02")).toBe(false);
  }, 60000);

  it("rejects invalid decisions with the service's message", async () => {
    await expect(
      api.postDecision({ dataset_id: "meter-daily", target: "variate", id: "ghost", action: "drop" }),
    ).rejects.toThrow(/ghost/);
  });
});

describe("pass-through fidelity", () => {
  it("table cells equal the served JSON values exactly", async () => {
    const board = await api.getLeaderboard("task");
    const html = renderTableHtml(board.entries, { key: "mase_norm", ascending: true });
    for (const entry of board.entries) {
      expect(html).toContain(`data-model="${entry.model}"`);
      for (const value of [entry.mase_norm, entry.crps_norm, entry.mase_rank, entry.crps_rank]) {
        expect(html).toContain(`<td>${cellText(value)}</td>`);
      }
    }
  });

  it("pattern toggles re-query the service", async () => {
    const board = await api.getLeaderboard("pattern", { mask: "F3", bits: "1" });
    expect(board.level).toBe("pattern");
    expect(board.query).toEqual({
      mask: [false, false, true, false, false, false, false],
      bits: [0, 0, 1, 0, 0, 0, 0],
    });
  });

  it("prediction chart renders the three-region schema with monotone bands", async () => {
    const payload = await api.getPrediction("noisy-oracle", "tides-hourly", "short", "station-a", 1);
    expect(bandIsMonotone(payload, "level")).toBe(true);
    const globalChart = buildPredictionChart(payload, "level", "global");
    expect(globalChart.regions.map((r) => r.kind)).toEqual(["train", "test", "window"]);
    const localChart = buildPredictionChart(payload, "level", "local");
    expect(localChart.xDomain).toEqual([payload.regions.window[0], payload.regions.window[1]]);
  });

  it("s-naive prediction band collapses to the median", async () => {
    const payload = await api.getPrediction("s-naive", "tides-hourly", "short", "station-a", 1);
    const q = payload.quantiles.level!;
    expect(q.q10).toEqual(q.q50);
    expect(q.q90).toEqual(q.q50);
  });
});
