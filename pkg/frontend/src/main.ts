// DOM wiring for the three console views. All data comes from the serve-mode
// endpoints; errors render as a visible banner instead of retry loops.

import { ApiClient, ApiError } from "./api.js";
import { bandIsMonotone, buildPredictionChart, renderChartSvg } from "./chart.js";
import { renderTableHtml, type SortSpec } from "./leaderboard.js";
import { cycleState, describe, FEATURE_LABELS, initialStates, toQuery, type TriState } from "./patterns.js";
import { buildQueue, decisionFor, type DraftAction, type ReviewItem } from "./review.js";
import type { DatasetsResponse, LeaderboardPayload, PredictionResponse } from "./types.js";

const params = new URLSearchParams(location.search);
const api = new ApiClient(params.get("api") ?? "http://127.0.0.1:8765");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(err: unknown): void {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = err instanceof ApiError ? `API error (${err.status}): ${err.message}` : String(err);
  banner.hidden = false;
}

function clearError(): void {
  el<HTMLDivElement>("error-banner").hidden = true;
}

// ---------------------------------------------------------------- review tab

let reviewItems: ReviewItem[] = [];

async function loadReview(): Promise<void> {
  const datasets = await api.getDatasets();
  reviewItems = [];
  for (const ds of datasets.datasets) {
    try {
      const report = await api.getQuality(ds.dataset_id);
      reviewItems.push(...buildQueue(report));
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) continue; // not screened yet
      throw err;
    }
  }
  renderReview(datasets);
}

function renderReview(datasets: DatasetsResponse): void {
  const host = el<HTMLDivElement>("review-queue");
  if (reviewItems.length === 0) {
    host.innerHTML = `<p class="empty">No flagged variates. Stage: ${datasets.stage}.</p>`;
    return;
  }
  host.innerHTML = "";
  reviewItems.forEach((item, idx) => {
    const card = document.createElement("div");
    card.className = "review-card";
    const checks = item.failingChecks.length
      ? `failing: ${item.failingChecks.join(", ")}`
      : "all checks passed";
    const advisory = item.advisory.length ? `<div class="advisory">${item.advisory.join("<br>")}</div>` : "";
    card.innerHTML = `
      <h3>${item.datasetId} / ${item.seriesId} / ${item.variate}</h3>
      <div class="checks ${item.predictable ? "ok" : "bad"}">${checks}; imputations: ${item.imputations}</div>
      ${advisory}
      <div class="plot" id="plot-${idx}">loading…</div>
      <div class="actions">
        <button data-action="keep">keep</button>
        <button data-action="drop-variate">drop variate</button>
        <button data-action="drop-series">drop series</button>
        <span class="draft-state" id="draft-${idx}"></span>
      </div>`;
    host.appendChild(card);
    void drawReviewPlot(item, idx);
    card.querySelectorAll("button").forEach((btn) => {
      btn.addEventListener("click", () => void submitDecision(item, idx, btn.dataset.action as DraftAction));
    });
  });
}

async function drawReviewPlot(item: ReviewItem, idx: number): Promise<void> {
  try {
    const values = await api.getValues(item.datasetId, item.seriesId, item.variate);
    const payload: PredictionResponse = {
      model: "",
      dataset: item.datasetId,
      horizon: "",
      series: item.seriesId,
      window: 0,
      timestamps: values.timestamps,
      values: { [item.variate]: values.values },
      regions: { ...values.regions, window: [0, 0] },
      quantiles: { [item.variate]: {} },
      truth: { [item.variate]: [] },
    };
    const chart = buildPredictionChart(payload, item.variate, "global");
    el(`plot-${idx}`).innerHTML = renderChartSvg(chart);
  } catch (err) {
    el(`plot-${idx}`).textContent = `plot unavailable: ${String(err)}`;
  }
}

async function submitDecision(item: ReviewItem, idx: number, action: DraftAction): Promise<void> {
  try {
    clearError();
    const decision = decisionFor(item, action);
    await api.postDecision(decision);
    const draft = await api.getDecisions();
    el(`draft-${idx}`).textContent = `drafted (${draft.decisions.length} total; apply with finalize)`;
  } catch (err) {
    showError(err);
  }
}

// -------------------------------------------------------------- explorer tab

async function populateExplorer(): Promise<void> {
  const datasets = await api.getDatasets();
  const dsSelect = el<HTMLSelectElement>("explorer-dataset");
  dsSelect.innerHTML = datasets.datasets
    .map((d) => `<option value="${d.dataset_id}">${d.dataset_id}</option>`)
    .join("");
  dsSelect.addEventListener("change", () => fillExplorerSelectors(datasets));
  el<HTMLSelectElement>("explorer-view").addEventListener("change", () => void drawPrediction());
  ["explorer-model", "explorer-horizon", "explorer-series", "explorer-variate", "explorer-window"].forEach(
    (id) => el<HTMLSelectElement>(id).addEventListener("change", () => void drawPrediction()),
  );
  fillExplorerSelectors(datasets);
}

function fillExplorerSelectors(datasets: DatasetsResponse): void {
  const ds = datasets.datasets.find((d) => d.dataset_id === el<HTMLSelectElement>("explorer-dataset").value);
  if (!ds) return;
  el<HTMLSelectElement>("explorer-horizon").innerHTML = ds.horizons
    .map((h) => `<option value="${h.label}" data-windows="${h.windows}">${h.label} (H=${h.H})</option>`)
    .join("");
  el<HTMLSelectElement>("explorer-series").innerHTML = ds.series
    .map((s) => `<option>${s.series_id}</option>`)
    .join("");
  el<HTMLSelectElement>("explorer-variate").innerHTML = ds.variates
    .map((v) => `<option>${v}</option>`)
    .join("");
  const windows = ds.horizons[0]?.windows ?? 1;
  el<HTMLSelectElement>("explorer-window").innerHTML = Array.from(
    { length: windows },
    (_, i) => `<option>${i + 1}</option>`,
  ).join("");
  void drawPrediction();
}

async function drawPrediction(): Promise<void> {
  try {
    clearError();
    const payload = await api.getPrediction(
      el<HTMLSelectElement>("explorer-model").value,
      el<HTMLSelectElement>("explorer-dataset").value,
      el<HTMLSelectElement>("explorer-horizon").value,
      el<HTMLSelectElement>("explorer-series").value,
      Number(el<HTMLSelectElement>("explorer-window").value),
    );
    const variate = el<HTMLSelectElement>("explorer-variate").value;
    const view = el<HTMLSelectElement>("explorer-view").value as "global" | "local";
    const chart = buildPredictionChart(payload, variate, view);
    el("explorer-chart").innerHTML = renderChartSvg(chart);
    el("explorer-note").textContent = bandIsMonotone(payload, variate)
      ? "quantile bands monotone at every step"
      : "warning: non-monotone quantile bands";
  } catch (err) {
    el("explorer-chart").innerHTML = `<p class="empty">no prediction: ${String(err)}</p>`;
  }
}

async function populateModels(): Promise<void> {
  // model list comes from the leaderboard artifact (single source of truth)
  try {
    const board = await api.getLeaderboard("task");
    el<HTMLSelectElement>("explorer-model").innerHTML = board.entries
      .map((e) => `<option>${e.model}</option>`)
      .join("");
  } catch {
    el<HTMLSelectElement>("explorer-model").innerHTML = `<option>s-naive</option>`;
  }
}

// ----------------------------------------------------------- leaderboard tab

let patternStates: TriState[] = initialStates();
let sortSpec: SortSpec = { key: "mase_norm", ascending: true };
let currentBoard: LeaderboardPayload | null = null;

function renderPatternToggles(): void {
  const host = el<HTMLDivElement>("pattern-toggles");
  host.innerHTML = "";
  FEATURE_LABELS.forEach((label, i) => {
    const btn = document.createElement("button");
    const state = patternStates[i] ?? "ignore";
    btn.className = `toggle toggle-${state}`;
    btn.textContent = `${label}: ${state}`;
    btn.addEventListener("click", () => {
      patternStates[i] = cycleState(patternStates[i] ?? "ignore");
      renderPatternToggles();
      void loadLeaderboard();
    });
    host.appendChild(btn);
  });
  el("pattern-description").textContent = describe(patternStates);
}

async function loadLeaderboard(): Promise<void> {
  try {
    clearError();
    const query = toQuery(patternStates);
    const level = el<HTMLSelectElement>("board-level").value;
    currentBoard = query
      ? await api.getLeaderboard("pattern", query)
      : await api.getLeaderboard(level);
    renderBoard();
  } catch (err) {
    showError(err);
  }
}

function renderBoard(): void {
  const host = el<HTMLDivElement>("board-table");
  if (!currentBoard || currentBoard.entries.length === 0) {
    host.innerHTML = `<p class="empty">no variates match this pattern</p>`;
    return;
  }
  host.innerHTML = renderTableHtml(currentBoard.entries, sortSpec);
  host.querySelectorAll("th").forEach((th) => {
    th.addEventListener("click", () => {
      const key = th.dataset.key as SortSpec["key"];
      sortSpec = key === sortSpec.key ? { key, ascending: !sortSpec.ascending } : { key, ascending: true };
      renderBoard();
    });
  });
  const retrieved = currentBoard.retrieved ? ` — ${currentBoard.retrieved.length} variates retrieved` : "";
  el("board-meta").textContent = `level: ${currentBoard.level}${retrieved}`;
}

// ----------------------------------------------------------------- bootstrap

function wireTabs(): void {
  document.querySelectorAll<HTMLButtonElement>("nav button").forEach((btn) => {
    btn.addEventListener("click", () => {
      document.querySelectorAll("main > section").forEach((s) => ((s as HTMLElement).hidden = true));
      el(btn.dataset.target!).hidden = false;
      document.querySelectorAll("nav button").forEach((b) => b.classList.remove("active"));
      btn.classList.add("active");
    });
  });
}

async function boot(): Promise<void> {
  wireTabs();
  renderPatternToggles();
  el<HTMLSelectElement>("board-level").addEventListener("change", () => void loadLeaderboard());
  try {
    clearError();
    await loadReview();
    await populateModels();
    await populateExplorer();
    await loadLeaderboard();
  } catch (err) {
    showError(err);
  }
}

void boot();
