// Leaderboard table logic. Cells display the served JSON values verbatim:
// no rounding, no recomputation, so the table is a pass-through of the API.

import type { LeaderboardEntry } from "./types.js";

export type SortKey = "model" | "mase_norm" | "crps_norm" | "mase_rank" | "crps_rank" | "units";

export interface SortSpec {
  key: SortKey;
  ascending: boolean;
}

/** Served JSON value -> displayed text. Numbers are stringified untouched. */
export function cellText(value: number | string | null | undefined): string {
  if (value === null || value === undefined) return "–";
  return String(value);
}

/** Stable sort on a copy; null values sink to the bottom in either direction. */
export function sortEntries(entries: LeaderboardEntry[], spec: SortSpec): LeaderboardEntry[] {
  const indexed = entries.map((e, i) => ({ e, i }));
  indexed.sort((a, b) => {
    const va = a.e[spec.key];
    const vb = b.e[spec.key];
    if (va === null && vb === null) return a.i - b.i;
    if (va === null) return 1;
    if (vb === null) return -1;
    let cmp: number;
    if (typeof va === "string" || typeof vb === "string") {
      cmp = String(va) < String(vb) ? -1 : String(va) > String(vb) ? 1 : 0;
    } else {
      cmp = (va as number) - (vb as number);
    }
    if (!spec.ascending) cmp = -cmp;
    return cmp !== 0 ? cmp : a.i - b.i;
  });
  return indexed.map(({ e }) => e);
}

export const COLUMNS: Array<{ key: SortKey; label: string }> = [
  { key: "model", label: "Model" },
  { key: "mase_norm", label: "MASE (norm)" },
  { key: "crps_norm", label: "CRPS (norm)" },
  { key: "mase_rank", label: "MASE rank" },
  { key: "crps_rank", label: "CRPS rank" },
  { key: "units", label: "Units" },
];

function escapeHtml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function renderTableHtml(entries: LeaderboardEntry[], spec: SortSpec): string {
  const sorted = sortEntries(entries, spec);
  const head = COLUMNS.map((c) => {
    const marker = c.key === spec.key ? (spec.ascending ? " ▲" : " ▼") : "";
    return `<th data-key="${c.key}">${escapeHtml(c.label)}${marker}</th>`;
  }).join("");
  const body = sorted
    .map((e) => {
      const cells = COLUMNS.map((c) => `<td>${escapeHtml(cellText(e[c.key]))}</td>`).join("");
      return `<tr data-model="${escapeHtml(e.model)}">${cells}</tr>`;
    })
    .join("");
  return `<table class="leaderboard"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}
