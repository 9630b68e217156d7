// Review-queue model: flagged variates with their diagnostics, plus the
// advisory correlation pairs, each paired with a draft decision form.

import type { Decision, QualityReport } from "./types.js";

export interface ReviewItem {
  datasetId: string;
  seriesId: string;
  variate: string;
  predictable: boolean;
  failingChecks: string[];
  checkDetails: Record<string, Record<string, unknown>>;
  advisory: string[];
  imputations: number;
}

/** One queue entry per flagged variate; check lists mirror the report verbatim. */
export function buildQueue(report: QualityReport): ReviewItem[] {
  const advisoryByVariate = new Map<string, string[]>();
  for (const [sid, a, b, r] of report.correlation.within_series) {
    const note = `within-series |r|=${Math.abs(r).toFixed(4)} with the other column`;
    advisoryByVariate.set(`${sid}/${a}`, [...(advisoryByVariate.get(`${sid}/${a}`) ?? []), `${note} (${b})`]);
    advisoryByVariate.set(`${sid}/${b}`, [...(advisoryByVariate.get(`${sid}/${b}`) ?? []), `${note} (${a})`]);
  }

  const items: ReviewItem[] = [];
  for (const [seriesId, body] of Object.entries(report.series)) {
    for (const [variate, record] of Object.entries(body.variates)) {
      const failing = Object.entries(record.checks)
        .filter(([, check]) => check.passed === false)
        .map(([name]) => name);
      const advisory = advisoryByVariate.get(`${seriesId}/${variate}`) ?? [];
      if (record.predictable && failing.length === 0 && advisory.length === 0) continue;
      items.push({
        datasetId: report.dataset_id,
        seriesId,
        variate,
        predictable: record.predictable,
        failingChecks: failing,
        checkDetails: record.checks,
        advisory,
        imputations: record.imputation_log.length,
      });
    }
  }
  // hard failures first, then advisory-only items
  items.sort((a, b) => Number(a.predictable) - Number(b.predictable));
  return items;
}

export type DraftAction = "keep" | "drop-variate" | "drop-series" | "trim-series";

export function decisionFor(item: ReviewItem, action: DraftAction, trimSpan?: [string, string]): Decision {
  switch (action) {
    case "keep":
      return { dataset_id: item.datasetId, target: "variate", id: item.variate, action: "keep" };
    case "drop-variate":
      return { dataset_id: item.datasetId, target: "variate", id: item.variate, action: "drop" };
    case "drop-series":
      return { dataset_id: item.datasetId, target: "series", id: item.seriesId, action: "drop" };
    case "trim-series":
      if (!trimSpan) throw new Error("trim needs a span");
      return {
        dataset_id: item.datasetId,
        target: "series",
        id: item.seriesId,
        action: "trim",
        trim_span: trimSpan,
      };
  }
}

/** Client-side trim validation mirroring the service's checks. */
export function validateTrimSpan(start: string, end: string, seriesStart: string, seriesEnd: string): string | null {
  const s = Date.parse(start);
  const e = Date.parse(end);
  if (Number.isNaN(s) || Number.isNaN(e)) return "trim span must be two ISO-8601 timestamps";
  if (s > e) return "trim span start must not exceed its end";
  if (s < Date.parse(seriesStart) || e > Date.parse(seriesEnd)) {
    return "trim span must lie inside the series span";
  }
  return null;
}
