import type {
  DatasetsResponse,
  Decision,
  DecisionsDraft,
  FeaturesResponse,
  LeaderboardPayload,
  PredictionResponse,
  QualityReport,
  ValuesResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Typed client over the serve-mode endpoints. Errors surface immediately;
 * there are no retries, so an unreachable service becomes a visible state. */
export class ApiClient {
  constructor(readonly base: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable at ${this.base}: ${String(err)}`);
    }
    const body = await response.text();
    if (!response.ok) {
      let message = body;
      try {
        message = (JSON.parse(body) as { error?: { message?: string } }).error?.message ?? body;
      } catch {
        // non-JSON error body; keep the raw text
      }
      throw new ApiError(response.status, message);
    }
    return JSON.parse(body) as T;
  }

  getDatasets(): Promise<DatasetsResponse> {
    return this.request("/datasets");
  }

  getQuality(datasetId: string): Promise<QualityReport> {
    return this.request(`/datasets/${encodeURIComponent(datasetId)}/quality`);
  }

  getValues(
    dataset: string,
    series: string,
    variate: string,
    span?: [number, number],
  ): Promise<ValuesResponse> {
    const suffix = span ? `?span=${span[0]}:${span[1]}` : "";
    return this.request(
      `/variates/${encodeURIComponent(dataset)}/${encodeURIComponent(series)}/${encodeURIComponent(variate)}/values${suffix}`,
    );
  }

  getFeatures(): Promise<FeaturesResponse> {
    return this.request("/features");
  }

  getLeaderboard(level: string, pattern?: { mask: string; bits: string }): Promise<LeaderboardPayload> {
    let path = `/leaderboard?level=${encodeURIComponent(level)}`;
    if (pattern) {
      path += `&mask=${encodeURIComponent(pattern.mask)}&bits=${encodeURIComponent(pattern.bits)}`;
    }
    return this.request(path);
  }

  getPrediction(
    model: string,
    dataset: string,
    horizon: string,
    series: string,
    window: number,
  ): Promise<PredictionResponse> {
    const parts = [model, dataset, horizon, series, String(window)].map(encodeURIComponent);
    return this.request(`/predictions/${parts.join("/")}`);
  }

  getDecisions(): Promise<DecisionsDraft> {
    return this.request("/decisions");
  }

  postDecision(decision: Decision): Promise<{ ok: boolean; count: number }> {
    return this.request("/decisions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    });
  }
}
