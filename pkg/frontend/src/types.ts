// Payload shapes of the serve-mode JSON endpoints. The console never
// recomputes metrics; every displayed number comes from these fields.

export interface HorizonInfo {
  label: string;
  H: number;
  windows: number;
}

export interface SeriesInfo {
  series_id: string;
  length: number;
  start: string;
}

export interface DatasetInfo {
  dataset_id: string;
  domain: string;
  freq_code: string;
  seasonal_period: number;
  test_length: number;
  variates: string[];
  horizons: HorizonInfo[];
  series: SeriesInfo[];
}

export interface DatasetsResponse {
  stage: "corpus" | "final";
  datasets: DatasetInfo[];
}

export interface CheckRecord {
  passed: boolean;
  [metric: string]: unknown;
}

export interface VariateQualityRecord {
  predictable: boolean;
  checks: Record<string, CheckRecord>;
  imputation_log: Array<[number, number, number]>;
}

export interface QualityReport {
  dataset_id: string;
  series: Record<string, { variates: Record<string, VariateQualityRecord> }>;
  correlation: {
    within_series: Array<[string, string, string, number]>;
    cross_series: Array<[string, string, number]>;
    skipped_pairs: Array<[string, string]>;
  };
}

export interface ValuesResponse {
  dataset: string;
  series: string;
  variate: string;
  span: [number, number];
  timestamps: string[];
  values: Array<number | null>;
  missing: boolean[];
  regions: { train: [number, number]; test: [number, number] };
}

export interface LeaderboardEntry {
  model: string;
  mase_norm: number | null;
  crps_norm: number | null;
  mase_rank: number | null;
  crps_rank: number | null;
  units: number;
  diagnostics: Record<string, number>;
}

export interface LeaderboardPayload {
  level: string;
  query: { mask: boolean[]; bits: number[] } | null;
  entries: LeaderboardEntry[];
  retrieved?: string[];
  diagnostics?: Record<string, unknown>;
}

export interface PredictionResponse {
  model: string;
  dataset: string;
  horizon: string;
  series: string;
  window: number;
  timestamps: string[];
  values: Record<string, Array<number | null>>;
  regions: { train: [number, number]; test: [number, number]; window: [number, number] };
  quantiles: Record<string, Record<string, number[]>>;
  truth: Record<string, Array<number | null>>;
}

export interface Decision {
  dataset_id: string;
  target: "series" | "variate";
  id: string;
  action: "keep" | "drop" | "trim";
  trim_span?: [string, string];
}

export interface DecisionsDraft {
  decisions: Decision[];
}

export interface FeatureRowJson {
  dataset_id: string;
  series_id: string;
  variate: string;
  trend_strength: number;
  trend_linearity: number;
  trend_slope: number;
  seasonality_strength: number;
  seasonality_correlation: number;
  residual_acf1: number;
  complexity: number;
  stationarity: number;
  window: string;
  degenerate: string[];
  code?: string;
}

export interface FeaturesResponse {
  rows: FeatureRowJson[];
  medians: Record<string, number>;
}
