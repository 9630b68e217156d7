"""Automated quality screening and curator-decision application.

The screening pass runs per-variate checks (dtype, length/missing gates,
value-dominance, white-noise test, sliding-window IQR outlier scan) followed
by within-series and cross-series correlation flagging, and aggregates
everything into a QualityReport. Nothing is dropped automatically: flagged
correlations and failed variates await curator decisions, which
``apply_decisions`` turns into a finalized dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from tsbench import stattests
from tsbench._kernels import rolling_quartiles
from tsbench.corpus import DatasetSpec, FrequencySpec, SeriesRecord
from tsbench.stattests import DegenerateSeriesError, ljung_box  # noqa: F401  (re-exported)

_SUB_HOURLY = ("5T", "10T", "15T", "20T", "30T")

DEFAULT_TAU_LEN = {
    **{code: 2000 for code in _SUB_HOURLY},
    "H": 1000,
    "D": 300,
    "B": 300,
    "W": 100,
    "M": 60,
    "Q": 40,
}


class ScreeningError(Exception):
    pass


class DecisionError(ScreeningError):
    """A curator decision does not resolve against the dataset."""


@dataclass(frozen=True)
class ScreeningConfig:
    """Thresholds of the quality pipeline; defaults are the documented ones."""

    tau_miss: float = 0.3
    tau_corr: float = 0.95
    tau_ext: float = 0.05
    k_trans: float = 5.0
    k_ext: float = 9.0
    lb_lags: tuple = (10, 20)
    iqr_window: object = "auto"
    tau_len: dict = field(default_factory=lambda: dict(DEFAULT_TAU_LEN))

    def __post_init__(self):
        object.__setattr__(self, "lb_lags", tuple(int(h) for h in self.lb_lags))
        if not (0.0 <= self.tau_miss <= 1.0):
            raise ValueError("tau_miss must be in [0, 1]")
        if not (0.0 < self.tau_corr <= 1.0):
            raise ValueError("tau_corr must be in (0, 1]")
        if not (0.0 < self.k_trans < self.k_ext):
            raise ValueError("need 0 < k_trans < k_ext")
        if not self.lb_lags or list(self.lb_lags) != sorted(self.lb_lags):
            raise ValueError("lb_lags must be non-empty and ascending")
        if self.iqr_window != "auto":
            w = int(self.iqr_window)
            if w < 5 or w % 2 == 0:
                raise ValueError("iqr_window must be an odd integer >= 5 or 'auto'")

    def min_length(self, freq_code: str) -> int:
        return int(self.tau_len.get(freq_code, DEFAULT_TAU_LEN[freq_code]))

    @classmethod
    def from_json(cls, path) -> "ScreeningConfig":
        raw = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ScreeningError(f"unknown screening config fields: {sorted(unknown)}")
        return cls(**raw)

    def to_json_dict(self) -> dict:
        return {
            "tau_miss": self.tau_miss,
            "tau_corr": self.tau_corr,
            "tau_ext": self.tau_ext,
            "k_trans": self.k_trans,
            "k_ext": self.k_ext,
            "lb_lags": list(self.lb_lags),
            "iqr_window": self.iqr_window,
            "tau_len": dict(self.tau_len),
        }


def dominance_and_entropy(x) -> tuple:
    """Top-5 value-frequency mass and normalized entropy of the value distribution."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty input")
    _, counts = np.unique(x, return_counts=True)
    freqs = counts / x.size
    top = np.sort(freqs)[::-1][:5]
    topk_dom = float(top.sum())
    if freqs.size == 1:
        return topk_dom, 0.0
    entropy = float(-(freqs * np.log(freqs)).sum() / np.log(freqs.size))
    return topk_dom, entropy


def auto_iqr_window(length: int, seasonal_period: int) -> int:
    """Window covering at least one seasonal cycle: min(L, max(51, 2m+1)), odd."""
    w = min(length, max(51, 2 * seasonal_period + 1))
    return w if w % 2 == 1 else w - 1


@dataclass(frozen=True)
class OutlierScan:
    transitional: tuple
    extreme: tuple
    cleaned: np.ndarray
    window: int

    @property
    def extreme_fraction(self) -> float:
        return len(self.extreme) / self.cleaned.shape[0]


def iqr_outlier_scan(x, cfg: ScreeningConfig, seasonal_period: int = 1) -> OutlierScan:
    """Classify and impute outliers by distance to the local median in IQR units.

    Per position the deviation score is |x_t - median_t| / IQR_t over a centred
    window (clipped at the boundaries). Scores strictly between k_trans and
    k_ext are transitional (flagged only); scores >= k_ext are extreme and are
    replaced by the preceding valid observation (the following one at the
    series head). Zero-IQR windows score 0 when x_t equals the median and
    infinity otherwise. ``x`` must already be gap-filled.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if np.isnan(x).any():
        raise ValueError("iqr_outlier_scan requires a gap-filled series")
    window = auto_iqr_window(n, seasonal_period) if cfg.iqr_window == "auto" else int(cfg.iqr_window)
    window = min(window, n if n % 2 == 1 else n - 1)
    window = max(window, 1)

    med, q25, q75 = rolling_quartiles(x, window)
    iqr = q75 - q25
    dev = np.abs(x - med)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(iqr > 0, dev / iqr, np.where(dev == 0, 0.0, np.inf))

    transitional = np.nonzero((d > cfg.k_trans) & (d < cfg.k_ext))[0]
    extreme = np.nonzero(d >= cfg.k_ext)[0]

    cleaned = x.copy()
    if extreme.size:
        is_extreme = np.zeros(n, dtype=bool)
        is_extreme[extreme] = True
        valid_idx = np.nonzero(~is_extreme)[0]
        if valid_idx.size:
            first_valid = valid_idx[0]
            for t in extreme:
                cleaned[t] = cleaned[t - 1] if t > 0 and t > first_valid else x[first_valid]
    return OutlierScan(tuple(int(i) for i in transitional), tuple(int(i) for i in extreme), cleaned, window)


def _fill_forward_backward(x: np.ndarray) -> np.ndarray:
    return pd.Series(x).ffill().bfill().to_numpy(dtype=np.float64)


@dataclass(frozen=True)
class VariateQuality:
    """Diagnostic outcome of the per-variate checks."""

    predictable: bool
    checks: dict
    imputation_log: tuple = ()
    cleaned: np.ndarray | None = None

    def failing_checks(self) -> list:
        return [name for name, rec in self.checks.items() if rec.get("passed") is False]

    def to_json_dict(self) -> dict:
        return {
            "predictable": self.predictable,
            "checks": self.checks,
            "imputation_log": [[int(i), float(old), float(new)] for i, old, new in self.imputation_log],
        }


def univariate_quality_check(x, cfg: ScreeningConfig, freq: FrequencySpec | None = None) -> VariateQuality:
    """Run the ordered per-variate checks and return the full diagnostic record.

    Later checks never run once an eliminating check fails (except the
    length/missing gates, which mark the variate unpredictable but let the
    diagnostics continue), so a variate never fails only a later check while
    an earlier one also failed.
    """
    checks: dict = {}
    raw = np.asarray(x)
    try:
        values = raw.astype(np.float64)
    except (TypeError, ValueError):
        checks["dtype"] = {"passed": False, "dtype": str(raw.dtype)}
        return VariateQuality(False, checks)
    checks["dtype"] = {"passed": True, "dtype": str(raw.dtype)}

    n = values.shape[0]
    tau_len = cfg.min_length(freq.code) if freq is not None else 0
    length_ok = n >= tau_len
    checks["length"] = {"passed": bool(length_ok), "length": int(n), "threshold": int(tau_len)}

    mask = np.isnan(values)
    rho_miss = float(mask.mean()) if n else 1.0
    missing_ok = rho_miss <= cfg.tau_miss
    checks["missing"] = {"passed": bool(missing_ok), "missing_rate": rho_miss, "threshold": cfg.tau_miss}
    gate_failed = not (length_ok and missing_ok)
    if mask.all():
        return VariateQuality(False, checks)

    filled = _fill_forward_backward(values)

    topk_dom, entropy = dominance_and_entropy(filled)
    dominance_ok = not (topk_dom >= 0.5 or entropy < 0.1)
    checks["dominance"] = {
        "passed": bool(dominance_ok),
        "topk_dom": topk_dom,
        "normalized_entropy": entropy,
    }
    if not dominance_ok:
        return VariateQuality(False, checks)

    lags = [h for h in cfg.lb_lags if h < n]
    if lags:
        try:
            pvalues = ljung_box(filled, lags)
        except DegenerateSeriesError:
            checks["white_noise"] = {"passed": False, "degenerate": True}
            return VariateQuality(False, checks)
        white_noise = min(pvalues) > 0.05
        checks["white_noise"] = {
            "passed": not white_noise,
            "lags": lags,
            "pvalues": [float(p) for p in pvalues],
        }
        if white_noise:
            return VariateQuality(False, checks)
    else:
        checks["white_noise"] = {"passed": True, "skipped": True, "lags": []}

    m = freq.seasonal_period if freq is not None else 1
    scan = iqr_outlier_scan(filled, cfg, seasonal_period=m)
    outliers_ok = scan.extreme_fraction <= cfg.tau_ext
    checks["outliers"] = {
        "passed": bool(outliers_ok),
        "transitional": len(scan.transitional),
        "extreme": len(scan.extreme),
        "extreme_fraction": scan.extreme_fraction,
        "window": scan.window,
    }
    if not outliers_ok:
        return VariateQuality(False, checks)

    log = tuple((t, float(filled[t]), float(scan.cleaned[t])) for t in scan.extreme)
    return VariateQuality(not gate_failed, checks, imputation_log=log, cleaned=scan.cleaned)


def _pearson(a: np.ndarray, b: np.ndarray):
    joint = ~(np.isnan(a) | np.isnan(b))
    if joint.sum() < 2:
        return None, "fewer than 2 jointly observed points"
    aa, bb = a[joint], b[joint]
    sa, sb = aa.std(), bb.std()
    if sa == 0.0 or sb == 0.0:
        return None, "zero variance"
    r = float(((aa - aa.mean()) * (bb - bb.mean())).mean() / (sa * sb))
    return r, None


@dataclass(frozen=True)
class CorrelationFlags:
    within: tuple = ()  # (series_id, variate_j, variate_k, r)
    cross: tuple = ()  # (series_a, series_b, r)
    skipped: tuple = ()  # (description, reason)


def correlation_check(dataset: DatasetSpec, cfg: ScreeningConfig) -> CorrelationFlags:
    """Flag variate pairs with |Pearson r| above tau_corr; advisory only.

    Within-series pairs for multivariate series; cross-series pairs when the
    dataset is univariate with equal series lengths.
    """
    within, skipped = [], []
    for s in dataset.series:
        for j in range(s.n_variates):
            for k in range(j + 1, s.n_variates):
                r, reason = _pearson(s.values[:, j], s.values[:, k])
                if reason is not None:
                    skipped.append((f"{s.series_id}:{s.variate_names[j]}~{s.variate_names[k]}", reason))
                elif abs(r) > cfg.tau_corr:
                    within.append((s.series_id, s.variate_names[j], s.variate_names[k], r))

    cross = []
    if all(s.n_variates == 1 for s in dataset.series):
        lengths = {s.length for s in dataset.series}
        if len(lengths) == 1 and len(dataset.series) > 1:
            for a in range(len(dataset.series)):
                for b in range(a + 1, len(dataset.series)):
                    sa, sb = dataset.series[a], dataset.series[b]
                    r, reason = _pearson(sa.values[:, 0], sb.values[:, 0])
                    if reason is not None:
                        skipped.append((f"{sa.series_id}~{sb.series_id}", reason))
                    elif abs(r) > cfg.tau_corr:
                        cross.append((sa.series_id, sb.series_id, r))
    return CorrelationFlags(tuple(within), tuple(cross), tuple(skipped))


@dataclass(frozen=True)
class QualityReport:
    """Everything the curator sees: per-variate outcomes plus correlation flags."""

    dataset_id: str
    config: ScreeningConfig
    variates: dict  # (series_id, variate_name) -> VariateQuality
    correlations: CorrelationFlags

    def quality(self, series_id: str, variate: str) -> VariateQuality:
        return self.variates[(series_id, variate)]

    def flagged(self) -> list:
        """Keys of variates that failed at least one check, in report order."""
        return [key for key, vq in self.variates.items() if not vq.predictable]

    def to_json_dict(self) -> dict:
        series: dict = {}
        for (sid, name), vq in self.variates.items():
            series.setdefault(sid, {"variates": {}})["variates"][name] = vq.to_json_dict()
        return {
            "dataset_id": self.dataset_id,
            "config": self.config.to_json_dict(),
            "series": series,
            "correlation": {
                "within_series": [list(t) for t in self.correlations.within],
                "cross_series": [list(t) for t in self.correlations.cross],
                "skipped_pairs": [list(t) for t in self.correlations.skipped],
            },
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "QualityReport":
        cfg = ScreeningConfig(**raw["config"])
        variates = {}
        for sid, body in raw["series"].items():
            for name, rec in body["variates"].items():
                variates[(sid, name)] = VariateQuality(
                    predictable=rec["predictable"],
                    checks=rec["checks"],
                    imputation_log=tuple((int(i), old, new) for i, old, new in rec["imputation_log"]),
                )
        corr = raw["correlation"]
        flags = CorrelationFlags(
            tuple(tuple(t) for t in corr["within_series"]),
            tuple(tuple(t) for t in corr["cross_series"]),
            tuple(tuple(t) for t in corr["skipped_pairs"]),
        )
        return cls(raw["dataset_id"], cfg, variates, flags)


def run_screening(dataset: DatasetSpec, cfg: ScreeningConfig | None = None) -> QualityReport:
    """Full quality pipeline for one dataset.

    Timestamp rectification already happened at corpus load, so this runs the
    per-variate checks followed by the correlation phases. Per-variate results
    are independent; the report is keyed by (series_id, variate) so assembly
    order never matters.
    """
    cfg = cfg or ScreeningConfig()
    variates = {}
    for s in dataset.series:
        for j, name in enumerate(s.variate_names):
            variates[(s.series_id, name)] = univariate_quality_check(s.values[:, j], cfg, s.freq)
    return QualityReport(dataset.dataset_id, cfg, variates, correlation_check(dataset, cfg))


VALID_ACTIONS = ("keep", "drop", "trim")


@dataclass(frozen=True)
class Decision:
    dataset_id: str
    target: str  # "series" | "variate"
    id: str
    action: str
    trim_span: tuple | None = None  # (start_iso, end_iso)

    def __post_init__(self):
        if self.target not in ("series", "variate"):
            raise DecisionError(f"decision target must be 'series' or 'variate', got {self.target!r}")
        if self.action not in VALID_ACTIONS:
            raise DecisionError(f"decision action must be one of {VALID_ACTIONS}, got {self.action!r}")
        if self.action == "trim":
            if self.target != "series":
                raise DecisionError("trim decisions apply to series only")
            if not self.trim_span or len(self.trim_span) != 2:
                raise DecisionError("trim decisions need trim_span = [start, end]")

    def to_json_dict(self) -> dict:
        out = {"dataset_id": self.dataset_id, "target": self.target, "id": self.id, "action": self.action}
        if self.trim_span is not None:
            out["trim_span"] = list(self.trim_span)
        return out


@dataclass(frozen=True)
class DecisionSet:
    decisions: tuple

    @classmethod
    def from_json(cls, path) -> "DecisionSet":
        raw = json.loads(Path(path).read_text())
        return cls.from_json_dict(raw)

    @classmethod
    def from_json_dict(cls, raw: dict) -> "DecisionSet":
        if not isinstance(raw, dict) or "decisions" not in raw:
            raise DecisionError("decisions file must be an object with a 'decisions' array")
        entries = []
        for rec in raw["decisions"]:
            entries.append(
                Decision(
                    dataset_id=rec["dataset_id"],
                    target=rec["target"],
                    id=rec["id"],
                    action=rec["action"],
                    trim_span=tuple(rec["trim_span"]) if rec.get("trim_span") else None,
                )
            )
        return cls(tuple(entries))

    def to_json_dict(self) -> dict:
        return {"decisions": [d.to_json_dict() for d in self.decisions]}

    def for_dataset(self, dataset_id: str) -> list:
        return [d for d in self.decisions if d.dataset_id == dataset_id]


def _cleaned_column(series: SeriesRecord, j: int, report: QualityReport) -> np.ndarray:
    column = series.values[:, j].copy()
    vq = report.variates.get((series.series_id, series.variate_names[j]))
    if vq is not None:
        for idx, _old, new in vq.imputation_log:
            if not np.isnan(column[idx]):
                column[idx] = new
    return column


def apply_decisions(dataset: DatasetSpec, report: QualityReport, decisions: DecisionSet) -> tuple:
    """Finalize a dataset: apply drops and trims, substitute cleaned values.

    Unmentioned flagged items default to keep. Returns ``(DatasetSpec,
    provenance)`` where provenance records every removal and trim.
    """
    relevant = decisions.for_dataset(dataset.dataset_id)
    series_ids = {s.series_id for s in dataset.series}
    variate_names = set(dataset.variate_names)

    drop_series, drop_variates, trims = set(), set(), {}
    provenance = {"dropped_series": [], "dropped_variates": [], "trims": []}
    for d in relevant:
        if d.target == "series" and d.id not in series_ids:
            raise DecisionError(f"dataset {dataset.dataset_id!r}: unknown series id {d.id!r}")
        if d.target == "variate" and d.id not in variate_names:
            raise DecisionError(f"dataset {dataset.dataset_id!r}: unknown variate id {d.id!r}")
        if d.action == "keep":
            continue
        if d.action == "drop":
            if d.target == "series":
                drop_series.add(d.id)
                provenance["dropped_series"].append(d.id)
            else:
                drop_variates.add(d.id)
                provenance["dropped_variates"].append(d.id)
        elif d.action == "trim":
            trims[d.id] = (pd.Timestamp(d.trim_span[0]), pd.Timestamp(d.trim_span[1]))
            provenance["trims"].append({"series": d.id, "span": list(d.trim_span)})

    kept_names = [n for n in dataset.variate_names if n not in drop_variates]
    if not kept_names:
        raise DecisionError(f"dataset {dataset.dataset_id!r}: decisions drop every variate")

    new_series = []
    for s in dataset.series:
        if s.series_id in drop_series:
            continue
        columns = [
            _cleaned_column(s, j, report)
            for j, name in enumerate(s.variate_names)
            if name in kept_names
        ]
        values = np.column_stack(columns)
        start = s.start
        if s.series_id in trims:
            t0, t1 = trims[s.series_id]
            stamps = s.timestamps
            if t0 < stamps[0] or t1 > stamps[-1] or t0 > t1:
                raise DecisionError(
                    f"dataset {dataset.dataset_id!r}: trim span for {s.series_id!r} lies outside the series"
                )
            sel = (stamps >= t0) & (stamps <= t1)
            values = values[sel]
            start = stamps[np.nonzero(sel)[0][0]]
        new_series.append(
            SeriesRecord(
                series_id=s.series_id,
                start=start,
                freq=s.freq,
                values=values,
                missing_mask=np.isnan(values),
                variate_names=tuple(kept_names),
            )
        )
    if not new_series:
        raise DecisionError(f"dataset {dataset.dataset_id!r}: decisions drop every series")

    try:
        final = DatasetSpec(
            dataset_id=dataset.dataset_id,
            domain=dataset.domain,
            series=tuple(new_series),
            test_length=dataset.test_length,
            horizons=dataset.horizons,
        )
    except ValueError as exc:
        raise DecisionError(f"decisions leave an invalid dataset: {exc}") from exc
    return final, provenance
