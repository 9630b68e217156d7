"""Forecast ingestion, rolling-window scoring, normalization, and leaderboards.

Every model's window-level MASE/CRPS is computed once and kept; leaderboards
are built by normalizing per-unit arithmetic means against the seasonal-naive
baseline and aggregating the ratios with a clamped geometric mean. Pattern
retrieval restricts the variate-level view to variates whose binary codes
match a masked query. All reductions iterate in sorted key order so repeated
runs are bit-identical.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from tsbench.corpus import DatasetSpec, enumerate_windows
from tsbench.features import PatternCode, PatternQuery
from tsbench.metrics import (
    QUANTILE_LEVELS,
    QuantileForecast,
    WindowScore,
    crps_value,
    mase_value,
    samples_to_quantiles,
    seasonal_naive,
)

SNAIVE_MODEL_ID = "s-naive"
GEOMEAN_CLAMP = (1e-6, 1e6)


class EvaluationError(Exception):
    pass


class IngestError(EvaluationError):
    pass


# (dataset_id, horizon_label, series_id, window_index, variate) -> QuantileForecast
@dataclass(frozen=True)
class ForecastArchive:
    model_id: str
    forecasts: dict
    rejected: tuple = ()  # (key, reason) rows dropped at ingest

    def coverage(self, corpus) -> list:
        """Keys required by the corpus but absent from the archive, sorted."""
        missing = []
        for required in required_keys(corpus):
            if required not in self.forecasts:
                missing.append(required)
        return missing


def required_keys(corpus) -> list:
    keys = []
    for ds in corpus:
        for h in ds.horizons:
            for w in enumerate_windows(ds, h.length):
                for name in ds.variate_names:
                    keys.append((ds.dataset_id, h.label, w.series_id, w.window_index, name))
    return sorted(keys)


_WIDE_COLUMNS = ["model", "dataset", "horizon", "series", "window", "variate", "step"] + [
    f"q{int(level * 100)}" for level in QUANTILE_LEVELS
]
_SAMPLE_COLUMNS = ["model", "dataset", "horizon", "series", "window", "variate", "step", "sample_index", "value"]


def _corpus_index(corpus) -> dict:
    return {ds.dataset_id: ds for ds in corpus}


def ingest_forecasts(path, corpus) -> ForecastArchive:
    """Parse and validate one model's forecast archive (wide or sample CSV).

    Rows with non-monotone quantiles are rejected and counted; structural
    problems (unknown ids, wrong horizon, mixed models) are errors.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty forecast file")
        if header == _WIDE_COLUMNS:
            fmt = "wide"
        elif header == _SAMPLE_COLUMNS:
            fmt = "sample"
        else:
            raise IngestError(f"{path}: unrecognized forecast header {header}")
        rows = list(reader)

    datasets = _corpus_index(corpus)
    models = {r[0] for r in rows}
    if len(models) > 1:
        raise IngestError(f"{path}: one archive per model; found {sorted(models)}")
    if not rows:
        raise IngestError(f"{path}: no forecast rows")
    model_id = rows[0][0]

    grouped: dict = {}
    for r in rows:
        dataset_id, horizon, series, window, variate = r[1], r[2], r[3], int(r[4]), r[5]
        ds = datasets.get(dataset_id)
        if ds is None:
            raise IngestError(f"{path}: unknown dataset {dataset_id!r}")
        try:
            h = ds.horizon(horizon)
        except KeyError as exc:
            raise IngestError(f"{path}: {exc}") from exc
        if not any(s.series_id == series for s in ds.series):
            raise IngestError(f"{path}: unknown series {series!r} in dataset {dataset_id!r}")
        if variate not in ds.variate_names:
            raise IngestError(f"{path}: unknown variate {variate!r} in dataset {dataset_id!r}")
        count = ds.test_length // h.length
        if not 1 <= window <= count:
            raise IngestError(f"{path}: window {window} out of range for task ({dataset_id}, {horizon})")
        key = (dataset_id, horizon, series, window, variate)
        step = int(r[6])
        if not 1 <= step <= h.length:
            raise IngestError(f"{path}: step {step} outside horizon {h.length} for {key}")
        grouped.setdefault(key, {})
        if fmt == "wide":
            if step in grouped[key]:
                raise IngestError(f"{path}: duplicate row for {key} step {step}")
            grouped[key][step] = [float(v) for v in r[7:16]]
        else:
            samples = grouped[key].setdefault(step, {})
            sample_index = int(r[7])
            if sample_index in samples:
                raise IngestError(f"{path}: duplicate sample {sample_index} for {key} step {step}")
            samples[sample_index] = float(r[8])

    forecasts = {}
    rejected = []
    for key in sorted(grouped):
        dataset_id, horizon, _series, _window, _variate = key
        h = datasets[dataset_id].horizon(horizon).length
        steps = grouped[key]
        if sorted(steps) != list(range(1, h + 1)):
            raise IngestError(f"{path}: {key} covers steps {sorted(steps)} instead of 1..{h}")
        if fmt == "wide":
            matrix = np.array([steps[i] for i in range(1, h + 1)], dtype=np.float64)
            try:
                forecasts[key] = QuantileForecast(matrix)
            except ValueError as exc:
                rejected.append((key, str(exc)))
        else:
            sample_ids = sorted(steps[1])
            samples = np.array(
                [[steps[i][j] for j in sample_ids] for i in range(1, h + 1)], dtype=np.float64
            )
            forecasts[key] = samples_to_quantiles(samples)
    return ForecastArchive(model_id, forecasts, tuple(rejected))


def write_archive_csv(archive: ForecastArchive, path) -> None:
    """Persist a validated archive's quantile tracks in the wide CSV format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_WIDE_COLUMNS)
        for key in sorted(archive.forecasts):
            dataset_id, horizon, series, window, variate = key
            values = archive.forecasts[key].values
            for step in range(1, values.shape[0] + 1):
                writer.writerow(
                    [archive.model_id, dataset_id, horizon, series, window, variate, step]
                    + [repr(float(v)) for v in values[step - 1]]
                )


def snaive_archive(corpus) -> ForecastArchive:
    """Generate the seasonal-naive baseline for every required key.

    Context at window k is the entire series before the window start,
    including all earlier test windows.
    """
    forecasts = {}
    for ds in corpus:
        for h in ds.horizons:
            for w in enumerate_windows(ds, h.length):
                series = next(s for s in ds.series if s.series_id == w.series_id)
                start = ds.test_start(series) + w.start_offset
                for j, name in enumerate(ds.variate_names):
                    context = series.values[:start, j]
                    qf, _diag = seasonal_naive(context, series.freq.seasonal_period, h.length)
                    forecasts[(ds.dataset_id, h.label, w.series_id, w.window_index, name)] = qf
    return ForecastArchive(SNAIVE_MODEL_ID, forecasts)


@dataclass
class ScoreTable:
    """Window-level scores keyed by (model, dataset, horizon, series, variate, window)."""

    rows: dict = field(default_factory=dict)

    def merge(self, other: "ScoreTable") -> "ScoreTable":
        overlap = set(self.rows) & set(other.rows)
        if overlap:
            raise EvaluationError(f"duplicate score rows: {sorted(overlap)[:3]}")
        merged = dict(self.rows)
        merged.update(other.rows)
        return ScoreTable(merged)

    def models(self) -> list:
        return sorted({k[0] for k in self.rows})

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["model", "dataset", "horizon", "series", "variate", "window",
                 "mase", "crps", "mase_undefined", "crps_undefined", "diagnostics"]
            )
            for key in sorted(self.rows):
                sc = self.rows[key]
                model, dataset, horizon, series, variate, window = key
                writer.writerow(
                    [model, dataset, horizon, series, variate, window,
                     "" if sc.mase is None else repr(float(sc.mase)),
                     "" if sc.crps is None else repr(float(sc.crps)),
                     sc.mase_undefined or "", sc.crps_undefined or "",
                     ";".join(sc.diagnostics)]
                )

    @classmethod
    def read_csv(cls, path) -> "ScoreTable":
        rows = {}
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                key = (rec["model"], rec["dataset"], rec["horizon"], rec["series"],
                       rec["variate"], int(rec["window"]))
                rows[key] = WindowScore(
                    mase=float(rec["mase"]) if rec["mase"] else None,
                    crps=float(rec["crps"]) if rec["crps"] else None,
                    mase_undefined=rec["mase_undefined"] or None,
                    crps_undefined=rec["crps_undefined"] or None,
                    diagnostics=tuple(d for d in rec["diagnostics"].split(";") if d),
                )
        return cls(rows)


def score_all(archive: ForecastArchive, corpus) -> ScoreTable:
    """Score every covered key of one archive; undefined rows carry their reason."""
    datasets = _corpus_index(corpus)
    rows = {}
    for key in sorted(archive.forecasts):
        dataset_id, horizon, series_id, window, variate = key
        ds = datasets[dataset_id]
        h = ds.horizon(horizon).length
        series = next(s for s in ds.series if s.series_id == series_id)
        j = ds.variate_names.index(variate)
        start = ds.test_start(series) + (window - 1) * h
        truth = series.values[start : start + h, j]
        context = series.values[:start, j]
        qf = archive.forecasts[key]
        if qf.horizon != h:
            raise EvaluationError(f"forecast horizon {qf.horizon} != task horizon {h} for {key}")

        mase_v, mase_reason, diag = mase_value(truth, qf.median_track, series.freq.seasonal_period, context)
        crps_v, crps_reason = crps_value(truth, qf)
        rows[(archive.model_id, dataset_id, horizon, series_id, variate, window)] = WindowScore(
            mase=mase_v, crps=crps_v,
            mase_undefined=mase_reason, crps_undefined=crps_reason,
            diagnostics=diag,
        )
    return ScoreTable(rows)


def _unit_of(key: tuple, unit: str) -> tuple:
    _model, dataset, horizon, series, variate, _window = key
    if unit == "task":
        return (dataset, horizon)
    if unit == "variate":
        return (dataset, series, variate)
    if unit == "dataset":
        return (dataset,)
    raise ValueError(f"unknown unit {unit!r}")


@dataclass(frozen=True)
class NormalizedScores:
    """Per (unit, model, metric) ratio to the baseline's unit mean."""

    unit: str
    values: dict  # (unit_id, model, metric) -> float
    units: tuple  # included unit ids, sorted
    excluded_units: dict  # unit_id -> reason
    missing: tuple  # (unit_id, model, metric) where the model had no defined windows

    def value(self, unit_id, model, metric):
        return self.values.get((unit_id, model, metric))


def normalize(table: ScoreTable, unit: str = "task", baseline: str = SNAIVE_MODEL_ID) -> NormalizedScores:
    """Arithmetic per-unit means of defined window scores, as ratios to the baseline.

    Units whose baseline mean is undefined or zero are excluded for every
    model (paired comparisons only). Models without any defined window in a
    unit are recorded as missing for that unit.
    """
    sums: dict = {}
    counts: dict = {}
    for key in table.rows:
        model = key[0]
        uid = _unit_of(key, unit)
        sc = table.rows[key]
        for metric, value in (("mase", sc.mase), ("crps", sc.crps)):
            if value is None:
                continue
            sums[(uid, model, metric)] = sums.get((uid, model, metric), 0.0) + value
            counts[(uid, model, metric)] = counts.get((uid, model, metric), 0) + 1

    unit_ids = sorted({_unit_of(k, unit) for k in table.rows})
    models = table.models()
    if baseline not in models:
        raise EvaluationError(f"baseline model {baseline!r} absent from the score table")

    values: dict = {}
    excluded: dict = {}
    missing = []
    included_units = []
    for uid in unit_ids:
        base_means = {}
        for metric in ("mase", "crps"):
            c = counts.get((uid, baseline, metric), 0)
            base_means[metric] = (sums[(uid, baseline, metric)] / c) if c else None
        if any(m is None for m in base_means.values()):
            excluded[uid] = "baseline-undefined"
            continue
        if any(m == 0.0 for m in base_means.values()):
            excluded[uid] = "baseline-zero"
            continue
        included_units.append(uid)
        for model in models:
            for metric in ("mase", "crps"):
                c = counts.get((uid, model, metric), 0)
                if c == 0:
                    missing.append((uid, model, metric))
                    continue
                values[(uid, model, metric)] = (sums[(uid, model, metric)] / c) / base_means[metric]
    return NormalizedScores(unit, values, tuple(included_units), excluded, tuple(missing))


def aggregate_geomean(values, clamp=GEOMEAN_CLAMP):
    """Geometric mean of clamped positive values: (aggregate, n_clamped).

    Raises on an empty collection; callers surface that as a diagnostic.
    """
    values = list(values)
    if not values:
        raise EvaluationError("geometric mean of zero units")
    lo, hi = clamp
    clamped = 0
    logs = []
    for v in values:
        cv = min(max(v, lo), hi)
        if cv != v:
            clamped += 1
        logs.append(math.log(cv))
    return math.exp(math.fsum(logs) / len(logs)), clamped


def _average_ranks(pairs) -> dict:
    """model -> rank (ascending by value, ties averaged)."""
    ordered = sorted(pairs, key=lambda mv: (mv[1], mv[0]))
    ranks: dict = {}
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1][1] == ordered[i][1]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[ordered[k][0]] = avg
        i = j + 1
    return ranks


def mean_rank(scores: NormalizedScores, metric: str) -> tuple:
    """Per-model mean rank across units: (ranks, flagged_missing).

    A model missing a unit is excluded from that unit's ranking (the others
    are ranked among themselves) and the exclusion is flagged.
    """
    models = sorted({m for (_u, m, _k) in scores.values})
    totals = {m: 0.0 for m in models}
    counts = {m: 0 for m in models}
    flagged = []
    for uid in scores.units:
        pairs = []
        for m in models:
            v = scores.value(uid, m, metric)
            if v is None:
                flagged.append((uid, m, metric))
            else:
                pairs.append((m, v))
        for m, r in _average_ranks(pairs).items():
            totals[m] += r
            counts[m] += 1
    ranks = {m: (totals[m] / counts[m]) if counts[m] else None for m in models}
    return ranks, tuple(flagged)


def retrieve_by_pattern(codes: dict, query: PatternQuery) -> list:
    """Keys of variates whose codes match the masked query, sorted."""
    return sorted(key for key, code in codes.items() if query.matches(code))


def _entries(scores: NormalizedScores, unit_filter=None) -> list:
    models = sorted({m for (_u, m, _k) in scores.values})
    units = [u for u in scores.units if unit_filter is None or u in unit_filter]
    filtered = NormalizedScores(
        scores.unit,
        {k: v for k, v in scores.values.items() if k[0] in units},
        tuple(units),
        scores.excluded_units,
        scores.missing,
    )
    mase_ranks, _ = mean_rank(filtered, "mase")
    crps_ranks, _ = mean_rank(filtered, "crps")

    entries = []
    for model in models:
        diagnostics = {}
        aggregates = {}
        for metric in ("mase", "crps"):
            vals = [filtered.value(u, model, metric) for u in units]
            vals = [v for v in vals if v is not None]
            if not vals:
                aggregates[metric] = None
                diagnostics[f"{metric}_units"] = 0
                continue
            agg, clamped = aggregate_geomean(vals)
            aggregates[metric] = agg
            diagnostics[f"{metric}_units"] = len(vals)
            if clamped:
                diagnostics[f"{metric}_clamped"] = clamped
        if aggregates["mase"] is None and aggregates["crps"] is None:
            continue
        entries.append(
            {
                "model": model,
                "mase_norm": aggregates["mase"],
                "crps_norm": aggregates["crps"],
                "mase_rank": mase_ranks.get(model),
                "crps_rank": crps_ranks.get(model),
                "units": len(units),
                "diagnostics": diagnostics,
            }
        )
    entries.sort(key=lambda e: (e["mase_norm"] if e["mase_norm"] is not None else math.inf,
                                e["crps_norm"] if e["crps_norm"] is not None else math.inf,
                                e["model"]))
    return entries


def task_leaderboard(table: ScoreTable) -> dict:
    scores = normalize(table, "task")
    return {
        "level": "task",
        "query": None,
        "entries": _entries(scores),
        "excluded_units": {"/".join(u): r for u, r in scores.excluded_units.items()},
    }


def variate_leaderboard(table: ScoreTable) -> dict:
    scores = normalize(table, "variate")
    return {
        "level": "variate",
        "query": None,
        "entries": _entries(scores),
        "excluded_units": {"/".join(u): r for u, r in scores.excluded_units.items()},
    }


def dataset_leaderboard(table: ScoreTable) -> dict:
    """Per-dataset breakdown: geometric mean over each dataset's tasks."""
    scores = normalize(table, "task")
    datasets = sorted({u[0] for u in scores.units})
    per_dataset = {}
    for d in datasets:
        unit_filter = {u for u in scores.units if u[0] == d}
        per_dataset[d] = _entries(scores, unit_filter)
    return {"level": "dataset", "query": None, "datasets": per_dataset}


def pattern_leaderboard(table: ScoreTable, codes: dict, query: PatternQuery) -> dict:
    """Leaderboard over the variates retrieved by a masked pattern query."""
    retrieved = retrieve_by_pattern(codes, query)
    payload = {
        "level": "pattern",
        "query": {"mask": list(query.mask), "bits": [int(v) for v in query.values]},
        "retrieved": ["/".join(k) for k in retrieved],
    }
    if not retrieved:
        payload["entries"] = []
        payload["diagnostics"] = {"empty_retrieval": True}
        return payload
    scores = normalize(table, "variate")
    payload["entries"] = _entries(scores, set(retrieved))
    return payload
