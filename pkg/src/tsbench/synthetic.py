"""Deterministic synthetic corpus and forecast archives.

Three small datasets exercise the main code paths: an hourly multivariate
pair (long test split, two horizons), a daily univariate trio (duplicated
series for cross-series flags, injected spikes, a gap), and a weekly
multivariate series with a constant variate destined for a curator drop and a
horizon shorter than the seasonal period. Two synthetic "models" accompany
them: a byte-exact seasonal-naive replay and a noise-corrupted oracle that
scores strictly worse than the baseline.

Run ``python -m tsbench.synthetic OUTDIR`` to materialize everything.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pandas as pd

from tsbench.corpus import enumerate_windows, load_corpus
from tsbench.evaluation import snaive_archive
from tsbench.metrics import QUANTILE_LEVELS
from tsbench.screening import DecisionSet, ScreeningConfig, apply_decisions, run_screening

SEED = 20240817

# Offsets of the nine quantile levels of a unit normal; keeps generated
# quantile tracks monotone.
_NORMAL_OFFSETS = (-1.2815515655446004, -0.8416212335729142, -0.5244005127080407,
                   -0.2533471031357997, 0.0, 0.2533471031357997,
                   0.5244005127080409, 0.8416212335729143, 1.2815515655446004)


def _write_csv(path: Path, index: pd.DatetimeIndex, columns: dict) -> None:
    names = list(columns)
    lines = ["timestamp," + ",".join(names)]
    for i, ts in enumerate(index):
        cells = [ts.isoformat()]
        for name in names:
            v = columns[name][i]
            cells.append("" if v is None or (isinstance(v, float) and np.isnan(v)) else repr(float(v)))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def make_demo_corpus(root) -> Path:
    """Write the synthetic corpus under ``root``; returns the manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)

    manifest = []

    # tides-hourly: 2 series x (level, flow), strong daily cycle plus drift.
    ds_dir = root / "tides-hourly"
    ds_dir.mkdir(exist_ok=True)
    n = 1800
    t = np.arange(n)
    for i, sid in enumerate(("station-a", "station-b")):
        phase = 0.7 * i
        level = 2.0 + 0.001 * t + np.sin(2 * np.pi * t / 24 + phase) + 0.1 * rng.normal(size=n)
        flow = 5.0 + 0.8 * np.cos(2 * np.pi * t / 24 + phase) + 0.3 * np.sin(2 * np.pi * t / 168) \
            + 0.1 * rng.normal(size=n)
        idx = pd.date_range("2024-03-01", periods=n, freq="h")
        _write_csv(ds_dir / f"{sid}.csv", idx, {"level": level, "flow": flow})
    manifest.append(
        {
            "dataset_id": "tides-hourly",
            "domain": "nature",
            "freq_code": "H",
            "test_length": 504,
            "horizons": [{"label": "short", "H": 24}, {"label": "medium", "H": 48}],
            "series": ["tides-hourly/station-a.csv", "tides-hourly/station-b.csv"],
        }
    )

    # meter-daily: 3 univariate series; two nearly duplicated (cross-series
    # flag), the third with spikes and a gap.
    ds_dir = root / "meter-daily"
    ds_dir.mkdir(exist_ok=True)
    n = 430
    t = np.arange(n)
    weekly = np.array([1.0, 0.9, 0.85, 0.9, 1.0, 1.4, 1.5])
    base = 10.0 + 0.005 * t + 2.0 * weekly[t % 7] + 0.15 * rng.normal(size=n)
    idx = pd.date_range("2023-06-01", periods=n, freq="D")
    _write_csv(ds_dir / "meter-01.csv", idx, {"demand": base})
    _write_csv(ds_dir / "meter-02.csv", idx, {"demand": base * 1.1 + 0.05 * rng.normal(size=n)})
    third = 12.0 + 2.0 * weekly[(t + 3) % 7] + 0.5 * rng.normal(size=n)
    third[60] += 40.0
    third[200] -= 35.0
    third[61] = np.nan  # a missing cell in the training span
    _write_csv(ds_dir / "meter-03.csv", idx, {"demand": third})
    manifest.append(
        {
            "dataset_id": "meter-daily",
            "domain": "energy",
            "freq_code": "D",
            "test_length": 84,
            "horizons": [{"label": "short", "H": 7}],
            "series": ["meter-daily/meter-01.csv", "meter-daily/meter-02.csv", "meter-daily/meter-03.csv"],
        }
    )

    # macro-weekly: one series with a constant variate (flagged, then dropped
    # by the bundled decisions) and a horizon below the seasonal period.
    ds_dir = root / "macro-weekly"
    ds_dir.mkdir(exist_ok=True)
    n = 520
    t = np.arange(n)
    activity = 100.0 + 0.05 * t + 6.0 * np.sin(2 * np.pi * t / 52) + 1.0 * rng.normal(size=n)
    index = 50.0 + 4.0 * np.cos(2 * np.pi * t / 52 + 1.2) + np.cumsum(0.12 * rng.normal(size=n))
    flatline = np.full(n, 3.0)
    idx = pd.date_range("2015-01-05", periods=n, freq="7D")
    _write_csv(ds_dir / "panel.csv", idx, {"activity": activity, "index": index, "flatline": flatline})
    manifest.append(
        {
            "dataset_id": "macro-weekly",
            "domain": "economics",
            "freq_code": "W",
            "test_length": 104,
            "horizons": [{"label": "short", "H": 13}],
            "series": ["macro-weekly/panel.csv"],
        }
    )

    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def make_demo_decisions(path) -> Path:
    """The bundled curator decision: drop the constant weekly variate."""
    path = Path(path)
    payload = {
        "decisions": [
            {"dataset_id": "macro-weekly", "target": "variate", "id": "flatline", "action": "drop"}
        ]
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def finalized_demo_corpus(manifest_path, decisions_path=None):
    """Load, screen, and finalize the demo corpus (what `evaluate` consumes)."""
    corpus = load_corpus(manifest_path)
    cfg = ScreeningConfig()
    decisions = DecisionSet.from_json(decisions_path) if decisions_path else DecisionSet(())
    final = []
    for ds in corpus:
        report = run_screening(ds, cfg)
        final_ds, _prov = apply_decisions(ds, report, decisions)
        final.append(final_ds)
    return final


def _archive_rows(model_id, corpus, forecast_fn):
    """Wide-format rows for every required key; forecast_fn returns an H x 9 matrix."""
    rows = []
    for ds in corpus:
        for h in ds.horizons:
            for w in enumerate_windows(ds, h.length):
                series = next(s for s in ds.series if s.series_id == w.series_id)
                start = ds.test_start(series) + w.start_offset
                for j, name in enumerate(ds.variate_names):
                    key = (ds.dataset_id, h.label, w.series_id, w.window_index, name)
                    values = forecast_fn(key, ds, series, j, start, h.length)
                    for step in range(1, h.length + 1):
                        rows.append(
                            [model_id, ds.dataset_id, h.label, series.series_id,
                             w.window_index, name, step]
                            + [repr(float(v)) for v in values[step - 1]]
                        )
    return rows


def _write_archive(path, rows) -> None:
    header = ["model", "dataset", "horizon", "series", "window", "variate", "step"] + [
        f"q{int(level * 100)}" for level in QUANTILE_LEVELS
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def make_demo_forecasts(final_corpus, out_dir) -> list:
    """Write the two synthetic model archives; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    baseline = snaive_archive(final_corpus)

    def replay(key, ds, series, j, start, horizon):
        # exact same forecasts the internal baseline produces
        return baseline.forecasts[key].values

    rng = np.random.default_rng(SEED + 1)
    scales = {}

    def noisy(key, ds, series, j, start, horizon):
        key = (ds.dataset_id, series.series_id, j)
        if key not in scales:
            col = series.values[:, j]
            scales[key] = 1.5 * float(np.nanstd(col))
        sigma = scales[key]
        truth = series.values[start : start + horizon, j]
        truth = pd.Series(truth).ffill().bfill().to_numpy()
        point = truth + sigma * rng.normal(size=horizon)
        return point[:, None] + sigma * np.asarray(_NORMAL_OFFSETS)[None, :]

    paths = []
    for model_id, fn in (("snaive-replay", replay), ("noisy-oracle", noisy)):
        path = out_dir / f"{model_id}.csv"
        _write_archive(path, _archive_rows(model_id, final_corpus, fn))
        paths.append(path)
    return paths


def make_demo(root) -> dict:
    """Materialize corpus, decisions, and forecast archives under ``root``."""
    root = Path(root)
    manifest = make_demo_corpus(root / "corpus")
    decisions = make_demo_decisions(root / "decisions.json")
    final = finalized_demo_corpus(manifest, decisions)
    forecasts = make_demo_forecasts(final, root / "forecasts")
    return {"manifest": manifest, "decisions": decisions, "forecasts": forecasts}


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "demo"
    artifacts = make_demo(target)
    for kind, value in artifacts.items():
        print(f"{kind}: {value}")
