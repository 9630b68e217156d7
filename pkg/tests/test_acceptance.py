"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest -s tests/test_acceptance.py -v`` to see the per-criterion
lines as they complete. Tolerances are pinned here and nowhere else.
"""

import json
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from tsbench.cli import main
from tsbench.evaluation import SNAIVE_MODEL_ID, ScoreTable, aggregate_geomean, normalize, retrieve_by_pattern, score_all, snaive_archive
from tsbench.features import (
    FeatureRow,
    FeatureVector,
    PatternCode,
    PatternQuery,
    compute_feature_vector,
    encode_patterns,
    fisher_and_cohen,
)
from tsbench.corpus import DatasetSpec, Horizon, SeriesRecord, enumerate_windows, frequency_spec
from tsbench.metrics import QuantileForecast, crps_value, mase_value, samples_to_quantiles, seasonal_naive
from tsbench.screening import ScreeningConfig, iqr_outlier_scan, ljung_box
from tsbench.stattests import adf_test, DegenerateSeriesError
from tsbench.stl import stl_decompose
from tsbench.synthetic import make_demo

GOLDEN_DIR = Path(__file__).parent / "golden"
LEADERBOARD_FILES = ("leaderboard_task.json", "leaderboard_variate.json", "leaderboard_dataset.json")


def _pass(name: str) -> None:
    print(f"\nACCEPTANCE PASS: {name}")


def brute_force_mase(y, yhat, s, context):
    h = len(y)
    num = sum(abs(y[i] - yhat[i]) for i in range(h)) / h
    if h > s:
        den = sum(abs(y[j] - y[j - s]) for j in range(s, h)) / (h - s)
    else:
        combined = list(context) + list(y)
        n = len(context)
        den = sum(abs(y[j] - combined[n + j - s]) for j in range(h)) / h
    return None if den == 0 else num / den


def brute_force_crps(y, qvalues, levels):
    total_abs = sum(abs(v) for v in y)
    if total_abs == 0:
        return None
    wqls = []
    for k, alpha in enumerate(levels):
        loss = 0.0
        for i in range(len(y)):
            q = qvalues[i][k]
            loss += (alpha - (1.0 if y[i] < q else 0.0)) * (y[i] - q)
        wqls.append(2.0 * loss / total_abs)
    return sum(wqls) / len(wqls)


def test_c01_metric_oracle_equivalence():
    levels = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    rng = np.random.default_rng(101)
    t0 = time.time()
    for _ in range(200):
        h = int(rng.integers(1, 25))
        d = int(rng.integers(1, 4))
        s = int(rng.integers(1, 30))
        ctx_len = int(rng.integers(s, s + 60))
        for _col in range(d):
            y = rng.normal(size=h) * 10
            yhat = y + rng.normal(size=h)
            context = rng.normal(size=ctx_len) * 10
            mine, _, _ = mase_value(y, yhat, s, context)
            oracle = brute_force_mase(list(y), list(yhat), s, list(context))
            if oracle is None:
                assert mine is None
            else:
                assert abs(mine - oracle) <= 1e-12 * abs(oracle)
            q = np.sort(rng.normal(size=(h, 9)) * 5, axis=1)
            mine_crps, _ = crps_value(y, QuantileForecast(q))
            oracle_crps = brute_force_crps(list(y), q.tolist(), levels)
            assert abs(mine_crps - oracle_crps) <= 1e-12 * abs(oracle_crps)
    elapsed = time.time() - t0
    assert elapsed < 10.0, f"metric oracle check took {elapsed:.1f}s"
    _pass(f"metric oracle equivalence (200 instances, {elapsed:.2f}s)")


def test_c02_geometric_mean_neutrality():
    agg, _ = aggregate_geomean([2.0, 0.5])
    assert abs(agg - 1.0) <= 1e-12
    _pass("geometric-mean neutrality on {2.0, 0.5}")


@pytest.fixture(scope="module")
def demo_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    artifacts = make_demo(root / "inputs")
    return root, artifacts


def _run_pipeline(root: Path, artifacts: dict, out_name: str) -> Path:
    out = root / out_name
    forecasts = []
    for p in artifacts["forecasts"]:
        forecasts += ["--forecasts", str(p)]
    for argv in (
        ["validate", "--corpus", str(artifacts["manifest"]), "--out", str(out)],
        ["screen", "--out", str(out)],
        ["finalize", "--decisions", str(artifacts["decisions"]), "--out", str(out)],
        ["features", "--out", str(out)],
        ["encode", "--out", str(out)],
        ["evaluate", "--out", str(out)] + forecasts,
        ["leaderboard", "--out", str(out)],
    ):
        assert main(argv) == 0, f"stage {argv[0]} failed"
    return out


def test_c03_baseline_self_normalization(demo_root):
    from tsbench.synthetic import finalized_demo_corpus

    root, artifacts = demo_root
    corpus = finalized_demo_corpus(artifacts["manifest"], artifacts["decisions"])
    table = score_all(snaive_archive(corpus), corpus)
    for unit in ("task", "variate"):
        scores = normalize(table, unit)
        assert scores.units, "no defined units in the synthetic corpus"
        for uid in scores.units:
            assert scores.value(uid, SNAIVE_MODEL_ID, "mase") == 1.0
            assert scores.value(uid, SNAIVE_MODEL_ID, "crps") == 1.0
    _pass("baseline self-normalization == 1.0 on every defined unit")


def test_c04_hand_value_checks():
    crps, _ = crps_value(np.array([2.0]), QuantileForecast(np.full((1, 9), 3.0)))
    assert abs(crps - 0.5) <= 1e-12
    mase, _, _ = mase_value([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 5.0], 1)
    assert abs(mase - 0.25) <= 1e-12
    qf = samples_to_quantiles(np.arange(1.0, 101.0)[None, :])
    assert abs(qf.values[0, 0] - 10.9) <= 1e-12
    _pass("hand-value checks (CRPS 0.5, MASE 0.25, quantile 10.9)")


def _random_variate(rng):
    n = int(rng.integers(256, 600))
    t = np.arange(n)
    kind = rng.integers(0, 5)
    base = {
        0: lambda: rng.normal(size=n),
        1: lambda: np.cumsum(rng.normal(size=n)),
        2: lambda: 0.01 * t + np.sin(2 * np.pi * t / 24) * rng.uniform(0.5, 3),
        3: lambda: rng.uniform(-5, 5) + rng.normal(size=n) * rng.uniform(0.01, 2),
        4: lambda: np.sin(2 * np.pi * t / 24) + 0.3 * rng.normal(size=n) + 0.005 * t,
    }[int(kind)]()
    return base + rng.uniform(-10, 10)


def test_c05_stl_feature_suite():
    t0 = time.time()
    rng = np.random.default_rng(202)

    x = np.linspace(0, 1, 1000) + 0.01 * rng.normal(size=1000)
    fv = compute_feature_vector(x, 24, len(x))
    assert fv.trend_strength >= 0.95

    x = np.sin(2 * np.pi * np.arange(2000) / 24) + 0.01 * rng.normal(size=2000)
    fv = compute_feature_vector(x, 24, len(x))
    assert fv.seasonality_strength >= 0.95

    from tsbench.features import spectral_entropy

    sine = np.sin(2 * np.pi * np.arange(2400) / 24)
    f6_sine, _ = spectral_entropy(sine)
    assert f6_sine <= 0.2
    f6_noise, _ = spectral_entropy(rng.normal(size=4096))
    assert f6_noise >= 0.9

    for _ in range(1000):
        x = _random_variate(rng)
        dec = stl_decompose(x, 24)
        assert np.all(((x - dec.trend) - dec.seasonal) - dec.remainder == 0.0)
        fv = compute_feature_vector(x, 24, len(x))
        fv.validate_ranges()
    elapsed = time.time() - t0
    assert elapsed < 60.0, f"feature suite took {elapsed:.1f}s"
    _pass(f"STL/feature suite (reconstruction, F1/F3/F6 bounds, 1000 range checks, {elapsed:.1f}s)")


def test_c06_screening_statistical_power():
    rng = np.random.default_rng(303)
    lags = [10, 20]

    iid_fired = 0
    for _ in range(500):
        pv = ljung_box(rng.normal(size=1000), lags)
        iid_fired += min(pv) > 0.05
    assert iid_fired / 500 >= 0.85

    ar_fired = 0
    for _ in range(500):
        e = rng.normal(size=1000)
        x = np.empty(1000)
        x[0] = e[0]
        for t in range(1, 1000):
            x[t] = 0.9 * x[t - 1] + e[t]
        pv = ljung_box(x, lags)
        ar_fired += min(pv) > 0.05
    assert ar_fired / 500 <= 0.02

    stationary_hits = 0
    walk_nonstat = 0
    for _ in range(200):
        try:
            _tau, p, _ = adf_test(rng.normal(size=500))
            stationary_hits += p < 0.05
        except DegenerateSeriesError:
            pass
        try:
            _tau, p, _ = adf_test(np.cumsum(rng.normal(size=500)))
            walk_nonstat += p >= 0.05
        except DegenerateSeriesError:
            walk_nonstat += 1
    assert stationary_hits / 200 >= 0.90
    assert walk_nonstat / 200 >= 0.90
    _pass(
        f"screening statistical power (white-noise {iid_fired / 500:.3f} vs {ar_fired / 500:.3f}; "
        f"ADF {stationary_hits / 200:.2f}/{walk_nonstat / 200:.2f})"
    )


def test_c07_iqr_filter_spike_detection():
    rng = np.random.default_rng(404)
    cfg = ScreeningConfig(k_ext=9.0)

    for carrier_kind in range(2):
        n = 3000
        t = np.arange(n)
        if carrier_kind == 0:
            x = 3 * np.sin(2 * np.pi * t / 24) + 0.05 * rng.normal(size=n)
        else:
            x = 0.01 * t + np.sin(2 * np.pi * t / 96) + 0.05 * rng.normal(size=n)

        clean_scan = iqr_outlier_scan(x.copy(), cfg, seasonal_period=24)
        positions = rng.choice(np.arange(100, n - 100, 120), size=12, replace=False)
        spiked = x.copy()
        for pos in positions:
            w = clean_scan.window
            half = (w - 1) // 2
            seg = x[pos - half : pos + half + 1]
            iqr = np.quantile(seg, 0.75) - np.quantile(seg, 0.25)
            spiked[pos] += 30.0 * iqr * (1 if rng.random() < 0.5 else -1)

        scan = iqr_outlier_scan(spiked, cfg, seasonal_period=24)
        detected = set(scan.extreme)
        for pos in positions:
            assert int(pos) in detected, f"spike at {pos} not detected"
            assert scan.cleaned[pos] != spiked[pos], f"spike at {pos} not imputed"

    clean = np.sin(2 * np.pi * np.arange(4000) / 24)
    scan = iqr_outlier_scan(clean, cfg, seasonal_period=24)
    assert len(scan.extreme) == 0
    _pass("IQR filter: 100% of 30x spikes imputed, clean sinusoid untouched")


def test_c08_rolling_protocol():
    for h, expected_w in ((16, 90), (96, 15)):
        rec = SeriesRecord(
            series_id="s",
            start=np.datetime64("2024-01-01", "ns"),
            freq=frequency_spec("15T"),
            values=np.arange(2000.0)[:, None],
            missing_mask=np.zeros((2000, 1), dtype=bool),
            variate_names=("v",),
        )
        ds = DatasetSpec("d", "nature", (rec,), 1440, (Horizon("h", h),))
        windows = enumerate_windows(ds, h)
        assert len(windows) == expected_w
        covered = set()
        for w in windows:
            assert w.start_offset == (w.window_index - 1) * h
            span = set(range(w.start_offset, w.start_offset + w.length))
            assert not (covered & span), "windows overlap"
            covered |= span
        assert max(covered) < ds.test_length
    _pass("rolling protocol (L_test=1440: H=16->W=90, H=96->W=15; disjoint, in-span)")


def test_c09_pattern_machinery():
    rng = np.random.default_rng(505)
    values = list(rng.permutation(1001).astype(float))
    rows = []
    for i, v in enumerate(values):
        fv = FeatureVector(
            trend_strength=v, trend_linearity=v, trend_slope=v,
            seasonality_strength=v, seasonality_correlation=0.0, residual_acf1=0.0,
            complexity=0.5, stationarity=0, adf_pvalue=None, window_descriptor="full-variate",
        )
        rows.append(FeatureRow("d", f"s{i}", "v", fv))
    _, codes = encode_patterns(rows)
    assert sum(c.bits[0] for c in codes.values()) == 500

    big = {
        ("d", f"s{i}", "v"): PatternCode(tuple(int(b) for b in rng.integers(0, 2, size=7)))
        for i in range(10_000)
    }
    for _ in range(100):
        mask = tuple(bool(b) for b in rng.integers(0, 2, size=7))
        vals = tuple(bool(b) for b in rng.integers(0, 2, size=7))
        q = PatternQuery(mask, vals)
        got = retrieve_by_pattern(big, q)
        brute = sorted(
            k for k, c in big.items()
            if all((not m) or (v == bit) for m, v, bit in zip(mask, vals, c.bits))
        )
        assert got == brute
    _pass("pattern machinery (1001-value median split == 500; retrieval == linear scan)")


def test_c10_separability_analytics():
    fisher, d = fisher_and_cohen(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1.0, 2.0, 3.0, 4.0]))
    assert fisher == 0.0 and d == 0.0
    rng = np.random.default_rng(606)
    d_val = fisher_and_cohen(rng.normal(3.0, 1.0, size=1000), rng.normal(0.0, 1.0, size=1000))[1]
    assert 2.8 <= d_val <= 3.2
    _pass(f"separability analytics (identical -> 0; N(3,1) vs N(0,1) d={d_val:.3f})")


def test_c11_end_to_end_determinism(demo_root):
    root, artifacts = demo_root
    t0 = time.time()
    out_a = _run_pipeline(root, artifacts, "run-a")
    out_b = _run_pipeline(root, artifacts, "run-b")
    elapsed = time.time() - t0

    for name in LEADERBOARD_FILES:
        bytes_a = (out_a / name).read_bytes()
        bytes_b = (out_b / name).read_bytes()
        assert bytes_a == bytes_b, f"{name} differs between identical runs"
        golden = GOLDEN_DIR / name
        assert golden.exists(), f"golden file {golden} missing"
        assert bytes_a == golden.read_bytes(), f"{name} differs from the golden file"

    board = json.loads((out_a / "leaderboard_task.json").read_text())
    entries = {e["model"]: e for e in board["entries"]}
    assert entries[SNAIVE_MODEL_ID]["mase_norm"] == 1.0
    assert entries["snaive-replay"]["mase_norm"] == 1.0
    assert entries["snaive-replay"]["crps_norm"] == 1.0
    assert entries["noisy-oracle"]["mase_norm"] > 1.0
    assert entries["noisy-oracle"]["crps_norm"] > 1.0
    assert elapsed < 60.0, f"end-to-end runs took {elapsed:.1f}s"
    _pass(f"end-to-end determinism (golden byte-identical; replay=1.0, corrupted>1.0; {elapsed:.1f}s)")
