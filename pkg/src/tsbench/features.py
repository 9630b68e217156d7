"""Structural feature extraction, binary pattern coding, and separability analysis.

Seven features per variate: trend strength and linearity, seasonality strength
and cycle correlation, remainder lag-1 autocorrelation, spectral entropy, and
an ADF stationarity indicator. Continuous features are thresholded at their
population medians to form a 7-bit pattern code used for retrieval; the
separability report quantifies how well each median split divides the
population.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from tsbench import stattests
from tsbench.corpus import DatasetSpec
from tsbench.stl import StlDecomposition, stl_decompose

FEATURE_NAMES = (
    "trend_strength",
    "trend_linearity",
    "seasonality_strength",
    "seasonality_correlation",
    "residual_acf1",
    "complexity",
    "stationarity",
)

# Test splits shorter than this are too small for stable features; fall back
# to the full variate.
MIN_FEATURE_WINDOW = 500


def _variance_ratio_strength(component: np.ndarray, remainder: np.ndarray):
    base = component + remainder
    var_base = float(np.var(base))
    if var_base <= 0.0:
        return 0.0, True
    value = max(0.0, 1.0 - float(np.var(remainder)) / var_base)
    return value, False


def trend_strength(dec: StlDecomposition):
    """Share of variance the trend explains beyond the remainder, in [0, 1]."""
    return _variance_ratio_strength(dec.trend, dec.remainder)


def seasonality_strength(dec: StlDecomposition):
    """Share of variance the seasonal component explains beyond the remainder."""
    return _variance_ratio_strength(dec.seasonal, dec.remainder)


def trend_linearity(dec: StlDecomposition):
    """Coefficient of the linear term in an orthonormal quadratic fit of the trend.

    Returns (signed beta1, |beta1|). Orthogonality makes the linear coefficient
    independent of curvature; a symmetric parabola yields exactly zero.
    """
    T = dec.trend
    n = T.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points for the quadratic fit")
    t = np.arange(1.0, n + 1.0)
    p1 = t - t.mean()
    p1 /= np.linalg.norm(p1)
    beta1 = float(np.dot(T, p1))
    return beta1, abs(beta1)


def seasonality_correlation(dec: StlDecomposition):
    """Mean pairwise Pearson correlation between full seasonal cycles.

    Cycles with zero variance contribute no pairs; with no valid pair the
    value degenerates to 0.
    """
    m = dec.period
    S = dec.seasonal
    k = S.shape[0] // m
    if m < 1 or k < 2:
        return 0.0, True
    cycles = S[: k * m].reshape(k, m)
    stds = cycles.std(axis=1)
    centered = cycles - cycles.mean(axis=1, keepdims=True)
    total, pairs = 0.0, 0
    for i in range(k):
        if stds[i] == 0.0:
            continue
        for j in range(i + 1, k):
            if stds[j] == 0.0:
                continue
            r = float(np.dot(centered[i], centered[j]) / (m * stds[i] * stds[j]))
            total += r
            pairs += 1
    if pairs == 0:
        return 0.0, True
    return total / pairs, False


def residual_acf1(dec: StlDecomposition):
    """First-order autocorrelation of the remainder component."""
    R = dec.remainder
    c = R - R.mean()
    denom = float(np.dot(c, c))
    if denom <= 0.0:
        return 0.0, True
    return float(np.dot(c[1:], c[:-1])) / denom, False


def spectral_entropy(x):
    """Normalized entropy of the periodogram of the mean-removed series, in [0, 1].

    Invariant under positive rescaling; near 0 for a concentrated spectrum,
    near 1 for noise-like series.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 16:
        raise ValueError("need at least 16 observations for spectral entropy")
    power = np.abs(np.fft.rfft(x - x.mean())[1:]) ** 2
    total = float(power.sum())
    if total <= 0.0:
        return 0.0, True
    p = power / total
    p = p[p > 0]
    entropy = float(-(p * np.log(p)).sum())
    return float(entropy / np.log(power.shape[0])), False


def adf_stationarity(x):
    """ADF stationarity indicator: (F7, p_value, degenerate)."""
    try:
        _tau, p, _lags = stattests.adf_test(x)
    except stattests.DegenerateSeriesError:
        return 0, None, True
    return int(p < 0.05), p, False


@dataclass(frozen=True)
class FeatureVector:
    """The seven structural features of one variate plus extraction metadata."""

    trend_strength: float
    trend_linearity: float  # |beta1|, thresholded for the pattern code
    trend_slope: float  # signed beta1, reported for direction
    seasonality_strength: float
    seasonality_correlation: float
    residual_acf1: float
    complexity: float
    stationarity: int
    adf_pvalue: float | None
    window_descriptor: str  # "test-split" | "full-variate"
    degenerate: tuple = ()

    def continuous(self) -> tuple:
        """The six continuous features in pattern-bit order."""
        return (
            self.trend_strength,
            self.trend_linearity,
            self.seasonality_strength,
            self.seasonality_correlation,
            self.residual_acf1,
            self.complexity,
        )

    def validate_ranges(self) -> None:
        f1, _f2, f3, f4, f5, f6 = self.continuous()
        assert 0.0 <= f1 <= 1.0 and 0.0 <= f3 <= 1.0 and 0.0 <= f6 <= 1.0
        assert -1.0 <= f4 <= 1.0 + 1e-12 and -1.0 - 1e-12 <= f5 <= 1.0 + 1e-12
        assert self.stationarity in (0, 1)


def compute_feature_vector(x, seasonal_period: int, test_length: int) -> FeatureVector:
    """Extract all features from one variate.

    Uses the trailing test split when it has at least 500 points, the full
    variate otherwise. Missing cells are forward/backward filled; a fully
    missing variate is an error (it should have been screened out).
    """
    x = np.asarray(x, dtype=np.float64)
    if np.isnan(x).all():
        raise ValueError("variate is fully missing; screen it out before feature extraction")
    if test_length >= MIN_FEATURE_WINDOW and test_length <= x.shape[0]:
        window = x[-test_length:]
        descriptor = "test-split"
    else:
        window = x
        descriptor = "full-variate"
    window = pd.Series(window).ffill().bfill().to_numpy(dtype=np.float64)

    dec = stl_decompose(window, seasonal_period)
    degenerate = []

    f1, deg = trend_strength(dec)
    if deg:
        degenerate.append("trend_strength")
    beta1, f2 = trend_linearity(dec)
    f3, deg = seasonality_strength(dec)
    if deg:
        degenerate.append("seasonality_strength")
    f4, deg = seasonality_correlation(dec)
    if deg:
        degenerate.append("seasonality_correlation")
    f5, deg = residual_acf1(dec)
    if deg:
        degenerate.append("residual_acf1")
    f6, deg = spectral_entropy(window)
    if deg:
        degenerate.append("complexity")
    f7, p_adf, deg = adf_stationarity(window)
    if deg:
        degenerate.append("stationarity")

    return FeatureVector(
        trend_strength=f1,
        trend_linearity=f2,
        trend_slope=beta1,
        seasonality_strength=f3,
        seasonality_correlation=f4,
        residual_acf1=f5,
        complexity=f6,
        stationarity=f7,
        adf_pvalue=p_adf,
        window_descriptor=descriptor,
        degenerate=tuple(degenerate),
    )


@dataclass(frozen=True)
class FeatureRow:
    dataset_id: str
    series_id: str
    variate: str
    vector: FeatureVector

    @property
    def key(self) -> tuple:
        return (self.dataset_id, self.series_id, self.variate)


def compute_dataset_features(dataset: DatasetSpec) -> list:
    """Feature rows for every variate of every series of a finalized dataset."""
    rows = []
    for s in dataset.series:
        for j, name in enumerate(s.variate_names):
            fv = compute_feature_vector(s.values[:, j], s.freq.seasonal_period, dataset.test_length)
            rows.append(FeatureRow(dataset.dataset_id, s.series_id, name, fv))
    return rows


@dataclass(frozen=True)
class PatternCode:
    """7 bits ordered as FEATURE_NAMES; continuous bits mean strictly above median."""

    bits: tuple

    def __post_init__(self):
        if len(self.bits) != 7 or any(b not in (0, 1) for b in self.bits):
            raise ValueError("pattern code needs exactly 7 binary entries")

    def as_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_string(cls, s: str) -> "PatternCode":
        return cls(tuple(int(ch) for ch in s))


@dataclass(frozen=True)
class PatternQuery:
    """Masked bit constraints: values matter only where mask is set."""

    mask: tuple
    values: tuple

    def __post_init__(self):
        if len(self.mask) != 7 or len(self.values) != 7:
            raise ValueError("mask and values need 7 entries each")

    def matches(self, code: PatternCode) -> bool:
        return all((not m) or (v == b) for m, v, b in zip(self.mask, self.values, code.bits))

    @classmethod
    def from_strings(cls, mask: str, bits: str) -> "PatternQuery":
        """Parse e.g. mask="F3,F7", bits="1,0" (or positional "??1???0")."""
        m = [False] * 7
        v = [False] * 7
        names = [f"F{i}" for i in range(1, 8)]
        parts = [p.strip() for p in mask.split(",") if p.strip()]
        vals = [p.strip() for p in bits.split(",") if p.strip()]
        if len(parts) != len(vals):
            raise ValueError("mask and bits must list the same number of entries")
        for name, val in zip(parts, vals):
            if name not in names:
                raise ValueError(f"unknown feature name {name!r}; use F1..F7")
            if val not in ("0", "1"):
                raise ValueError(f"bit value must be 0 or 1, got {val!r}")
            idx = names.index(name)
            m[idx] = True
            v[idx] = val == "1"
        return cls(tuple(m), tuple(v))


def encode_patterns(rows) -> tuple:
    """Threshold continuous features at their population medians.

    Returns (medians, codes) where medians maps the six continuous feature
    names to the global threshold and codes maps each row key to its
    PatternCode. Bit k is 1 iff the feature strictly exceeds the median;
    stationarity passes through untouched.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("need at least one feature vector")
    matrix = np.array([r.vector.continuous() for r in rows], dtype=np.float64)
    medians = np.median(matrix, axis=0)
    codes = {}
    for r, values in zip(rows, matrix):
        bits = tuple(int(v > m) for v, m in zip(values, medians)) + (int(r.vector.stationarity),)
        codes[r.key] = PatternCode(bits)
    med_map = {name: float(m) for name, m in zip(FEATURE_NAMES[:6], medians)}
    return med_map, codes


def fisher_and_cohen(group1, group2):
    """Fisher score and Cohen's d of two samples (sample variances).

    Returns (fisher, d); None values when the pooled variance vanishes.
    """
    g1 = np.asarray(group1, dtype=np.float64)
    g2 = np.asarray(group2, dtype=np.float64)
    n1, n2 = g1.shape[0], g2.shape[0]
    mu1, mu2 = float(g1.mean()), float(g2.mean())
    v1 = float(g1.var(ddof=1)) if n1 > 1 else 0.0
    v2 = float(g2.var(ddof=1)) if n2 > 1 else 0.0
    if v1 + v2 <= 0.0:
        return None, None
    fisher = (mu1 - mu2) ** 2 / (v1 + v2)
    pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2) if n1 + n2 > 2 else 0.0
    d = (mu1 - mu2) / np.sqrt(pooled) if pooled > 0 else None
    return fisher, d


@dataclass(frozen=True)
class SeparabilityReport:
    """Per-feature separation metrics of the median split plus feature correlations."""

    fisher: dict
    cohens_d: dict
    mann_whitney_p: dict
    correlation: np.ndarray
    flagged: tuple

    def to_json_dict(self) -> dict:
        return {
            "fisher": self.fisher,
            "cohens_d": self.cohens_d,
            "mann_whitney_p": self.mann_whitney_p,
            "correlation": [[float(v) for v in row] for row in self.correlation],
            "flagged": list(self.flagged),
        }


def separability_report(rows) -> SeparabilityReport:
    """Quantify how strongly each feature's median split separates the population.

    The split assigns values strictly above the median to group 1. Features
    whose split leaves a group empty (or with zero pooled variance) are
    flagged and reported as None.
    """
    rows = list(rows)
    matrix = np.array(
        [list(r.vector.continuous()) + [float(r.vector.stationarity)] for r in rows],
        dtype=np.float64,
    )
    fisher, cohens, mw = {}, {}, {}
    flagged = []
    for k, name in enumerate(FEATURE_NAMES):
        col = matrix[:, k]
        med = np.median(col)
        g1, g2 = col[col > med], col[col <= med]
        if g1.size == 0 or g2.size == 0:
            fisher[name] = cohens[name] = mw[name] = None
            flagged.append(name)
            continue
        f, d = fisher_and_cohen(g1, g2)
        if f is None:
            flagged.append(name)
            fisher[name] = cohens[name] = mw[name] = None
            continue
        fisher[name] = f
        cohens[name] = d
        _u, p = stattests.mann_whitney_u(g1, g2)
        mw[name] = p

    corr = np.eye(7)
    stds = matrix.std(axis=0)
    centered = matrix - matrix.mean(axis=0)
    for i in range(7):
        for j in range(i + 1, 7):
            if stds[i] == 0.0 or stds[j] == 0.0:
                corr[i, j] = corr[j, i] = 0.0
                if f"corr:{FEATURE_NAMES[i]}~{FEATURE_NAMES[j]}" not in flagged:
                    flagged.append(f"corr:{FEATURE_NAMES[i]}~{FEATURE_NAMES[j]}")
                continue
            r = float((centered[:, i] * centered[:, j]).mean() / (stds[i] * stds[j]))
            corr[i, j] = corr[j, i] = r
    return SeparabilityReport(fisher, cohens, mw, corr, tuple(flagged))


_CSV_HEADER = [
    "dataset_id",
    "series_id",
    "variate",
    "trend_strength",
    "trend_linearity",
    "trend_slope",
    "seasonality_strength",
    "seasonality_correlation",
    "residual_acf1",
    "complexity",
    "stationarity",
    "adf_pvalue",
    "window",
    "degenerate",
]


def write_feature_table(rows, path, codes: dict | None = None) -> None:
    """Feature table CSV: one row per (dataset, series, variate).

    After pattern encoding the table gains a trailing ``code`` column with the
    7-bit string.
    """
    header = _CSV_HEADER + ["code"] if codes is not None else _CSV_HEADER
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            v = r.vector
            record = [
                r.dataset_id,
                r.series_id,
                r.variate,
                repr(float(v.trend_strength)),
                repr(float(v.trend_linearity)),
                repr(float(v.trend_slope)),
                repr(float(v.seasonality_strength)),
                repr(float(v.seasonality_correlation)),
                repr(float(v.residual_acf1)),
                repr(float(v.complexity)),
                int(v.stationarity),
                "" if v.adf_pvalue is None else repr(float(v.adf_pvalue)),
                v.window_descriptor,
                ";".join(v.degenerate),
            ]
            if codes is not None:
                record.append(codes[r.key].as_string())
            writer.writerow(record)


def read_feature_table(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            vector = FeatureVector(
                trend_strength=float(rec["trend_strength"]),
                trend_linearity=float(rec["trend_linearity"]),
                trend_slope=float(rec["trend_slope"]),
                seasonality_strength=float(rec["seasonality_strength"]),
                seasonality_correlation=float(rec["seasonality_correlation"]),
                residual_acf1=float(rec["residual_acf1"]),
                complexity=float(rec["complexity"]),
                stationarity=int(rec["stationarity"]),
                adf_pvalue=float(rec["adf_pvalue"]) if rec["adf_pvalue"] else None,
                window_descriptor=rec["window"],
                degenerate=tuple(d for d in rec["degenerate"].split(";") if d),
            )
            rows.append(FeatureRow(rec["dataset_id"], rec["series_id"], rec["variate"], vector))
    return rows


def write_codes(codes, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset_id", "series_id", "variate", "code"])
        for key in sorted(codes):
            writer.writerow([key[0], key[1], key[2], codes[key].as_string()])


def read_codes(path) -> dict:
    codes = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            codes[(rec["dataset_id"], rec["series_id"], rec["variate"])] = PatternCode.from_string(rec["code"])
    return codes


def write_medians(medians: dict, path) -> None:
    Path(path).write_text(json.dumps(medians, indent=2, sort_keys=True) + "\n")
