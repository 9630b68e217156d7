"""Data model, ingestion, and rolling-window enumeration.

A corpus is a JSON manifest listing datasets; each dataset references CSV
series files (``timestamp,<variate...>`` with ISO-8601 timestamps and empty
cells for missing values). Loading rectifies every series onto its regular
frequency grid and validates the dataset invariants, after which all objects
are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd


class CorpusError(Exception):
    """Base class for corpus-layer failures."""


class UnsupportedFrequencyError(CorpusError):
    """No supported frequency code matches the observed sampling step."""


class EmptyTaskError(CorpusError):
    """Horizon exceeds the test length, leaving zero rolling windows."""


class CorpusLoadError(CorpusError):
    """Manifest or series file violates the corpus schema; names the offender."""


# Seasonal period m per frequency code (shared with the MASE periodicity s).
SEASONAL_PERIODS = {
    "5T": 288,
    "10T": 144,
    "15T": 96,
    "20T": 72,
    "30T": 48,
    "H": 24,
    "D": 7,
    "B": 5,
    "W": 52,
    "M": 12,
    "Q": 4,
}

# pandas offset alias used to materialize the grid. Weekly grids are anchored
# at the series start (plain 7-day step); B/M/Q use calendar rules.
_PANDAS_ALIASES = {
    "5T": "5min",
    "10T": "10min",
    "15T": "15min",
    "20T": "20min",
    "30T": "30min",
    "H": "h",
    "D": "D",
    "B": "B",
    "W": "7D",
    "M": "MS",
    "Q": "QS",
}

# Nominal step per code. Exact for fixed-step codes; for B/M/Q this is the
# modal calendar gap and grid arithmetic goes through pandas instead.
_NOMINAL_STEPS = {
    "5T": pd.Timedelta(minutes=5),
    "10T": pd.Timedelta(minutes=10),
    "15T": pd.Timedelta(minutes=15),
    "20T": pd.Timedelta(minutes=20),
    "30T": pd.Timedelta(minutes=30),
    "H": pd.Timedelta(hours=1),
    "D": pd.Timedelta(days=1),
    "B": pd.Timedelta(days=1),
    "W": pd.Timedelta(days=7),
    "M": pd.Timedelta(days=30),
    "Q": pd.Timedelta(days=91),
}

_FIXED_STEP_CODES = ("5T", "10T", "15T", "20T", "30T", "H", "D")


@dataclass(frozen=True)
class FrequencySpec:
    """A supported sampling frequency: code, nominal step, seasonal period."""

    code: str
    step: pd.Timedelta
    seasonal_period: int

    def __post_init__(self):
        if self.code not in SEASONAL_PERIODS:
            raise UnsupportedFrequencyError(f"unknown frequency code {self.code!r}")
        if self.step <= pd.Timedelta(0):
            raise ValueError("step must be strictly positive")

    @property
    def pandas_alias(self) -> str:
        return _PANDAS_ALIASES[self.code]


def frequency_spec(code: str) -> FrequencySpec:
    if code not in SEASONAL_PERIODS:
        raise UnsupportedFrequencyError(f"unknown frequency code {code!r}")
    return FrequencySpec(code, _NOMINAL_STEPS[code], SEASONAL_PERIODS[code])


def grid(start: pd.Timestamp, length: int, freq: FrequencySpec) -> pd.DatetimeIndex:
    """The regular timestamp grid of a series: ``length`` points from ``start``."""
    return pd.date_range(start, periods=length, freq=freq.pandas_alias)


def infer_frequency(timestamps) -> FrequencySpec:
    """Infer the frequency whose step equals the modal inter-timestamp delta.

    Ties between equally frequent deltas break toward the smaller step. A
    modal one-day delta resolves to business-day frequency only when no
    timestamp falls on a weekend and at least one Friday-to-Monday gap exists.
    """
    ts = pd.DatetimeIndex(timestamps)
    if len(ts) < 3:
        raise UnsupportedFrequencyError("need at least 3 timestamps to infer a frequency")
    deltas = np.diff(ts.asi8)
    if np.any(deltas <= 0):
        raise UnsupportedFrequencyError("timestamps must be strictly increasing")

    counts = Counter(deltas.tolist())
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    modal = pd.Timedelta(best[0], unit="ns")

    day = pd.Timedelta(days=1)
    for code in _FIXED_STEP_CODES:
        if modal == _NOMINAL_STEPS[code]:
            if code == "D":
                weekdays = ts.dayofweek
                if (weekdays < 5).all() and np.any(deltas == 3 * day.value):
                    return frequency_spec("B")
            return frequency_spec(code)
    if modal == pd.Timedelta(days=7):
        return frequency_spec("W")
    if pd.Timedelta(days=28) <= modal <= pd.Timedelta(days=31):
        return frequency_spec("M")
    if pd.Timedelta(days=90) <= modal <= pd.Timedelta(days=92):
        return frequency_spec("Q")
    raise UnsupportedFrequencyError(f"no supported frequency has step {modal}")


@dataclass(frozen=True)
class SeriesRecord:
    """A regular-grid series of D variates over L steps; missing cells are NaN."""

    series_id: str
    start: pd.Timestamp
    freq: FrequencySpec
    values: np.ndarray
    missing_mask: np.ndarray
    variate_names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.missing_mask, dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing_mask", mask)
        object.__setattr__(self, "variate_names", tuple(self.variate_names))
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"series {self.series_id!r}: values must be a non-empty LxD matrix")
        if mask.shape != values.shape:
            raise ValueError(f"series {self.series_id!r}: missing_mask shape mismatch")
        if len(self.variate_names) != values.shape[1]:
            raise ValueError(f"series {self.series_id!r}: variate_names length mismatch")
        if not np.array_equal(mask, np.isnan(values)):
            raise ValueError(f"series {self.series_id!r}: missing_mask must mark exactly the NaN cells")
        if grid(self.start, 1, self.freq)[0] != self.start:
            raise ValueError(f"series {self.series_id!r}: start {self.start} is off the {self.freq.code} grid")
        values.setflags(write=False)
        mask.setflags(write=False)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_variates(self) -> int:
        return self.values.shape[1]

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return grid(self.start, self.length, self.freq)

    def variate(self, name: str) -> np.ndarray:
        return self.values[:, self.variate_names.index(name)]


@dataclass(frozen=True)
class Horizon:
    label: str
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("horizon length must be positive")


@dataclass(frozen=True)
class DatasetSpec:
    """A dataset: homogeneous series, a shared test length, and 1-3 horizons."""

    dataset_id: str
    domain: str
    series: tuple
    test_length: int
    horizons: tuple

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))
        object.__setattr__(self, "horizons", tuple(self.horizons))
        if not self.series:
            raise ValueError(f"dataset {self.dataset_id!r}: needs at least one series")
        if not 1 <= len(self.horizons) <= 3:
            raise ValueError(f"dataset {self.dataset_id!r}: needs 1-3 horizons")
        labels = [h.label for h in self.horizons]
        if len(set(labels)) != len(labels):
            raise ValueError(f"dataset {self.dataset_id!r}: duplicate horizon labels")
        names = self.series[0].variate_names
        freq_code = self.series[0].freq.code
        for s in self.series:
            if s.variate_names != names:
                raise ValueError(
                    f"dataset {self.dataset_id!r}: series {s.series_id!r} variate names "
                    f"{list(s.variate_names)} differ from {list(names)}"
                )
            if s.freq.code != freq_code:
                raise ValueError(f"dataset {self.dataset_id!r}: series {s.series_id!r} frequency differs")
        min_len = min(s.length for s in self.series)
        if self.test_length >= min_len:
            raise ValueError(
                f"dataset {self.dataset_id!r}: test_length {self.test_length} must be "
                f"shorter than the shortest series ({min_len})"
            )
        if self.test_length < 1:
            raise ValueError(f"dataset {self.dataset_id!r}: test_length must be positive")
        for h in self.horizons:
            if h.length > self.test_length:
                raise ValueError(
                    f"dataset {self.dataset_id!r}: horizon {h.label!r} ({h.length}) exceeds "
                    f"test_length {self.test_length}"
                )

    @property
    def freq(self) -> FrequencySpec:
        return self.series[0].freq

    @property
    def variate_names(self) -> tuple:
        return self.series[0].variate_names

    def test_start(self, series: SeriesRecord) -> int:
        """Index of the first test-set step of ``series``."""
        return series.length - self.test_length

    def horizon(self, label: str) -> Horizon:
        for h in self.horizons:
            if h.label == label:
                return h
        raise KeyError(f"dataset {self.dataset_id!r} has no horizon {label!r}")


@dataclass(frozen=True)
class TestWindow:
    """One non-overlapping rolling window; offsets are relative to the test start."""

    series_id: str
    window_index: int  # 1-based
    start_offset: int  # (window_index - 1) * length
    length: int


def enumerate_windows(dataset: DatasetSpec, horizon: int) -> list:
    """All test windows of the task (dataset, horizon), in series order.

    Each series contributes exactly ``test_length // horizon`` contiguous
    disjoint windows; a remainder at the end of the test span is unused.
    """
    if horizon > dataset.test_length:
        raise EmptyTaskError(
            f"dataset {dataset.dataset_id!r}: horizon {horizon} exceeds test length {dataset.test_length}"
        )
    count = dataset.test_length // horizon
    windows = []
    for s in dataset.series:
        for k in range(1, count + 1):
            windows.append(TestWindow(s.series_id, k, (k - 1) * horizon, horizon))
    return windows


@dataclass(frozen=True)
class RectifyDiagnostics:
    """Audit log of a rectification pass."""

    collisions: tuple = field(default_factory=tuple)  # (raw_ts, kept_slot_ts)
    filled_slots: int = 0


def _snap_fixed(ts: pd.DatetimeIndex, alias: str) -> pd.DatetimeIndex:
    """Nearest grid point on an epoch-anchored fixed-step grid; ties snap earlier."""
    lower = ts.floor(alias)
    upper = lower + pd.tseries.frequencies.to_offset(alias)
    choose_upper = (upper - ts) < (ts - lower)
    return pd.DatetimeIndex(np.where(choose_upper, upper, lower))


def _snap_days(ts: pd.DatetimeIndex) -> pd.DatetimeIndex:
    return _snap_fixed(ts, "D")


def _snap_period_start(ts: pd.DatetimeIndex, alias: str) -> pd.DatetimeIndex:
    starts = ts.normalize().to_period("M" if alias == "MS" else "Q").to_timestamp()
    nxt = pd.DatetimeIndex(starts) + pd.tseries.frequencies.to_offset(alias)
    choose_next = (nxt - ts) < (ts - starts)
    return pd.DatetimeIndex(np.where(choose_next, nxt, starts))


def _snap(ts: pd.DatetimeIndex, freq: FrequencySpec) -> pd.DatetimeIndex:
    code = freq.code
    if code in _FIXED_STEP_CODES and code != "B":
        return _snap_fixed(ts, freq.pandas_alias)
    if code == "B":
        days = _snap_days(ts)
        dow = days.dayofweek
        adjusted = days.to_numpy().copy()
        adjusted[dow == 5] -= np.timedelta64(1, "D")
        adjusted[dow == 6] += np.timedelta64(1, "D")
        return pd.DatetimeIndex(adjusted)
    if code == "W":
        days = _snap_days(ts)
        anchor = days[0]
        offset = (days - anchor).days.to_numpy()
        weeks = (offset + 3) // 7  # nearest multiple of 7, halfway (3.5) snaps down
        return anchor + pd.to_timedelta(weeks * 7, unit="D")
    if code in ("M", "Q"):
        return _snap_period_start(ts, freq.pandas_alias)
    raise UnsupportedFrequencyError(code)


def rectify_timestamps(raw: pd.DataFrame, freq: FrequencySpec, series_id: str = "series"):
    """Snap raw rows to the frequency grid and fill gaps with missing entries.

    ``raw`` holds one timestamp index plus one column per variate, sorted by
    timestamp. When two rows snap to the same grid slot the first is kept and
    the collision is recorded. Returns ``(SeriesRecord, RectifyDiagnostics)``.

    Idempotent: rectifying an already-aligned series returns identical rows.
    """
    if raw.shape[0] == 0:
        raise CorpusLoadError(f"series {series_id!r}: no rows")
    ts = pd.DatetimeIndex(raw.index)
    if not ts.is_monotonic_increasing:
        raise CorpusLoadError(f"series {series_id!r}: rows must be sorted by timestamp")

    snapped = _snap(ts, freq)
    full = pd.date_range(snapped[0], snapped[-1], freq=freq.pandas_alias)

    slot_of = pd.Series(np.arange(len(full)), index=full)
    values = np.full((len(full), raw.shape[1]), np.nan)
    taken = np.zeros(len(full), dtype=bool)
    collisions = []
    raw_values = raw.to_numpy(dtype=np.float64)
    for i, t in enumerate(snapped):
        slot = int(slot_of[t])
        if taken[slot]:
            collisions.append((ts[i].isoformat(), t.isoformat()))
            continue
        values[slot] = raw_values[i]
        taken[slot] = True

    record = SeriesRecord(
        series_id=series_id,
        start=full[0],
        freq=freq,
        values=values,
        missing_mask=np.isnan(values),
        variate_names=tuple(str(c) for c in raw.columns),
    )
    diag = RectifyDiagnostics(collisions=tuple(collisions), filled_slots=int((~taken).sum()))
    return record, diag


def _read_series_csv(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:
        raise CorpusLoadError(f"{path}: cannot parse CSV ({exc})") from exc
    if frame.shape[1] < 2 or frame.columns[0] != "timestamp":
        raise CorpusLoadError(f"{path}: header must be 'timestamp,<variate...>'")
    try:
        ts = pd.DatetimeIndex(pd.to_datetime(frame["timestamp"], format="ISO8601"))
    except Exception as exc:
        raise CorpusLoadError(f"{path}: field 'timestamp': invalid ISO-8601 value ({exc})") from exc
    data = {}
    for col in frame.columns[1:]:
        cells = frame[col].str.strip()
        try:
            # float() is correctly rounded (pandas' fast parser can be 1 ulp off,
            # which would break byte-identical reruns)
            data[col] = np.array([float(c) if c else np.nan for c in cells], dtype=np.float64)
        except ValueError as exc:
            raise CorpusLoadError(f"{path}: field {col!r}: non-numeric cell ({exc})") from exc
    return pd.DataFrame(data, index=ts)


def _frequencies_compatible(declared: str, inferred: str) -> bool:
    return declared == inferred or {declared, inferred} == {"D", "B"}


def load_corpus(manifest_path) -> list:
    """Load and validate every dataset referenced by a corpus manifest."""
    manifest_path = Path(manifest_path)
    try:
        entries = json.loads(manifest_path.read_text())
    except FileNotFoundError:
        raise CorpusLoadError(f"{manifest_path}: manifest not found")
    except json.JSONDecodeError as exc:
        raise CorpusLoadError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if not isinstance(entries, list):
        raise CorpusLoadError(f"{manifest_path}: manifest must be a JSON array of datasets")

    base = manifest_path.parent
    datasets = []
    seen_ids = set()
    for entry in entries:
        for key in ("dataset_id", "domain", "freq_code", "test_length", "horizons", "series"):
            if key not in entry:
                raise CorpusLoadError(f"{manifest_path}: dataset entry missing field {key!r}")
        dataset_id = entry["dataset_id"]
        if dataset_id in seen_ids:
            raise CorpusLoadError(f"{manifest_path}: duplicate dataset_id {dataset_id!r}")
        seen_ids.add(dataset_id)
        freq = frequency_spec(entry["freq_code"])
        try:
            horizons = tuple(Horizon(h["label"], int(h["H"])) for h in entry["horizons"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusLoadError(f"dataset {dataset_id!r}: field 'horizons': {exc}") from exc

        records = []
        for rel in entry["series"]:
            path = base / rel
            if not path.exists():
                raise CorpusLoadError(f"dataset {dataset_id!r}: series file {path} does not exist")
            frame = _read_series_csv(path)
            if frame.shape[0] >= 3:
                inferred = infer_frequency(frame.index)
                if not _frequencies_compatible(freq.code, inferred.code):
                    raise CorpusLoadError(
                        f"dataset {dataset_id!r}: {path} field 'freq_code': declared "
                        f"{freq.code!r} but data looks {inferred.code!r}"
                    )
            record, _ = rectify_timestamps(frame, freq, series_id=path.stem)
            records.append(record)

        try:
            datasets.append(
                DatasetSpec(
                    dataset_id=dataset_id,
                    domain=entry["domain"],
                    series=tuple(records),
                    test_length=int(entry["test_length"]),
                    horizons=horizons,
                )
            )
        except ValueError as exc:
            raise CorpusLoadError(str(exc)) from exc
    return datasets


def write_series_csv(record: SeriesRecord, path) -> None:
    """Emit a series in the corpus CSV format (inverse of loading)."""
    path = Path(path)
    lines = ["timestamp," + ",".join(record.variate_names)]
    stamps = record.timestamps
    for i in range(record.length):
        cells = [stamps[i].isoformat()]
        for j in range(record.n_variates):
            v = record.values[i, j]
            cells.append("" if np.isnan(v) else repr(float(v)))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
