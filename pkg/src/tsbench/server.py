"""JSON-over-HTTP serve mode for the review console.

Read endpoints expose pipeline artifacts from the output directory; the one
write endpoint appends curator decisions to a draft file (applied only by an
explicit `finalize` run). Leaderboard responses at task/variate/dataset level
are the artifact files' exact bytes; pattern-level queries are computed on
demand from the score table and pattern codes.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from tsbench import evaluation, features
from tsbench.corpus import load_corpus
from tsbench.screening import Decision, DecisionError


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class ArtifactStore:
    """Lazy, cached access to the artifacts under one output directory."""

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self._lock = threading.RLock()
        self._corpus_cache = {}
        self._archives = {}
        self._scores = None

    def _corpus(self, stage: str):
        with self._lock:
            if stage not in self._corpus_cache:
                manifest = self.out / stage / "manifest.json"
                if not manifest.exists():
                    raise ApiError(404, f"artifact {stage}/manifest.json not found; run the pipeline first")
                self._corpus_cache[stage] = load_corpus(manifest)
            return self._corpus_cache[stage]

    def corpus_any(self):
        for stage in ("final", "corpus"):
            if (self.out / stage / "manifest.json").exists():
                return stage, self._corpus(stage)
        raise ApiError(404, "no corpus artifacts found; run `tsbench validate` first")

    def dataset(self, dataset_id: str, stage: str | None = None):
        _stage, datasets = (stage, self._corpus(stage)) if stage else self.corpus_any()
        for ds in datasets:
            if ds.dataset_id == dataset_id:
                return ds
        raise ApiError(404, f"unknown dataset {dataset_id!r}")

    def quality(self) -> dict:
        path = self.out / "quality.json"
        if not path.exists():
            raise ApiError(404, "quality.json not found; run `tsbench screen` first")
        return json.loads(path.read_text())["datasets"]

    def leaderboard_bytes(self, level: str) -> bytes:
        path = self.out / f"leaderboard_{level}.json"
        if not path.exists():
            raise ApiError(404, f"leaderboard_{level}.json not found; run `tsbench leaderboard` first")
        return path.read_bytes()

    def scores(self):
        with self._lock:
            if self._scores is None:
                path = self.out / "scores.csv"
                if not path.exists():
                    raise ApiError(404, "scores.csv not found; run `tsbench evaluate` first")
                self._scores = evaluation.ScoreTable.read_csv(path)
            return self._scores

    def codes(self) -> dict:
        path = self.out / "codes.csv"
        if not path.exists():
            raise ApiError(404, "codes.csv not found; run `tsbench encode` first")
        return features.read_codes(path)

    def archive(self, model: str):
        with self._lock:
            if model not in self._archives:
                path = self.out / "predictions" / f"{model}.csv"
                if not path.exists():
                    raise ApiError(404, f"no stored predictions for model {model!r}")
                _stage, datasets = ("final", self._corpus("final"))
                self._archives[model] = evaluation.ingest_forecasts(path, datasets)
            return self._archives[model]

    def decisions_draft_path(self) -> Path:
        return self.out / "decisions_draft.json"

    def read_draft(self) -> dict:
        path = self.decisions_draft_path()
        if not path.exists():
            return {"decisions": []}
        return json.loads(path.read_text())

    def append_decision(self, record: dict) -> dict:
        with self._lock:
            draft = self.read_draft()
            draft["decisions"].append(record)
            self.decisions_draft_path().write_text(json.dumps(draft, indent=2, sort_keys=True) + "\n")
            return draft


def _json_bytes(payload) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()


def _nullify(values) -> list:
    return [None if np.isnan(v) else float(v) for v in values]


class Api:
    """Route table over an ArtifactStore; methods return (status, bytes)."""

    def __init__(self, store: ArtifactStore):
        self.store = store

    def datasets(self, _query) -> bytes:
        stage, datasets = self.store.corpus_any()
        out = []
        for ds in datasets:
            out.append(
                {
                    "dataset_id": ds.dataset_id,
                    "domain": ds.domain,
                    "freq_code": ds.freq.code,
                    "seasonal_period": ds.freq.seasonal_period,
                    "test_length": ds.test_length,
                    "variates": list(ds.variate_names),
                    "horizons": [
                        {"label": h.label, "H": h.length, "windows": ds.test_length // h.length}
                        for h in ds.horizons
                    ],
                    "series": [
                        {"series_id": s.series_id, "length": s.length, "start": s.start.isoformat()}
                        for s in ds.series
                    ],
                }
            )
        return _json_bytes({"stage": stage, "datasets": out})

    def dataset_quality(self, dataset_id: str) -> bytes:
        quality = self.store.quality()
        if dataset_id not in quality:
            raise ApiError(404, f"no quality report for dataset {dataset_id!r}")
        return _json_bytes(quality[dataset_id])

    def variate_values(self, dataset_id: str, series_id: str, variate: str, query) -> bytes:
        ds = self.store.dataset(dataset_id)
        series = next((s for s in ds.series if s.series_id == series_id), None)
        if series is None:
            raise ApiError(404, f"unknown series {series_id!r}")
        if variate not in series.variate_names:
            raise ApiError(404, f"unknown variate {variate!r}")
        j = series.variate_names.index(variate)
        lo, hi = 0, series.length
        span = query.get("span", [None])[0]
        if span:
            m = re.fullmatch(r"(\d+):(\d+)", span)
            if not m:
                raise ApiError(400, "span must look like start:end")
            lo, hi = int(m.group(1)), min(int(m.group(2)), series.length)
            if lo >= hi:
                raise ApiError(400, "empty span")
        stamps = series.timestamps[lo:hi]
        values = series.values[lo:hi, j]
        split = ds.test_start(series)
        return _json_bytes(
            {
                "dataset": dataset_id,
                "series": series_id,
                "variate": variate,
                "span": [lo, hi],
                "timestamps": [t.isoformat() for t in stamps],
                "values": _nullify(values),
                "missing": [bool(b) for b in np.isnan(values)],
                "regions": {"train": [0, split], "test": [split, series.length]},
            }
        )

    def features_table(self, _query) -> bytes:
        path = self.store.out / "features.csv"
        if not path.exists():
            raise ApiError(404, "features.csv not found; run `tsbench features` first")
        rows = features.read_feature_table(path)
        codes = {}
        if (self.store.out / "codes.csv").exists():
            codes = self.store.codes()
        medians = {}
        if (self.store.out / "medians.json").exists():
            medians = json.loads((self.store.out / "medians.json").read_text())
        payload = []
        for r in rows:
            v = r.vector
            rec = {
                "dataset_id": r.dataset_id,
                "series_id": r.series_id,
                "variate": r.variate,
                "trend_strength": v.trend_strength,
                "trend_linearity": v.trend_linearity,
                "trend_slope": v.trend_slope,
                "seasonality_strength": v.seasonality_strength,
                "seasonality_correlation": v.seasonality_correlation,
                "residual_acf1": v.residual_acf1,
                "complexity": v.complexity,
                "stationarity": v.stationarity,
                "window": v.window_descriptor,
                "degenerate": list(v.degenerate),
            }
            if r.key in codes:
                rec["code"] = codes[r.key].as_string()
            payload.append(rec)
        return _json_bytes({"rows": payload, "medians": medians})

    def leaderboard(self, query) -> bytes:
        level = query.get("level", ["task"])[0]
        if level in ("task", "variate", "dataset"):
            return self.store.leaderboard_bytes(level)
        if level == "pattern":
            mask = query.get("mask", [""])[0]
            bits = query.get("bits", [""])[0]
            try:
                pq = features.PatternQuery.from_strings(mask, bits)
            except ValueError as exc:
                raise ApiError(400, str(exc)) from exc
            board = evaluation.pattern_leaderboard(self.store.scores(), self.store.codes(), pq)
            return _json_bytes(board)
        raise ApiError(400, f"unknown leaderboard level {level!r}")

    def prediction(self, model: str, dataset_id: str, horizon: str, series_id: str, window: str) -> bytes:
        ds = self.store.dataset(dataset_id, stage="final")
        try:
            h = ds.horizon(horizon)
        except KeyError as exc:
            raise ApiError(404, str(exc)) from exc
        series = next((s for s in ds.series if s.series_id == series_id), None)
        if series is None:
            raise ApiError(404, f"unknown series {series_id!r}")
        try:
            k = int(window)
        except ValueError as exc:
            raise ApiError(400, "window must be an integer") from exc
        count = ds.test_length // h.length
        if not 1 <= k <= count:
            raise ApiError(404, f"window {k} out of range 1..{count}")

        if model == evaluation.SNAIVE_MODEL_ID and not (
            self.store.out / "predictions" / f"{model}.csv"
        ).exists():
            archive = evaluation.snaive_archive([ds])
        else:
            archive = self.store.archive(model)

        split = ds.test_start(series)
        start = split + (k - 1) * h.length
        quantiles = {}
        truth = {}
        for name in ds.variate_names:
            key = (dataset_id, horizon, series_id, k, name)
            if key not in archive.forecasts:
                raise ApiError(404, f"model {model!r} has no forecast for {key}")
            values = archive.forecasts[key].values
            quantiles[name] = {
                f"q{int(level * 100)}": [float(v) for v in values[:, i]]
                for i, level in enumerate(evaluation.QUANTILE_LEVELS)
            }
            truth[name] = _nullify(series.values[start : start + h.length, name_index(ds, name)])
        stamps = series.timestamps
        return _json_bytes(
            {
                "model": model,
                "dataset": dataset_id,
                "horizon": horizon,
                "series": series_id,
                "window": k,
                "timestamps": [t.isoformat() for t in stamps],
                "values": {
                    name: _nullify(series.values[:, j]) for j, name in enumerate(ds.variate_names)
                },
                "regions": {
                    "train": [0, split],
                    "test": [split, series.length],
                    "window": [start, start + h.length],
                },
                "quantiles": quantiles,
                "truth": truth,
            }
        )

    def decisions_get(self, _query) -> bytes:
        return _json_bytes(self.store.read_draft())

    def decisions_post(self, body: bytes) -> bytes:
        try:
            record = json.loads(body.decode() or "{}")
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"invalid JSON body: {exc}") from exc
        try:
            decision = Decision(
                dataset_id=record.get("dataset_id", ""),
                target=record.get("target", ""),
                id=record.get("id", ""),
                action=record.get("action", ""),
                trim_span=tuple(record["trim_span"]) if record.get("trim_span") else None,
            )
        except DecisionError as exc:
            raise ApiError(400, str(exc)) from exc
        ds = self.store.dataset(decision.dataset_id, stage="corpus")
        if decision.target == "series" and decision.id not in {s.series_id for s in ds.series}:
            raise ApiError(400, f"unknown series id {decision.id!r}")
        if decision.target == "variate" and decision.id not in ds.variate_names:
            raise ApiError(400, f"unknown variate id {decision.id!r}")
        draft = self.store.append_decision(decision.to_json_dict())
        return _json_bytes({"ok": True, "count": len(draft["decisions"])})


def name_index(ds, name: str) -> int:
    return ds.variate_names.index(name)


class Handler(BaseHTTPRequestHandler):
    api: Api = None  # set by run_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: bytes, content_type="application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(payload)

    def _error(self, status: int, message: str) -> None:
        self._send(status, _json_bytes({"error": {"status": status, "message": message}}))

    def do_OPTIONS(self):
        self._send(204, b"")

    def do_GET(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            query = parse_qs(url.query)
            api = self.api
            if parts == ["datasets"]:
                return self._send(200, api.datasets(query))
            if len(parts) == 3 and parts[0] == "datasets" and parts[2] == "quality":
                return self._send(200, api.dataset_quality(parts[1]))
            if len(parts) == 5 and parts[0] == "variates" and parts[4] == "values":
                return self._send(200, api.variate_values(parts[1], parts[2], parts[3], query))
            if parts == ["features"]:
                return self._send(200, api.features_table(query))
            if parts == ["leaderboard"]:
                return self._send(200, api.leaderboard(query))
            if len(parts) == 6 and parts[0] == "predictions":
                return self._send(200, api.prediction(*parts[1:]))
            if parts == ["decisions"]:
                return self._send(200, api.decisions_get(query))
            return self._error(404, f"no route for {url.path}")
        except ApiError as exc:
            return self._error(exc.status, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            return self._error(500, f"{type(exc).__name__}: {exc}")

    def do_POST(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if parts == ["decisions"]:
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length)
                return self._send(200, self.api.decisions_post(body))
            return self._error(404, f"no route for {url.path}")
        except ApiError as exc:
            return self._error(exc.status, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            return self._error(500, f"{type(exc).__name__}: {exc}")


def make_server(out_dir, port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (Handler,), {"api": Api(ArtifactStore(out_dir))})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def run_server(out_dir, port: int) -> None:
    server = make_server(out_dir, port)
    host, actual_port = server.server_address
    print(f"serving artifacts from {out_dir} at http://{host}:{actual_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
