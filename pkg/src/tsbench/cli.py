"""Command-line pipeline: validate, screen, finalize, features, encode,
evaluate, leaderboard, serve.

Each stage reads the previous stage's artifacts from the output directory and
writes its own as plain JSON/CSV. Re-running a stage with unchanged inputs is
byte-identical. Failures exit nonzero with a machine-readable error report on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from tsbench import corpus as corpus_mod
from tsbench import evaluation, features
from tsbench import screening as screening_mod
from tsbench.corpus import CorpusError, load_corpus
from tsbench.evaluation import EvaluationError
from tsbench.screening import DecisionSet, ScreeningConfig, ScreeningError


class StageError(Exception):
    def __init__(self, message: str, kind: str = "stage-error"):
        super().__init__(message)
        self.kind = kind


def _dump_json(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageError(f"missing artifact {path}; run `tsbench {producer}` first", "stage-dependency")
    return path


def _write_corpus_dir(datasets, out: Path) -> None:
    manifest = []
    for ds in datasets:
        ds_dir = out / ds.dataset_id
        ds_dir.mkdir(parents=True, exist_ok=True)
        rel_paths = []
        for s in ds.series:
            rel = f"{ds.dataset_id}/{s.series_id}.csv"
            corpus_mod.write_series_csv(s, out / rel)
            rel_paths.append(rel)
        manifest.append(
            {
                "dataset_id": ds.dataset_id,
                "domain": ds.domain,
                "freq_code": ds.freq.code,
                "test_length": ds.test_length,
                "horizons": [{"label": h.label, "H": h.length} for h in ds.horizons],
                "series": rel_paths,
            }
        )
    _dump_json(manifest, out / "manifest.json")


def cmd_validate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    datasets = load_corpus(args.corpus)
    _write_corpus_dir(datasets, out / "corpus")

    summary = []
    for ds in datasets:
        summary.append(
            {
                "dataset_id": ds.dataset_id,
                "domain": ds.domain,
                "freq_code": ds.freq.code,
                "seasonal_period": ds.freq.seasonal_period,
                "n_series": len(ds.series),
                "variates": list(ds.variate_names),
                "test_length": ds.test_length,
                "horizons": [
                    {"label": h.label, "H": h.length, "windows": ds.test_length // h.length}
                    for h in ds.horizons
                ],
            }
        )
    _dump_json({"datasets": summary}, out / "validation.json")
    print(f"validated {len(datasets)} datasets -> {out / 'corpus'}")
    return 0


def _load_stage_corpus(out: Path, stage_dir: str, producer: str):
    manifest = _require(out / stage_dir / "manifest.json", producer)
    return load_corpus(manifest)


def cmd_screen(args) -> int:
    out = Path(args.out)
    datasets = _load_stage_corpus(out, "corpus", "validate")
    cfg = ScreeningConfig.from_json(args.config) if args.config else ScreeningConfig()
    reports = {}
    for ds in datasets:
        reports[ds.dataset_id] = screening_mod.run_screening(ds, cfg).to_json_dict()
    _dump_json({"datasets": reports}, out / "quality.json")
    _dump_json(cfg.to_json_dict(), out / "config.json")
    flagged = sum(
        1
        for rep in reports.values()
        for body in rep["series"].values()
        for rec in body["variates"].values()
        if not rec["predictable"]
    )
    print(f"screened {len(datasets)} datasets; {flagged} variates flagged -> {out / 'quality.json'}")
    return 0


def cmd_finalize(args) -> int:
    out = Path(args.out)
    datasets = _load_stage_corpus(out, "corpus", "validate")
    quality_path = _require(out / "quality.json", "screen")
    quality = json.loads(quality_path.read_text())["datasets"]
    decisions = DecisionSet.from_json(args.decisions) if args.decisions else DecisionSet(())

    final = []
    provenance = {}
    for ds in datasets:
        if ds.dataset_id not in quality:
            raise StageError(f"quality.json lacks dataset {ds.dataset_id!r}; re-run `tsbench screen`")
        report = screening_mod.QualityReport.from_json_dict(quality[ds.dataset_id])
        final_ds, prov = screening_mod.apply_decisions(ds, report, decisions)
        final.append(final_ds)
        provenance[ds.dataset_id] = prov
    _write_corpus_dir(final, out / "final")
    _dump_json(provenance, out / "provenance.json")
    print(f"finalized {len(final)} datasets -> {out / 'final'}")
    return 0


def cmd_features(args) -> int:
    out = Path(args.out)
    datasets = _load_stage_corpus(out, "final", "finalize")
    rows = []
    for ds in datasets:
        rows.extend(features.compute_dataset_features(ds))
    rows.sort(key=lambda r: r.key)
    features.write_feature_table(rows, out / "features.csv")
    print(f"extracted features for {len(rows)} variates -> {out / 'features.csv'}")
    return 0


def cmd_encode(args) -> int:
    out = Path(args.out)
    table_path = _require(out / "features.csv", "features")
    rows = features.read_feature_table(table_path)
    medians, codes = features.encode_patterns(rows)
    features.write_medians(medians, out / "medians.json")
    features.write_codes(codes, out / "codes.csv")
    features.write_feature_table(rows, table_path, codes=codes)  # adds the code column
    report = features.separability_report(rows)
    _dump_json(report.to_json_dict(), out / "separability.json")
    print(f"encoded {len(codes)} pattern codes -> {out / 'codes.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    datasets = _load_stage_corpus(out, "final", "finalize")
    if not args.forecasts:
        raise StageError("evaluate needs at least one --forecasts archive", "usage")

    predictions_dir = out / "predictions"
    predictions_dir.mkdir(parents=True, exist_ok=True)

    baseline = evaluation.snaive_archive(datasets)
    table = evaluation.score_all(baseline, datasets)
    evaluation.write_archive_csv(baseline, predictions_dir / f"{baseline.model_id}.csv")

    coverage = {}
    for path in args.forecasts:
        archive = evaluation.ingest_forecasts(path, datasets)
        if archive.model_id == evaluation.SNAIVE_MODEL_ID:
            raise StageError(f"model id {archive.model_id!r} is reserved for the internal baseline")
        coverage[archive.model_id] = {
            "missing": ["/".join(str(p) for p in key) for key in archive.coverage(datasets)],
            "rejected": [
                {"key": "/".join(str(p) for p in key), "reason": reason}
                for key, reason in archive.rejected
            ],
        }
        table = table.merge(evaluation.score_all(archive, datasets))
        evaluation.write_archive_csv(archive, predictions_dir / f"{archive.model_id}.csv")

    table.write_csv(out / "scores.csv")
    _dump_json(coverage, out / "coverage.json")
    print(f"scored {len(table.rows)} rows for models {table.models()} -> {out / 'scores.csv'}")
    return 0


def cmd_leaderboard(args) -> int:
    out = Path(args.out)
    scores_path = _require(out / "scores.csv", "evaluate")
    table = evaluation.ScoreTable.read_csv(scores_path)
    _dump_json(evaluation.task_leaderboard(table), out / "leaderboard_task.json")
    _dump_json(evaluation.variate_leaderboard(table), out / "leaderboard_variate.json")
    _dump_json(evaluation.dataset_leaderboard(table), out / "leaderboard_dataset.json")
    print(f"wrote leaderboards -> {out / 'leaderboard_task.json'}")
    return 0


def cmd_serve(args) -> int:
    from tsbench.server import run_server

    out = Path(args.out)
    if not out.exists():
        raise StageError(f"output directory {out} does not exist", "stage-dependency")
    run_server(out, args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load, rectify, and validate a corpus manifest")
    p.add_argument("--corpus", required=True, help="path to the corpus manifest JSON")
    p.add_argument("--out", required=True, help="output directory for artifacts")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("screen", help="run the quality pipeline on the validated corpus")
    p.add_argument("--config", help="screening config JSON (defaults otherwise)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("finalize", help="apply curator decisions and cleaned values")
    p.add_argument("--decisions", help="decisions JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_finalize)

    p = sub.add_parser("features", help="extract structural features per variate")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("encode", help="threshold features into pattern codes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("evaluate", help="score forecast archives against the baseline")
    p.add_argument("--forecasts", action="append", default=[], help="forecast archive CSV (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("leaderboard", help="emit task/variate/dataset leaderboards")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_leaderboard)

    p = sub.add_parser("serve", help="serve pipeline artifacts over JSON HTTP")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_serve)
    return parser


_KNOWN_ERRORS = (StageError, CorpusError, ScreeningError, EvaluationError, FileNotFoundError, ValueError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _KNOWN_ERRORS as exc:
        report = {
            "error": {
                "stage": args.command,
                "kind": getattr(exc, "kind", type(exc).__name__),
                "message": str(exc),
            }
        }
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
