"""Command-line interface.

Every pipeline subcommand accepts ``--config FILE`` (flat ``key = value``
lines, ``#`` comments) plus one flag per config field; flags win over the
file. Worker processes are set through ``PASTFUTURE_WORKERS``.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import types
import typing
from pathlib import Path

from .ingest import CorpusError, eligible_authors, validate_corpus
from .pacs_network import build_cooccurrence, modularity
from .pipeline import (
    PipelineConfig,
    StageError,
    build_reports,
    community_window,
    correlate_all,
    run,
    stage_communities,
    stage_ingest,
    stage_series,
    worker_count,
    write_bundle,
)
from .report import (
    read_authors,
    read_correlations,
    read_null_histograms,
    write_authors,
    write_correlations,
    write_null_histograms,
)
from .synth import SynthConfig, write_synthetic
from .windowing import ProductivityClass, read_series_csv, write_series_csv

log = logging.getLogger("pastfuture")


def _converter(tp):
    base = tp
    if typing.get_origin(tp) in (typing.Union, types.UnionType):
        base = next(a for a in typing.get_args(tp) if a is not type(None))
    if typing.get_origin(base) is list:
        return lambda s: [x.strip() for x in s.split(",") if x.strip()]
    if base is bool:
        return lambda s: s.strip().lower() in ("1", "true", "yes", "on")
    return base


def _hints(cls) -> dict[str, typing.Callable]:
    return {name: _converter(tp) for name, tp in typing.get_type_hints(cls).items()}


def read_config_file(path: str | Path, cls=PipelineConfig) -> dict:
    hints = _hints(cls)
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in hints:
            raise ValueError(f"{path}:{lineno}: unknown or malformed setting {line!r}")
        raw = raw.strip()
        values[key] = None if raw.lower() in ("", "none") else hints[key](raw)
    return values


def _add_fields(parser: argparse.ArgumentParser, cls) -> None:
    for name, conv in _hints(cls).items():
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=conv,
                            default=argparse.SUPPRESS)


def _config(args: argparse.Namespace) -> PipelineConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    names = {f.name for f in dataclasses.fields(PipelineConfig)}
    values.update({k: v for k, v in vars(args).items() if k in names})
    return PipelineConfig(**values)


def _out(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest_validate(args) -> int:
    cfg = _config(args)
    corpus = stage_ingest(cfg)
    report = validate_corpus(corpus)
    print(corpus)
    print(report.summary())
    for citing, cited in report.dangling_sample:
        print(f"  dangling: {citing} -> {cited}")
    for citing, cited in report.temporal_anomalies[:10]:
        print(f"  temporal: {citing} -> {cited}")
    n = len(eligible_authors(corpus, cfg.min_refs, cfg.min_cits))
    print(f"eligible authors (>{cfg.min_refs} refs, >{cfg.min_cits} citations): {n}")
    return 0


def cmd_communities(args) -> int:
    cfg = _config(args)
    corpus = stage_ingest(cfg)
    assignment = stage_communities(cfg, corpus)
    path = Path(args.out) if args.out else _out(cfg) / "communities.tsv"
    assignment.write_tsv(path)
    graph = build_cooccurrence(corpus, community_window(cfg, corpus))
    print(f"{len(assignment)} communities, modularity {modularity(graph, assignment):.4f} -> {path}")
    return 0


def cmd_series(args) -> int:
    cfg = _config(args)
    corpus = stage_ingest(cfg)
    assignment = stage_communities(cfg, corpus)
    series, classes = stage_series(cfg, corpus, assignment)
    out = _out(cfg)
    write_series_csv(series, out / "series.csv")
    write_authors(classes, out / "authors.csv", corpus)
    print(f"{len(series)} author series -> {out / 'series.csv'}")
    return 0


def cmd_correlate(args) -> int:
    cfg = _config(args)
    out = _out(cfg)
    series_path = Path(args.series) if args.series else out / "series.csv"
    try:
        series = read_series_csv(series_path)
        records, hists = correlate_all(series, cfg.metric_pairs(), cfg, worker_count())
    except (OSError, ValueError, KeyError) as exc:
        raise StageError("correlate", str(exc)) from exc
    write_correlations(records, out / "correlations.csv")
    write_null_histograms(hists, cfg.n_surrogates, out / "null_histograms.csv")
    print(f"{len(records)} correlation records -> {out / 'correlations.csv'}")
    return 0


def cmd_report(args) -> int:
    cfg = _config(args)
    out = _out(cfg)
    try:
        records = read_correlations(args.correlations or out / "correlations.csv")
        hists = read_null_histograms(args.null_histograms or out / "null_histograms.csv")
        authors = read_authors(args.authors or out / "authors.csv")
    except (OSError, ValueError, KeyError) as exc:
        raise StageError("report", str(exc)) from exc
    classes = []
    for label in "abcd":
        members = sorted(a for a, (_, q) in authors.items() if q == label)
        counts = [authors[a][0] for a in members]
        classes.append(ProductivityClass(label, tuple(members),
                                         min(counts, default=0), max(counts, default=0)))
    pairs = [p for p in cfg.pairs if any(r.pair == p for r in records)]
    reports = build_reports(records, hists, classes, pairs, cfg.bins)
    write_bundle(out, reports)
    print(f"{len(reports)} quartile reports -> {out}")
    return 0


def cmd_synth(args) -> int:
    names = {f.name for f in dataclasses.fields(SynthConfig)}
    values = read_config_file(args.config, SynthConfig) if args.config else {}
    values.update({k: v for k, v in vars(args).items() if k in names})
    cfg = SynthConfig(**values)
    try:
        corpus = write_synthetic(cfg, args.out, args.manifest)
    except (ValueError, OSError) as exc:
        raise StageError("synth", str(exc)) from exc
    print(f"{corpus} -> {args.out}")
    return 0


def cmd_run_all(args) -> int:
    cfg = _config(args)
    bundle = run(cfg)
    for rep in bundle.reports:
        q = "NA" if rep.q is None else f"{rep.q:.2f}"
        print(f"{rep.pair:28s} ({rep.label}) n={rep.n_defined:6d} "
              f"f+={rep.f_plus:.3f} f-={rep.f_minus:.3f} q={q}")
    print(f"bundle -> {bundle.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pastfuture", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def pipeline_cmd(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key = value config file")
        _add_fields(p, PipelineConfig)
        p.set_defaults(func=func)
        return p

    pipeline_cmd("ingest-validate", cmd_ingest_validate, "load a corpus and report anomalies")
    p = pipeline_cmd("communities", cmd_communities, "detect field-code communities")
    p.add_argument("--out", help="TSV path (default OUTPUT/communities.tsv)")
    pipeline_cmd("series", cmd_series, "build per-author past/future series")
    p = pipeline_cmd("correlate", cmd_correlate, "correlate series against shuffle surrogates")
    p.add_argument("--series", help="series CSV (default OUTPUT/series.csv)")
    p = pipeline_cmd("report", cmd_report, "aggregate correlations into quartile reports")
    p.add_argument("--correlations")
    p.add_argument("--null-histograms", dest="null_histograms")
    p.add_argument("--authors")
    pipeline_cmd("run-all", cmd_run_all, "run every stage end to end")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", required=True, help="corpus path (.jsonl or .jsonl.gz)")
    p.add_argument("--manifest", help="manifest path (default OUT.manifest.json)")
    _add_fields(p, SynthConfig)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (CorpusError, ValueError, TypeError) as exc:
        print(f"error: [config] {exc}", file=sys.stderr)
        return StageError("config", "").exit_code


if __name__ == "__main__":
    sys.exit(main())
