"""End-to-end orchestration: corpus -> communities -> series -> correlations -> reports."""

from __future__ import annotations

import dataclasses
import json
import logging
import multiprocessing
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .ingest import Corpus, eligible_authors, load_corpus
from .pacs_network import CommunityAssignment, build_cooccurrence, detect_communities, modularity
from .report import (
    pair_slug,
    render_histogram,
    write_authors,
    write_correlations,
    write_null_histograms,
    write_quartile_csv,
    write_reports_jsonl,
    write_summary,
)
from .stats import (
    DEFAULT_PAIRS,
    CorrelationRecord,
    QuartileReport,
    aggregate_quartile,
    correlate_series,
    pair_label,
    parse_pair,
)
from .windowing import AuthorSeries, ProductivityClass, SeriesBuilder, pivot_years, productivity_quartiles, write_series_csv

logger = logging.getLogger(__name__)

WORKERS_ENV = "PASTFUTURE_WORKERS"
STAGES = ("config", "ingest", "communities", "series", "correlate", "report", "synth")


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage

    @property
    def exit_code(self) -> int:
        return 10 + STAGES.index(self.stage)


@dataclass
class PipelineConfig:
    corpus: str = ""
    year_first: int = 1991
    year_last: int = 2010
    community_first: int | None = None
    community_last: int | None = None
    communities_file: str | None = None
    resolution: float = 1.0
    pivot_first: int = 1995
    pivot_last: int = 2010
    step: int = 1
    past_len: int = 5
    future_len: int = 3
    min_refs: int = 10
    min_cits: int = 10
    n_surrogates: int = 10_000
    alpha: float = 0.05
    bins: int = 40
    min_points: int = 5
    shuffle: str = "both"
    ties: str = "ge"
    pairs: list[str] = field(default_factory=lambda: [pair_label(p) for p in DEFAULT_PAIRS])
    seed: int = 0
    output: str = "out"

    def metric_pairs(self) -> list[tuple[str, str]]:
        return [parse_pair(label) for label in self.pairs]

    def validate(self) -> None:
        if not self.corpus:
            raise ValueError("corpus path is required")
        if self.year_first > self.year_last:
            raise ValueError("empty corpus year range")
        if self.n_surrogates < 1 or self.bins < 2 or self.min_points < 2:
            raise ValueError("n_surrogates >= 1, bins >= 2 and min_points >= 2 required")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.past_len < 1 or self.future_len < 0 or self.step < 1:
            raise ValueError("past_len >= 1, future_len >= 0, step >= 1 required")
        if self.shuffle not in ("both", "one") or self.ties not in ("ge", "gt"):
            raise ValueError("shuffle must be both|one and ties ge|gt")
        from .windowing import METRICS
        for past, future in self.metric_pairs():
            if past not in METRICS or future not in METRICS:
                raise ValueError(f"unknown metric in pair {past}->{future}")
        pivot_years(self.pivot_first, self.pivot_last, self.step)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise StageError("config", f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def _stage(name: str):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except (ValueError, OSError, KeyError) as exc:
                raise StageError(name, str(exc)) from exc
        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner
    return wrap


@_stage("ingest")
def stage_ingest(cfg: PipelineConfig) -> Corpus:
    result = load_corpus(cfg.corpus, (cfg.year_first, cfg.year_last))
    logger.info("loaded %s (%d dropped)", result.corpus, result.dropped)
    return result.corpus


def community_window(cfg: PipelineConfig, corpus: Corpus) -> tuple[int, int]:
    last = cfg.community_last if cfg.community_last is not None else corpus.years()[1]
    first = cfg.community_first if cfg.community_first is not None else last - 4
    return first, last


@_stage("communities")
def stage_communities(cfg: PipelineConfig, corpus: Corpus) -> CommunityAssignment:
    if cfg.communities_file:
        return CommunityAssignment.read_tsv(cfg.communities_file)
    graph = build_cooccurrence(corpus, community_window(cfg, corpus))
    assignment = detect_communities(graph, cfg.resolution, cfg.seed)
    logger.info("%s, modularity %.4f", assignment, modularity(graph, assignment))
    return assignment


@_stage("series")
def stage_series(cfg: PipelineConfig, corpus: Corpus, assignment: CommunityAssignment,
                 ) -> tuple[list[AuthorSeries], list[ProductivityClass]]:
    authors = sorted(eligible_authors(corpus, cfg.min_refs, cfg.min_cits))
    classes = productivity_quartiles(authors, corpus)
    builder = SeriesBuilder(corpus, assignment, cfg.past_len, cfg.future_len)
    pivots = pivot_years(cfg.pivot_first, cfg.pivot_last, cfg.step)
    return [builder.build(a, pivots) for a in authors], classes


def _correlate_chunk(args) -> list:
    chunk, pairs, params = args
    out = []
    for author, values in chunk:
        out.extend(correlate_series(author, values, pairs, **params))
    return out


def correlate_all(series: Sequence[AuthorSeries], pairs: Sequence[tuple[str, str]],
                  cfg: PipelineConfig, workers: int = 1, chunk_size: int = 128,
                  ) -> tuple[list[CorrelationRecord], dict[tuple[str, str], np.ndarray]]:
    """Correlate every author and pair, optionally across worker processes.

    Each author draws from its own RNG stream, and results are sorted by
    (author, pair order), so the output does not depend on ``workers``.
    """
    params = dict(n_surr=cfg.n_surrogates, seed=cfg.seed, alpha=cfg.alpha, bins=cfg.bins,
                  min_points=cfg.min_points, shuffle=cfg.shuffle, ties=cfg.ties)
    needed = sorted({m for pair in pairs for m in pair})
    ordered = sorted(series, key=lambda s: s.author)
    payload = [(s.author, {m: s.values[m] for m in needed}) for s in ordered]
    tasks = [(payload[i:i + chunk_size], list(pairs), params)
             for i in range(0, len(payload), chunk_size)]
    if workers <= 1 or len(tasks) <= 1:
        results = [_correlate_chunk(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = list(pool.map(_correlate_chunk, tasks))
    records: list[CorrelationRecord] = []
    hists: dict[tuple[str, str], np.ndarray] = {}
    for chunk in results:
        for rec, hist in chunk:
            records.append(rec)
            if hist is not None:
                hists[(rec.author, rec.pair)] = hist
    return records, hists


@_stage("correlate")
def stage_correlate(cfg: PipelineConfig, series: Sequence[AuthorSeries], workers: int = 1):
    return correlate_all(series, cfg.metric_pairs(), cfg, workers)


def build_reports(records: Sequence[CorrelationRecord],
                  hists: dict[tuple[str, str], np.ndarray],
                  classes: Sequence[ProductivityClass], pairs: Sequence[str],
                  bins: int) -> list[QuartileReport]:
    by_pair: dict[str, list[CorrelationRecord]] = {p: [] for p in pairs}
    for rec in records:
        if rec.pair in by_pair:
            by_pair[rec.pair].append(rec)
    reports = []
    for pair in pairs:
        null = {a: h for (a, p), h in hists.items() if p == pair}
        for cls in classes:
            reports.append(aggregate_quartile(by_pair[pair], cls.authors, bins, null,
                                              label=cls.label, pair=pair,
                                              papers_range=(cls.min_papers, cls.max_papers)))
    return reports


@_stage("report")
def write_bundle(out_dir: Path, reports: Sequence[QuartileReport]) -> None:
    write_reports_jsonl(reports, out_dir / "reports.jsonl")
    write_summary(reports, out_dir / "summary.csv")
    for rep in reports:
        pair_dir = out_dir / pair_slug(rep.pair)
        pair_dir.mkdir(exist_ok=True)
        write_quartile_csv(rep, pair_dir / f"quartile_{rep.label}.csv")
        render_histogram(rep, pair_dir / f"quartile_{rep.label}.svg")


@dataclass
class ReportBundle:
    output: Path
    reports: list[QuartileReport]
    records: list[CorrelationRecord]
    classes: list[ProductivityClass]

    def report(self, pair: str, label: str) -> QuartileReport:
        for rep in self.reports:
            if rep.pair == pair and rep.label == label:
                return rep
        raise KeyError((pair, label))


def manifest(cfg: PipelineConfig, assignment: CommunityAssignment, n_authors: int) -> dict:
    return {
        "tool": "pastfuture",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "n_communities": len(assignment),
        "n_eligible_authors": n_authors,
    }


def run(cfg: PipelineConfig, workers: int | None = None) -> ReportBundle:
    """Run every stage and write the bundle to ``cfg.output``.

    Outputs are assembled in a temporary sibling directory and moved into
    place only when every stage succeeded.
    """
    try:
        cfg.validate()
    except ValueError as exc:
        raise StageError("config", str(exc)) from exc
    workers = worker_count() if workers is None else workers
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        corpus = stage_ingest(cfg)
        assignment = stage_communities(cfg, corpus)
        series, classes = stage_series(cfg, corpus, assignment)
        records, hists = stage_correlate(cfg, series, workers)
        reports = build_reports(records, hists, classes, cfg.pairs, cfg.bins)

        assignment.write_tsv(tmp / "communities.tsv")
        write_authors(classes, tmp / "authors.csv", corpus)
        write_series_csv(series, tmp / "series.csv")
        write_correlations(records, tmp / "correlations.csv")
        write_null_histograms(hists, cfg.n_surrogates, tmp / "null_histograms.csv")
        write_bundle(tmp, reports)
        (tmp / "manifest.json").write_text(
            json.dumps(manifest(cfg, assignment, len(series)), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return ReportBundle(out, reports, records, classes)
