"""Corpus loading, indexing and validation.

The corpus file holds one JSON object per line::

    {"id": "p1", "year": 1999, "authors": ["a1"], "pacs": ["05.45.Xt"], "refs": ["p0"]}

Files ending in ``.gz`` are read and written gzip-compressed.
"""

from __future__ import annotations

import gzip
import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)

DEFAULT_YEAR_RANGE = (1991, 2010)
_REQUIRED_KEYS = ("id", "year", "authors", "pacs", "refs")


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus input."""


@dataclass(frozen=True, slots=True)
class PaperRecord:
    paper_id: str
    year: int
    authors: tuple[str, ...]
    field_codes: frozenset[str]
    references: frozenset[str]

    def __post_init__(self) -> None:
        if self.paper_id in self.references:
            raise CorpusError(f"paper {self.paper_id!r} references itself")

    def to_json(self) -> dict:
        return {
            "id": self.paper_id,
            "year": self.year,
            "authors": list(self.authors),
            "pacs": sorted(self.field_codes),
            "refs": sorted(self.references),
        }


class Corpus:
    """Immutable, indexed collection of papers.

    ``author_index`` maps each author to the ids of their papers and
    ``citer_index`` maps each paper to the in-corpus papers that cite it.
    """

    def __init__(self, papers: Iterable[PaperRecord]):
        table: dict[str, PaperRecord] = {}
        for paper in papers:
            if paper.paper_id in table:
                raise CorpusError(f"duplicate paper id {paper.paper_id!r}")
            table[paper.paper_id] = paper

        authors: dict[str, set[str]] = defaultdict(set)
        citers: dict[str, set[str]] = defaultdict(set)
        for pid, paper in table.items():
            for author in paper.authors:
                authors[author].add(pid)
            for ref in paper.references:
                if ref in table:
                    citers[ref].add(pid)

        self._papers = MappingProxyType(table)
        self._authors = MappingProxyType({a: frozenset(p) for a, p in authors.items()})
        empty: frozenset[str] = frozenset()
        self._citers = MappingProxyType(
            {p: frozenset(citers[p]) if p in citers else empty for p in table})

    @property
    def papers(self) -> Mapping[str, PaperRecord]:
        return self._papers

    @property
    def author_index(self) -> Mapping[str, frozenset[str]]:
        return self._authors

    @property
    def citer_index(self) -> Mapping[str, frozenset[str]]:
        return self._citers

    def citers(self, paper_id: str) -> frozenset[str]:
        return self._citers.get(paper_id, frozenset())

    def papers_of(self, author: str) -> frozenset[str]:
        return self._authors.get(author, frozenset())

    def years(self) -> tuple[int, int]:
        ys = [p.year for p in self._papers.values()]
        return min(ys), max(ys)

    def __len__(self) -> int:
        return len(self._papers)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return dict(self._papers) == dict(other._papers)

    def __repr__(self) -> str:
        return f"Corpus({len(self)} papers, {len(self._authors)} authors)"


@dataclass
class LoadResult:
    corpus: Corpus
    dropped: int = 0


def _open_text(path: Path, mode: str):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, mode + "b"), encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def parse_record(obj: object, lineno: int | None = None) -> PaperRecord:
    where = f"line {lineno}: " if lineno is not None else ""
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}record is not an object")
    missing = [k for k in _REQUIRED_KEYS if k not in obj]
    if missing:
        raise CorpusError(f"{where}missing keys {missing}")
    pid, year = obj["id"], obj["year"]
    if not isinstance(pid, str) or not pid:
        raise CorpusError(f"{where}'id' must be a non-empty string")
    if not isinstance(year, int) or isinstance(year, bool):
        raise CorpusError(f"{where}'year' must be an integer")
    for key in ("authors", "pacs", "refs"):
        value = obj[key]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise CorpusError(f"{where}'{key}' must be an array of strings")
    authors = tuple(dict.fromkeys(obj["authors"]))
    try:
        return PaperRecord(pid, year, authors, frozenset(obj["pacs"]), frozenset(obj["refs"]))
    except CorpusError as exc:
        raise CorpusError(f"{where}{exc}") from None


def load_corpus(path: str | Path, year_range: tuple[int, int] = DEFAULT_YEAR_RANGE) -> LoadResult:
    """Read a corpus file, keeping papers whose year lies in ``year_range`` (inclusive)."""
    path = Path(path)
    lo, hi = year_range
    kept: list[PaperRecord] = []
    seen: set[str] = set()
    dropped = 0
    with _open_text(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            rec = parse_record(obj, lineno)
            if rec.paper_id in seen:
                raise CorpusError(f"line {lineno}: duplicate paper id {rec.paper_id!r}")
            seen.add(rec.paper_id)
            if lo <= rec.year <= hi:
                kept.append(rec)
            else:
                dropped += 1
    if not kept:
        raise CorpusError(f"{path}: no papers left after filtering to {lo}-{hi}")
    if dropped:
        logger.info("dropped %d records outside %d-%d", dropped, lo, hi)
    return LoadResult(Corpus(kept), dropped)


def write_corpus(corpus: Corpus | Iterable[PaperRecord], path: str | Path) -> None:
    """Write papers sorted by id so identical corpora give identical files."""
    papers = corpus.papers.values() if isinstance(corpus, Corpus) else corpus
    path = Path(path)
    with _open_text(path, "w") as fh:
        for paper in sorted(papers, key=lambda p: p.paper_id):
            fh.write(json.dumps(paper.to_json(), separators=(",", ":")))
            fh.write("\n")


def author_totals(corpus: Corpus) -> tuple[dict[str, int], dict[str, int]]:
    """Total listed references and received in-corpus citations per author."""
    refs: dict[str, int] = {}
    cits: dict[str, int] = {}
    for author, pids in corpus.author_index.items():
        refs[author] = sum(len(corpus.papers[p].references) for p in pids)
        cits[author] = sum(len(corpus.citers(p)) for p in pids)
    return refs, cits


def eligible_authors(corpus: Corpus, min_refs: int = 10, min_cits: int = 10) -> set[str]:
    """Authors with strictly more than ``min_refs`` references and ``min_cits`` citations.

    References to papers outside the corpus count toward the reference total.
    """
    if min_refs < 0 or min_cits < 0:
        raise ValueError("thresholds must be non-negative")
    refs, cits = author_totals(corpus)
    return {a for a in refs if refs[a] > min_refs and cits[a] > min_cits}


@dataclass
class ValidationReport:
    dangling_count: int = 0
    dangling_sample: list[tuple[str, str]] = field(default_factory=list)
    empty_codes: list[str] = field(default_factory=list)
    temporal_anomalies: list[tuple[str, str]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (self.dangling_count or self.empty_codes or self.temporal_anomalies)

    def summary(self) -> str:
        return (
            f"dangling references: {self.dangling_count}\n"
            f"papers without field codes: {len(self.empty_codes)}\n"
            f"temporal anomalies: {len(self.temporal_anomalies)}"
        )


def validate_corpus(corpus: Corpus, sample_size: int = 10) -> ValidationReport:
    report = ValidationReport()
    papers = corpus.papers
    for pid in sorted(papers):
        paper = papers[pid]
        if not paper.field_codes:
            report.empty_codes.append(pid)
        for ref in sorted(paper.references):
            cited = papers.get(ref)
            if cited is None:
                report.dangling_count += 1
                if len(report.dangling_sample) < sample_size:
                    report.dangling_sample.append((pid, ref))
            elif cited.year > paper.year:
                report.temporal_anomalies.append((pid, ref))
    return report
