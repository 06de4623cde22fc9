"""Past/future sliding windows and per-author metric time series."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diversity import (
    author_citation_weights,
    author_reference_weights,
    diversity_index,
    diversity_of_vector,
    normalize,
    weight_table,
)
from .ingest import Corpus
from .pacs_network import CommunityAssignment

PAST_METRICS = ("past_papers", "past_cits_per_paper", "past_ref_div", "past_cit_div")
FUTURE_METRICS = ("future_cits_per_paper", "future_cit_div")
METRICS = PAST_METRICS + FUTURE_METRICS

NA = "NA"


@dataclass(frozen=True)
class WindowSpec:
    """Past window ``[t - past_len, t)`` and future window ``[t, t + future_len)``."""

    t: int
    past_len: int = 5
    future_len: int = 3

    def __post_init__(self) -> None:
        if self.past_len < 1 or self.future_len < 0:
            raise ValueError("past_len must be >= 1 and future_len >= 0")

    @property
    def past(self) -> tuple[int, int]:
        return self.t - self.past_len, self.t

    @property
    def future(self) -> tuple[int, int]:
        return self.t, self.t + self.future_len

    def in_past(self, year: int) -> bool:
        return self.t - self.past_len <= year < self.t

    def in_future(self, year: int) -> bool:
        return self.t <= year < self.t + self.future_len


@dataclass
class AuthorSeries:
    author: str
    pivots: np.ndarray
    values: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, metric: str) -> np.ndarray:
        return self.values[metric]

    def __len__(self) -> int:
        return len(self.pivots)


def pivot_years(first: int, last: int, step: int = 1) -> list[int]:
    if step < 1:
        raise ValueError("step must be >= 1")
    if first > last:
        raise ValueError(f"empty pivot range {first}-{last}")
    return list(range(first, last + 1, step))


def _past_papers(author: str, spec: WindowSpec, corpus: Corpus) -> list[str]:
    return sorted(p for p in corpus.papers_of(author) if spec.in_past(corpus.papers[p].year))


def _diversity(dist) -> float:
    if not dist:
        return math.nan
    return diversity_index(normalize(dist)).value


def past_metrics(author: str, spec: WindowSpec, corpus: Corpus,
                 assignment: CommunityAssignment) -> tuple[int, float, float]:
    """(papers, within-window citations per paper, reference diversity) for the past window."""
    past = _past_papers(author, spec, corpus)
    if not past:
        return 0, math.nan, math.nan
    n_cits = sum(
        1 for p in past for c in corpus.citers(p) if spec.in_past(corpus.papers[c].year)
    )
    ref_div = _diversity(author_reference_weights(author, past, corpus, assignment))
    return len(past), n_cits / len(past), ref_div


def _links(author: str, spec: WindowSpec, corpus: Corpus, future: bool) -> list[tuple[str, str]]:
    inside = spec.in_future if future else spec.in_past
    return [
        (c, p)
        for p in _past_papers(author, spec, corpus)
        for c in corpus.citers(p)
        if inside(corpus.papers[c].year)
    ]


def past_citation_diversity(author: str, spec: WindowSpec, corpus: Corpus,
                            assignment: CommunityAssignment) -> float:
    past = _past_papers(author, spec, corpus)
    links = _links(author, spec, corpus, future=False)
    if not links:
        return math.nan
    return _diversity(author_citation_weights(author, past, links, corpus, assignment))


def future_metrics(author: str, spec: WindowSpec, corpus: Corpus,
                   assignment: CommunityAssignment) -> tuple[float, float]:
    """(future citations per past paper, citation diversity of those citations)."""
    past = _past_papers(author, spec, corpus)
    if not past or spec.future_len == 0:
        return math.nan, math.nan
    links = _links(author, spec, corpus, future=True)
    if not links:
        return 0.0, math.nan
    dist = author_citation_weights(author, past, links, corpus, assignment)
    return len(links) / len(past), _diversity(dist)


class SeriesBuilder:
    """Vectorized series construction sharing one paper-weight cache.

    Produces the same values as :func:`past_metrics` / :func:`future_metrics`
    evaluated pivot by pivot.
    """

    def __init__(self, corpus: Corpus, assignment: CommunityAssignment,
                 past_len: int = 5, future_len: int = 3):
        WindowSpec(0, past_len, future_len)
        self.corpus = corpus
        self.assignment = assignment
        self.past_len = past_len
        self.future_len = future_len
        self._k = len(assignment)
        self._zero = np.zeros(self._k)
        self._weights: dict[str, np.ndarray] = {}

    def _vectors(self, ids: Sequence[str]) -> np.ndarray:
        missing = [p for p in ids if p not in self._weights]
        if missing:
            found = weight_table(self.corpus, self.assignment, missing)
            for p in missing:
                self._weights[p] = found.get(p, self._zero)
        if not ids:
            return np.zeros((0, self._k))
        return np.array([self._weights[p] for p in ids])

    def build(self, author: str, pivots: Sequence[int]) -> AuthorSeries:
        corpus = self.corpus
        papers = sorted(corpus.papers_of(author))
        years = np.array([corpus.papers[p].year for p in papers], dtype=np.int64)
        ref_vec = np.zeros((len(papers), self._k))
        cited_year, citer_year, citers = [], [], []
        for i, pid in enumerate(papers):
            refs = sorted(r for r in corpus.papers[pid].references if r in corpus.papers)
            if refs:
                ref_vec[i] = self._vectors(refs).sum(axis=0)
            for c in sorted(corpus.citers(pid)):
                cited_year.append(years[i])
                citer_year.append(corpus.papers[c].year)
                citers.append(c)
        cited_year = np.array(cited_year, dtype=np.int64)
        citer_year = np.array(citer_year, dtype=np.int64)
        cite_vec = self._vectors(citers)

        n = len(pivots)
        out = {m: np.full(n, math.nan) for m in METRICS}
        for k, t in enumerate(pivots):
            lo, hi = t - self.past_len, t + self.future_len
            n_past = int(np.count_nonzero((years >= lo) & (years < t)))
            out["past_papers"][k] = n_past
            if n_past == 0:
                continue
            out["past_ref_div"][k] = diversity_of_vector(ref_vec[(years >= lo) & (years < t)].sum(axis=0))
            from_past = (cited_year >= lo) & (cited_year < t)
            in_past = from_past & (citer_year >= lo) & (citer_year < t)
            out["past_cits_per_paper"][k] = np.count_nonzero(in_past) / n_past
            out["past_cit_div"][k] = diversity_of_vector(cite_vec[in_past].sum(axis=0))
            if self.future_len == 0:
                continue
            in_future = from_past & (citer_year >= t) & (citer_year < hi)
            out["future_cits_per_paper"][k] = np.count_nonzero(in_future) / n_past
            out["future_cit_div"][k] = diversity_of_vector(cite_vec[in_future].sum(axis=0))
        return AuthorSeries(author, np.asarray(pivots, dtype=np.int64), out)


def build_series(author: str, corpus: Corpus, assignment: CommunityAssignment,
                 pivot_range: tuple[int, int] = (1995, 2010), step: int = 1,
                 past_len: int = 5, future_len: int = 3) -> AuthorSeries:
    pivots = pivot_years(*pivot_range, step)
    return SeriesBuilder(corpus, assignment, past_len, future_len).build(author, pivots)


@dataclass(frozen=True)
class ProductivityClass:
    label: str
    authors: tuple[str, ...]
    min_papers: int
    max_papers: int


def productivity_quartiles(authors: Iterable[str], corpus: Corpus) -> list[ProductivityClass]:
    """Split authors into four equal-size classes by total paper count.

    Ties are ordered by author id; earlier classes take the remainder.
    """
    ranked = sorted((len(corpus.papers_of(a)), a) for a in set(authors))
    if len(ranked) < 4:
        raise ValueError(f"need at least 4 authors for quartiles, got {len(ranked)}")
    classes = []
    for label, chunk in zip("abcd", np.array_split(np.arange(len(ranked)), 4)):
        members = [ranked[i] for i in chunk]
        classes.append(ProductivityClass(
            label, tuple(a for _, a in members), members[0][0], members[-1][0]))
    return classes


def _fmt(x: float) -> str:
    return NA if math.isnan(x) else repr(float(x))


def write_series_csv(series: Iterable[AuthorSeries], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["author_id", "pivot", *METRICS])
        for s in series:
            for k, t in enumerate(s.pivots):
                row = [s.author, int(t), int(s["past_papers"][k])]
                row += [_fmt(s[m][k]) for m in METRICS[1:]]
                writer.writerow(row)


def read_series_csv(path: str | Path) -> list[AuthorSeries]:
    rows: dict[str, list[dict[str, str]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["author_id"], []).append(row)
    out = []
    for author in sorted(rows):
        rs = sorted(rows[author], key=lambda r: int(r["pivot"]))
        values = {
            m: np.array([math.nan if r[m] == NA else float(r[m]) for r in rs]) for m in METRICS
        }
        out.append(AuthorSeries(author, np.array([int(r["pivot"]) for r in rs]), values))
    return out
