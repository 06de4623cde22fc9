"""Community weight distributions and true-diversity indexes.

A paper spreads one unit of weight over communities in proportion to how
many of its (truncated) field codes fall in each. An author's citation
profile sums the weights of the papers citing them; the reference profile
sums the weights of the papers they reference. Diversity is the exponential
of the Shannon entropy of the normalized profile.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .ingest import Corpus, PaperRecord
from .pacs_network import CommunityAssignment, truncated_codes

logger = logging.getLogger(__name__)


@dataclass
class CommunityDistribution:
    weights: dict[int, float] = field(default_factory=dict)
    normalized: bool = False

    def __bool__(self) -> bool:
        return any(w > 0 for w in self.weights.values())

    def total(self) -> float:
        return math.fsum(self.weights.values())

    def __add__(self, other: "CommunityDistribution") -> "CommunityDistribution":
        out = dict(self.weights)
        for c, w in other.weights.items():
            out[c] = out.get(c, 0.0) + w
        return CommunityDistribution(out)


@dataclass(frozen=True)
class DiversityValue:
    value: float | None
    support: int

    @property
    def defined(self) -> bool:
        return self.value is not None


def _code_communities(paper: PaperRecord, assignment: CommunityAssignment) -> tuple[list[int], int]:
    codes = truncated_codes(paper.field_codes)
    assigned = [assignment.mapping[c] for c in codes if c in assignment.mapping]
    return assigned, len(codes) - len(assigned)


def paper_weights(paper: PaperRecord, assignment: CommunityAssignment) -> CommunityDistribution:
    """Share of the paper's assignable codes falling in each community.

    Codes missing from ``assignment`` are dropped before normalizing. A paper
    with no assignable code yields an empty distribution.
    """
    assigned, dropped = _code_communities(paper, assignment)
    if dropped:
        logger.warning("paper %s: %d field code(s) not in the community assignment",
                       paper.paper_id, dropped)
    if not assigned:
        return CommunityDistribution(normalized=True)
    counts: dict[int, int] = defaultdict(int)
    for c in assigned:
        counts[c] += 1
    n = len(assigned)
    return CommunityDistribution({c: k / n for c, k in sorted(counts.items())}, normalized=True)


def author_citation_weights(author: str, past_papers: Iterable[str],
                            citing_links: Iterable[tuple[str, str]],
                            corpus: Corpus, assignment: CommunityAssignment) -> CommunityDistribution:
    """Sum citing-paper weights over (citing, cited) links into ``past_papers``.

    Each distinct link is one citation unit, so a paper citing two of the
    author's papers contributes its weight twice.
    """
    past = set(past_papers)
    per_citer: dict[str, int] = defaultdict(int)
    for citing, cited in set(citing_links):
        if cited not in past or author not in corpus.papers[cited].authors:
            raise ValueError(f"link ({citing}, {cited}) does not cite a past paper of {author}")
        per_citer[citing] += 1
    out: dict[int, float] = defaultdict(float)
    for citing in sorted(per_citer):
        for c, w in paper_weights(corpus.papers[citing], assignment).weights.items():
            out[c] += per_citer[citing] * w
    return CommunityDistribution(dict(out))


def author_reference_weights(author: str, past_papers: Iterable[str], corpus: Corpus,
                             assignment: CommunityAssignment) -> CommunityDistribution:
    """Sum referenced-paper weights over the references of ``past_papers``.

    A paper referenced by several of the author's papers counts once per
    referencing paper. Out-of-corpus references are skipped.
    """
    n_ref: dict[str, int] = defaultdict(int)
    for pid in past_papers:
        paper = corpus.papers[pid]
        if author not in paper.authors:
            raise ValueError(f"paper {pid} is not authored by {author}")
        for ref in paper.references:
            if ref in corpus.papers:
                n_ref[ref] += 1
    out: dict[int, float] = defaultdict(float)
    for ref in sorted(n_ref):
        for c, w in paper_weights(corpus.papers[ref], assignment).weights.items():
            out[c] += n_ref[ref] * w
    return CommunityDistribution(dict(out))


def normalize(dist: CommunityDistribution) -> CommunityDistribution:
    total = dist.total()
    if total <= 0:
        raise ValueError("cannot normalize a distribution with zero total weight")
    return CommunityDistribution({c: w / total for c, w in dist.weights.items()}, normalized=True)


def entropy_exponential(p: Iterable[float]) -> tuple[float, int]:
    """exp(-sum p ln p) over positive entries, clamped to [1, support]."""
    positive = [x for x in p if x > 0]
    support = len(positive)
    if support == 0:
        raise ValueError("empty distribution")
    h = -math.fsum(x * math.log(x) for x in positive)
    return min(max(math.exp(h), 1.0), float(support)), support


def diversity_index(dist: CommunityDistribution) -> DiversityValue:
    if not dist:
        return DiversityValue(None, 0)
    if not dist.normalized:
        raise ValueError("diversity_index expects a normalized distribution")
    value, support = entropy_exponential(dist.weights.values())
    return DiversityValue(value, support)


def diversity_of_vector(weights: np.ndarray) -> float:
    """Diversity of a raw weight vector; NaN when the vector carries no weight."""
    total = float(weights.sum())
    if total <= 0:
        return math.nan
    return entropy_exponential((weights / total).tolist())[0]


def weight_vector(dist: CommunityDistribution, n_communities: int) -> np.ndarray:
    vec = np.zeros(n_communities)
    for c, w in dist.weights.items():
        vec[c] = w
    return vec


def weight_table(corpus: Corpus, assignment: CommunityAssignment,
                 paper_ids: Iterable[str] | None = None) -> Mapping[str, np.ndarray]:
    """Dense paper weight vectors, skipping papers with no assignable code."""
    k = len(assignment)
    ids = corpus.papers.keys() if paper_ids is None else paper_ids
    table: dict[str, np.ndarray] = {}
    dropped = 0
    for pid in ids:
        assigned, n_drop = _code_communities(corpus.papers[pid], assignment)
        dropped += n_drop
        if not assigned:
            continue
        vec = np.bincount(assigned, minlength=k).astype(float)
        table[pid] = vec / len(assigned)
    if dropped:
        logger.info("%d field code(s) outside the community assignment were dropped", dropped)
    return table
