"""Field-code co-occurrence network and Louvain communities."""

from __future__ import annotations

import itertools
import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .ingest import Corpus

logger = logging.getLogger(__name__)

_MOVE_EPS = 1e-12


def truncate_code(code: str) -> str:
    """Keep the first two numeric levels of a PACS-style code.

    >>> truncate_code(" 89.75.Hc ")
    '89.75'
    """
    parts = code.strip().split(".")
    if len(parts) < 2 or not parts[0].isdigit() or not parts[1].isdigit():
        raise ValueError(f"field code {code!r} does not have two numeric levels")
    return f"{parts[0]}.{parts[1]}"


def truncated_codes(codes: Iterable[str]) -> set[str]:
    out = set()
    for code in codes:
        try:
            out.add(truncate_code(code))
        except ValueError:
            logger.debug("skipping field code %r", code)
    return out


@dataclass(frozen=True)
class FieldGraph:
    nodes: frozenset[str]
    edges: Mapping[tuple[str, str], int]

    def neighbors(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj

    def total_weight(self) -> float:
        return float(sum(self.edges.values()))


def build_cooccurrence(corpus: Corpus, years: tuple[int, int]) -> FieldGraph:
    """Link every pair of distinct truncated codes listed on the same paper.

    Edge weight is the number of papers in ``years`` (inclusive) co-listing the pair.
    """
    lo, hi = years
    if lo > hi:
        raise ValueError(f"empty year interval {years}")
    nodes: set[str] = set()
    edges: dict[tuple[str, str], int] = defaultdict(int)
    for paper in corpus.papers.values():
        if not lo <= paper.year <= hi:
            continue
        codes = sorted(truncated_codes(paper.field_codes))
        nodes.update(codes)
        for a, b in itertools.combinations(codes, 2):
            edges[(a, b)] += 1
    if not nodes:
        raise ValueError(f"no field codes on papers published {lo}-{hi}")
    return FieldGraph(frozenset(nodes), dict(sorted(edges.items())))


class CommunityAssignment:
    """Partition of codes into communities with ids ``0..k-1``.

    Ids are canonical: communities are numbered by their smallest code.
    """

    def __init__(self, groups: Iterable[Iterable[str]]):
        comms = [frozenset(g) for g in groups]
        comms = [c for c in comms if c]
        comms.sort(key=min)
        mapping: dict[str, int] = {}
        for cid, comm in enumerate(comms):
            for code in comm:
                if code in mapping:
                    raise ValueError(f"code {code!r} is in more than one community")
                mapping[code] = cid
        self.communities: list[frozenset[str]] = comms
        self.mapping: dict[str, int] = mapping

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, int]) -> "CommunityAssignment":
        groups: dict[int, set[str]] = defaultdict(set)
        for code, cid in mapping.items():
            groups[cid].add(code)
        return cls(groups.values())

    def __len__(self) -> int:
        return len(self.communities)

    def __contains__(self, code: str) -> bool:
        return code in self.mapping

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CommunityAssignment):
            return NotImplemented
        return self.mapping == other.mapping

    def __repr__(self) -> str:
        return f"CommunityAssignment({len(self.mapping)} codes, {len(self)} communities)"

    def write_tsv(self, path: str | Path) -> None:
        lines = [f"{code}\t{cid}\n" for code, cid in sorted(self.mapping.items())]
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def read_tsv(cls, path: str | Path) -> "CommunityAssignment":
        mapping = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                code, cid = line.split("\t")
                mapping[code.strip()] = int(cid)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'code<TAB>community_id'") from None
        return cls.from_mapping(mapping)


def modularity(graph: FieldGraph, assignment: CommunityAssignment, resolution: float = 1.0) -> float:
    """Weighted Newman modularity of ``assignment`` on ``graph``."""
    missing = graph.nodes - assignment.mapping.keys()
    if missing:
        raise ValueError(f"assignment misses {len(missing)} graph nodes")
    m = graph.total_weight()
    if m == 0:
        return 0.0
    inside: dict[int, float] = defaultdict(float)
    degree: dict[int, float] = defaultdict(float)
    for (a, b), w in graph.edges.items():
        ca, cb = assignment.mapping[a], assignment.mapping[b]
        degree[ca] += w
        degree[cb] += w
        if ca == cb:
            inside[ca] += w
    return sum(inside[c] / m - resolution * (degree[c] / (2 * m)) ** 2 for c in degree)


def _one_level(adj: list[dict[int, float]], degree: list[float], m2: float,
               resolution: float) -> tuple[list[int], bool]:
    """Local-move phase on an indexed graph; node order is visit order.

    Returns the community of each node and whether any node moved.
    """
    n = len(adj)
    comm = list(range(n))
    tot = list(degree)
    moved_any = False
    while True:
        moved = False
        for i in range(n):
            ci, ki = comm[i], degree[i]
            links: dict[int, float] = {}
            for j in sorted(adj[i]):
                if j != i:
                    links[comm[j]] = links.get(comm[j], 0.0) + adj[i][j]
            tot[ci] -= ki
            best, best_gain = ci, links.get(ci, 0.0) - resolution * tot[ci] * ki / m2
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * ki / m2
                if gain > best_gain + _MOVE_EPS or (
                    c < best and best != ci and abs(gain - best_gain) <= _MOVE_EPS
                ):
                    best, best_gain = c, gain
            tot[best] += ki
            if best != ci:
                comm[i] = best
                moved = True
        if not moved:
            return comm, moved_any
        moved_any = True


def louvain(nodes: Sequence[str], edges: Mapping[tuple[str, str], float],
            resolution: float = 1.0) -> list[set[str]]:
    """Weighted Louvain over ``nodes`` visited in the given order.

    Community ids follow visit order, so equal-gain moves go to the community
    of the earliest-visited node.
    """
    index = {code: i for i, code in enumerate(nodes)}
    adj: list[dict[int, float]] = [dict() for _ in nodes]
    for (a, b), w in edges.items():
        ia, ib = index[a], index[b]
        if ia == ib:
            continue
        adj[ia][ib] = adj[ia].get(ib, 0.0) + w
        adj[ib][ia] = adj[ib].get(ia, 0.0) + w
    members: list[list[str]] = [[code] for code in nodes]
    m2 = sum(sum(row.values()) for row in adj)
    if m2 == 0:
        return [set(g) for g in members]

    while True:
        degree = [sum(row.values()) + row.get(i, 0.0) for i, row in enumerate(adj)]
        comm, moved = _one_level(adj, degree, m2, resolution)
        if not moved:
            break
        relabel: dict[int, int] = {}
        for c in comm:
            relabel.setdefault(c, len(relabel))
        new_members: list[list[str]] = [[] for _ in relabel]
        new_adj: list[dict[int, float]] = [dict() for _ in relabel]
        for i, row in enumerate(adj):
            ci = relabel[comm[i]]
            new_members[ci].extend(members[i])
            for j, w in row.items():
                cj = relabel[comm[j]]
                # internal edges are seen from both ends; halved below
                if ci == cj:
                    new_adj[ci][ci] = new_adj[ci].get(ci, 0.0) + (w if i != j else 2 * w)
                else:
                    new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
        for i, row in enumerate(new_adj):
            if i in row:
                row[i] /= 2.0
        members, adj = new_members, new_adj
    return [set(g) for g in members]


def detect_communities(graph: FieldGraph, resolution: float = 1.0, seed: int = 0,
                       order: Sequence[str] | None = None) -> CommunityAssignment:
    """Partition ``graph`` with Louvain.

    The node visit order is a seeded shuffle of the sorted codes unless
    ``order`` is given explicitly.
    """
    if not graph.nodes:
        raise ValueError("cannot partition an empty graph")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if order is None:
        order = sorted(graph.nodes)
        random.Random(seed).shuffle(order)
    elif set(order) != graph.nodes or len(order) != len(graph.nodes):
        raise ValueError("order must list every graph node exactly once")
    return CommunityAssignment(louvain(list(order), graph.edges, resolution))
