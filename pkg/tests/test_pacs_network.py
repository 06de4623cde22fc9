import itertools
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import paper
from oracles import brute_force_best_partition
from pastfuture.ingest import Corpus
from pastfuture.pacs_network import (CommunityAssignment, FieldGraph, build_cooccurrence,
                                     detect_communities, modularity, truncate_code)


@pytest.mark.parametrize("raw, want", [("05.45.Xt", "05.45"), ("03.67", "03.67"),
                                       (" 89.75.Hc ", "89.75")])
def test_truncate_examples(raw, want):
    assert truncate_code(raw) == want


@pytest.mark.parametrize("raw", ["05", "", "ab.cd.Ef", "05.-", ".45.Xt"])
def test_truncate_rejects(raw):
    with pytest.raises(ValueError):
        truncate_code(raw)


def test_same_truncation_single_node():
    g = build_cooccurrence(Corpus([paper("P", 2000, codes=("05.45.Xt", "05.45.Ra"))]), (2000, 2000))
    assert g.nodes == {"05.45"}
    assert dict(g.edges) == {}


def test_triangle_from_one_paper():
    g = build_cooccurrence(Corpus([paper("P", 2000, codes=("01.01", "02.02", "03.03"))]),
                           (2000, 2000))
    assert dict(g.edges) == {("01.01", "02.02"): 1, ("01.01", "03.03"): 1, ("02.02", "03.03"): 1}


def test_colisting_counts():
    corpus = Corpus([paper("P", 2000, codes=("01.01", "02.02")),
                     paper("Q", 2001, codes=("01.01.Aa", "02.02.Bb")),
                     paper("R", 2005, codes=("01.01", "02.02"))])
    g = build_cooccurrence(corpus, (2000, 2004))
    assert dict(g.edges) == {("01.01", "02.02"): 2}


def test_cooccurrence_errors():
    corpus = Corpus([paper("P", 2000, codes=())])
    with pytest.raises(ValueError):
        build_cooccurrence(corpus, (2000, 2000))
    with pytest.raises(ValueError):
        build_cooccurrence(corpus, (2001, 2000))


def test_cooccurrence_order_independent():
    rng = random.Random(1)
    codes = [f"{i:02d}.{j:02d}" for i in range(1, 5) for j in range(1, 4)]
    papers = [paper(f"P{i}", 2000 + i % 3, codes=rng.sample(codes, rng.randint(1, 4)))
              for i in range(40)]
    a = build_cooccurrence(Corpus(papers), (2000, 2002))
    rng.shuffle(papers)
    b = build_cooccurrence(Corpus(papers), (2000, 2002))
    assert a == b


def _cliques(bridge: bool):
    left = [f"0{i}.00" for i in range(5)]
    right = [f"1{i}.00" for i in range(5)]
    edges = {pair: 1 for block in (left, right) for pair in itertools.combinations(block, 2)}
    if bridge:
        edges[(left[0], right[0])] = 1
    return FieldGraph(frozenset(left + right), edges), left, right


def test_bridged_cliques_match_brute_force():
    graph, left, right = _cliques(bridge=True)
    found = detect_communities(graph, seed=3)
    q_best, best, _ = brute_force_best_partition(sorted(graph.nodes), graph.edges)
    assert set(map(frozenset, found.communities)) == {frozenset(left), frozenset(right)}
    assert modularity(graph, found) == pytest.approx(q_best, abs=1e-12)
    # closed form: 2 * (20/42 - (21/42)^2)
    assert q_best == pytest.approx(0.452380952380952, abs=1e-12)


def test_disjoint_cliques_q_half():
    graph, left, right = _cliques(bridge=False)
    assert modularity(graph, CommunityAssignment([left, right])) == pytest.approx(0.5, abs=1e-12)


def test_triangle_single_community():
    g = FieldGraph(frozenset("abc"), {("a", "b"): 1, ("a", "c"): 1, ("b", "c"): 1})
    found = detect_communities(g)
    assert len(found) == 1
    assert modularity(g, found) == pytest.approx(0.0, abs=1e-15)


def _random_graph(rng: random.Random, n: int, p: float, max_w: int = 3) -> FieldGraph:
    nodes = [f"{i:02d}.{rng.randint(0, 99):02d}" for i in range(n)]
    edges = {}
    for a, b in itertools.combinations(sorted(nodes), 2):
        if rng.random() < p:
            edges[(a, b)] = rng.randint(1, max_w)
    return FieldGraph(frozenset(nodes), edges)


def _to_nx(g: FieldGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(g.nodes)
    G.add_weighted_edges_from((a, b, w) for (a, b), w in g.edges.items())
    return G


@pytest.mark.parametrize("seed", range(15))
def test_modularity_matches_networkx(seed):
    rng = random.Random(seed)
    g = _random_graph(rng, 20, 0.25)
    nodes = sorted(g.nodes)
    groups = [set() for _ in range(4)]
    for v in nodes:
        groups[rng.randrange(4)].add(v)
    groups = [s for s in groups if s]
    for res in (0.5, 1.0, 2.0):
        want = nx.algorithms.community.modularity(_to_nx(g), groups, weight="weight",
                                                  resolution=res)
        assert modularity(g, CommunityAssignment(groups), res) == pytest.approx(want, abs=1e-12)


def test_random_partition_mean_near_zero():
    # E[Q] of a uniform random partition is slightly negative, O(1/n)
    values = []
    for seed in range(100):
        rng = random.Random(seed)
        g = _random_graph(rng, 100, 0.1)
        groups = [set() for _ in range(4)]
        for v in sorted(g.nodes):
            groups[rng.randrange(4)].add(v)
        values.append(modularity(g, CommunityAssignment(groups)))
    assert abs(np.mean(values)) < 0.02


@pytest.mark.parametrize("seed", range(10))
def test_louvain_against_exhaustive_partitions(seed):
    rng = random.Random(100 + seed)
    g = _random_graph(rng, 8, 0.4)
    if not g.edges:
        pytest.skip("no edges drawn")
    found = detect_communities(g, seed=seed)
    q_best, _, n = brute_force_best_partition(sorted(g.nodes), g.edges)
    assert n == 4140
    q = modularity(g, found)
    assert q <= q_best + 1e-12
    assert q >= modularity(g, CommunityAssignment([g.nodes])) - 1e-12
    assert q >= q_best - 0.1


@pytest.mark.parametrize("seed", range(10))
def test_louvain_determinism_and_trivial_bound(seed):
    g = _random_graph(random.Random(seed), 40, 0.15)
    a = detect_communities(g, seed=seed)
    b = detect_communities(g, seed=seed)
    assert a == b
    assert modularity(g, a) >= modularity(g, CommunityAssignment([g.nodes])) - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_label_permutation(seed, rnd):
    g = _random_graph(random.Random(seed), 16, 0.3)
    order = sorted(g.nodes)
    rnd.shuffle(order)
    fresh = [f"{i:02d}.{j:02d}" for i, j in zip(range(50, 66), range(16))]
    rnd.shuffle(fresh)
    relabel = dict(zip(sorted(g.nodes), fresh))
    permuted = FieldGraph(frozenset(relabel.values()),
                          {tuple(sorted((relabel[a], relabel[b]))): w for (a, b), w in g.edges.items()})
    base = detect_communities(g, order=order)
    other = detect_communities(permuted, order=[relabel[v] for v in order])
    assert {frozenset(relabel[v] for v in c) for c in base.communities} == set(other.communities)


def test_resolution_and_order_validation():
    g, _, _ = _cliques(bridge=True)
    with pytest.raises(ValueError):
        detect_communities(g, resolution=0)
    with pytest.raises(ValueError):
        detect_communities(g, order=["00.00"])
    # a high resolution splits further
    assert len(detect_communities(g, resolution=5.0)) > 2


def test_isolated_nodes_are_singletons():
    g = FieldGraph(frozenset({"01.01", "02.02", "03.03"}), {("01.01", "02.02"): 2})
    found = detect_communities(g)
    assert {"03.03"} in [set(c) for c in found.communities]


def test_assignment_tsv_round_trip(tmp_path):
    a = CommunityAssignment([{"05.45", "05.40"}, {"89.75"}, {"03.67", "03.65"}])
    assert a.mapping == {"03.65": 0, "03.67": 0, "05.40": 1, "05.45": 1, "89.75": 2}
    path = tmp_path / "c.tsv"
    a.write_tsv(path)
    assert CommunityAssignment.read_tsv(path) == a
    path.write_text("05.45 1\n")
    with pytest.raises(ValueError, match="1"):
        CommunityAssignment.read_tsv(path)


def test_assignment_rejects_overlap():
    with pytest.raises(ValueError):
        CommunityAssignment([{"01.01"}, {"01.01", "02.02"}])


def test_modularity_requires_full_assignment():
    g, left, _ = _cliques(bridge=False)
    with pytest.raises(ValueError):
        modularity(g, CommunityAssignment([left]))
