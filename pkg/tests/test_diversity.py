import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import paper
from oracles import entropy_diversity
from pastfuture.diversity import (CommunityDistribution, author_citation_weights,
                                  author_reference_weights, diversity_index,
                                  diversity_of_vector, normalize, paper_weights, weight_table)
from pastfuture.ingest import Corpus
from pastfuture.pacs_network import CommunityAssignment

# communities 0..4 hold codes "01.*" .. "05.*"
ASSIGN = CommunityAssignment([{f"0{c}.{i:02d}" for i in range(1, 4)} for c in range(1, 6)])


def _dist(weights, normalized=True):
    return CommunityDistribution(dict(weights), normalized=normalized)


def test_paper_weight_shares():
    p = paper("P", 2000, codes=("01.01.Aa", "01.02.Bb", "02.01", "03.01.Xx"))
    assert paper_weights(p, ASSIGN).weights == {0: 0.5, 1: 0.25, 2: 0.25}


def test_paper_weight_single_community():
    assert paper_weights(paper("P", 2000, codes=("04.01", "04.02")), ASSIGN).weights == {3: 1.0}


def test_paper_weight_drops_unassigned(caplog):
    with caplog.at_level(logging.WARNING):
        w = paper_weights(paper("P", 2000, codes=("02.03.Aa", "77.77.Zz")), ASSIGN)
    assert w.weights == {1: 1.0}
    assert "not in the community assignment" in caplog.text


def test_paper_weight_nothing_assignable():
    w = paper_weights(paper("P", 2000, codes=("77.77",)), ASSIGN)
    assert not w


def _citation_corpus():
    return Corpus([
        paper("A1", 2000, authors=("A",)), paper("A2", 2000, authors=("A",)),
        paper("X", 2001, authors=("x",), codes=("01.01", "02.01"), refs=("A1", "A2")),
        paper("Y", 2001, authors=("y",), codes=("01.02",), refs=("A1",)),
        paper("Z", 2001, authors=("z",), codes=("01.03",), refs=("A2",)),
    ])


def test_citation_weights_multiplicity():
    corpus = _citation_corpus()
    w = author_citation_weights("A", {"A1", "A2"}, {("X", "A1"), ("X", "A2")}, corpus, ASSIGN)
    assert w.weights == {0: 1.0, 1: 1.0}


def test_citation_weights_additive_citers():
    corpus = _citation_corpus()
    w = author_citation_weights("A", {"A1", "A2"}, {("Y", "A1"), ("Z", "A2")}, corpus, ASSIGN)
    assert w.weights == {0: 2.0}


def test_citation_weights_empty():
    assert not author_citation_weights("A", {"A1"}, set(), _citation_corpus(), ASSIGN)


def test_citation_weights_reject_foreign_link():
    with pytest.raises(ValueError):
        author_citation_weights("A", {"A1"}, {("Z", "A2")}, _citation_corpus(), ASSIGN)


def test_reference_weights():
    corpus = Corpus([
        paper("X", 1999, authors=("x",), codes=("02.01",)),
        paper("W", 1999, authors=("w",), codes=("01.01",)),
        paper("A1", 2000, authors=("A",), refs=("X",)),
        paper("A2", 2000, authors=("A",), refs=("X", "W")),
        paper("A3", 2000, authors=("A",), refs=("gone1", "gone2")),
    ])
    assert author_reference_weights("A", {"A1", "A2"}, corpus, ASSIGN).weights == {1: 2.0, 0: 1.0}
    assert author_reference_weights("A", {"A2"}, corpus, ASSIGN).weights == {1: 1.0, 0: 1.0}
    assert not author_reference_weights("A", {"A3"}, corpus, ASSIGN)


def test_normalize_examples():
    assert normalize(_dist({0: 1, 1: 1}, False)).weights == {0: 0.5, 1: 0.5}
    assert normalize(_dist({0: 3}, False)).weights == {0: 1.0}
    with pytest.raises(ValueError):
        normalize(_dist({}, False))


def test_diversity_examples():
    assert diversity_index(_dist({0: 1.0})).value == 1.0
    assert diversity_index(_dist({c: 0.25 for c in range(4)})).value == pytest.approx(4.0, abs=1e-12)
    # exp(-(0.7 ln 0.7 + 0.3 ln 0.3)), evaluated independently at 40 digits
    assert diversity_index(_dist({0: 0.7, 1: 0.3})).value == pytest.approx(
        1.8420227750373132, abs=1e-12)


def test_diversity_empty_is_undefined():
    assert not diversity_index(_dist({})).defined
    assert math.isnan(diversity_of_vector(np.zeros(3)))


def test_diversity_requires_normalized():
    with pytest.raises(ValueError):
        diversity_index(_dist({0: 2.0}, normalized=False))


def test_weight_table_matches_paper_weights():
    corpus = _citation_corpus()
    table = weight_table(corpus, ASSIGN)
    for pid, vec in table.items():
        dist = paper_weights(corpus.papers[pid], ASSIGN)
        assert vec.tolist() == [dist.weights.get(c, 0.0) for c in range(len(ASSIGN))]


# ---------------------------------------------------------------- properties

weights = st.lists(st.floats(0, 1e3, allow_nan=False, allow_subnormal=False), min_size=1,
                   max_size=12).filter(lambda w: sum(w) > 0)


def _norm(w):
    total = math.fsum(w)
    return {i: x / total for i, x in enumerate(w)}


@settings(max_examples=300)
@given(weights)
def test_bounds_and_oracle(w):
    dv = diversity_index(_dist(_norm(w)))
    support = sum(1 for x in _norm(w).values() if x > 0)
    assert 1.0 <= dv.value <= support
    assert dv.value == pytest.approx(entropy_diversity(list(_norm(w).values())), rel=1e-12)


@settings(max_examples=200)
@given(weights, st.randoms(use_true_random=False))
def test_permutation_invariant(w, rnd):
    p = _norm(w)
    labels = list(range(100, 100 + len(p)))
    rnd.shuffle(labels)
    relabelled = {labels[c]: x for c, x in p.items()}
    assert diversity_index(_dist(relabelled)).value == pytest.approx(diversity_index(_dist(p)).value,
                                                                     rel=1e-14)


@settings(max_examples=200)
@given(weights.filter(lambda w: len(w) >= 2), st.data())
def test_merging_never_increases(w, data):
    p = _norm(w)
    i, j = data.draw(st.lists(st.sampled_from(sorted(p)), min_size=2, max_size=2, unique=True))
    merged = {c: x for c, x in p.items() if c not in (i, j)}
    merged[i] = p[i] + p[j]
    assert diversity_index(_dist(merged)).value <= diversity_index(_dist(p)).value * (1 + 1e-12)


def test_uniform_hits_upper_bound_only_when_uniform():
    assert diversity_index(_dist({0: 0.5, 1: 0.5})).value == 2.0
    assert diversity_index(_dist({0: 0.5000001, 1: 0.4999999})).value < 2.0


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_citation_weights_additive(data):
    corpus = _citation_corpus()
    links = [("X", "A1"), ("X", "A2"), ("Y", "A1"), ("Z", "A2")]
    left = set(data.draw(st.lists(st.sampled_from(links), unique=True)))
    right = set(links) - left
    past = {"A1", "A2"}
    whole = author_citation_weights("A", past, left | right, corpus, ASSIGN)
    parts = (author_citation_weights("A", past, left, corpus, ASSIGN)
             + author_citation_weights("A", past, right, corpus, ASSIGN))
    assert set(whole.weights) == {c for c, w in parts.weights.items()}
    for c in whole.weights:
        assert whole.weights[c] == pytest.approx(parts.weights[c], abs=1e-12)
