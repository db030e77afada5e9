import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapattern.candidates import parse_pattern
from metapattern.embeddings import EmbeddingTable
from metapattern.errors import CliqueBudgetExceeded, DegenerateLabels, ParseError, TypeMismatch
from metapattern.synonyms import (
    PairFeatureVector,
    SynonymModel,
    build_synonym_graph,
    find_cliques,
    group_patterns,
    pair_features,
    score_pair,
    train_synonym_model,
)

from oracles import maximal_cliques

P = parse_pattern
EMB = EmbeddingTable(["president", "leader", "age"], [[1.0, 0.1], [0.9, 0.2], [0.0, 1.0]])


def test_type_mismatch():
    with pytest.raises(TypeMismatch):
        pair_features(P("$COUNTRY president $POLITICIAN"), P("$PERSON age $DIGIT"), {}, EMB)


def test_pair_features_counts():
    a, b = P("$COUNTRY president $POLITICIAN"), P("president $POLITICIAN of $COUNTRY")
    idx = {a: {("us", "obama"), ("france", "macron")}, b: {("us", "obama")}}
    f = pair_features(a, b, idx, EMB)
    assert f.nonstop == (1, 1, 1)
    assert f.words == (1, 2, 1)
    assert f.extractions == (2, 1, 1)
    assert f.max_similarity == pytest.approx(1.0)
    g = pair_features(a, P("$COUNTRY leader $POLITICIAN"), idx, EMB)
    assert g.nonstop == (1, 1, 0)
    assert 0.9 < g.max_similarity < 1.0
    assert pair_features(a, P("$COUNTRY , $POLITICIAN"), idx, EMB).max_similarity == 0.0


def _pairs():
    rng = np.random.default_rng(0)
    feats, ys = [], []
    for _ in range(40):
        s = int(rng.integers(0, 3))
        ei, ej = int(rng.integers(1, 30)), int(rng.integers(1, 30))
        shared = int(rng.integers(0, min(ei, ej) + 1))
        feats.append(PairFeatureVector((2, 3, s), (1, 2, min(s, 1)), (0, 0, 0), float(rng.random()), (ei, ej, shared)))
        ys.append(1.0 if shared > min(ei, ej) / 2 else 0.0)
    return feats, ys


def test_model_symmetric_bounded_and_round_trips():
    feats, ys = _pairs()
    m = train_synonym_model(feats, ys)
    for f in feats:
        s = score_pair(m, f)
        assert 0.0 <= s <= 1.0
        assert s == score_pair(m, f.mirrored())
    back = SynonymModel.load(io.BytesIO(m.to_bytes()))
    X = np.vstack([f.as_array() for f in feats])
    assert (back.score_matrix(X) == m.score_matrix(X)).all()
    with pytest.raises(ParseError):
        SynonymModel.load(io.BytesIO(b"nope\n"))


def test_degenerate_pair_labels():
    feats, _ = _pairs()
    with pytest.raises(DegenerateLabels):
        train_synonym_model(feats, [1.0] * len(feats))
    with pytest.raises(DegenerateLabels):
        train_synonym_model(feats[:2], [0.0, 2.0])


def test_graph_only_joins_same_signature():
    feats, ys = _pairs()
    m = train_synonym_model(feats, ys)
    pats = [P("$COUNTRY president $POLITICIAN"), P("president $POLITICIAN of $COUNTRY"), P("$PERSON age $DIGIT")]
    idx = {pats[0]: {("a", "b")}, pats[1]: {("a", "b")}, pats[2]: {("c", "1")}}
    g = build_synonym_graph(pats, m, 0.5, idx, EMB)
    assert pats[2] in g and not g[pats[2]]
    for u, vs in g.items():
        for v in vs:
            assert u in g[v]
    with pytest.raises(ValueError):
        build_synonym_graph(pats, m, 1.0, idx, EMB)


def _graph(nodes, edges):
    g = {v: set() for v in nodes}
    for a, b in edges:
        g[a].add(b)
        g[b].add(a)
    return g


def test_clique_examples():
    tri_edge = _graph("abcd", [("a", "b"), ("b", "c"), ("a", "c"), ("c", "d")])
    assert set(find_cliques(tri_edge)) == {frozenset("abc"), frozenset("cd")}
    k4 = _graph("abcd", itertools.combinations("abcd", 2))
    assert find_cliques(k4) == [frozenset("abcd")]
    assert set(find_cliques(_graph("xyz", []))) == {frozenset("x"), frozenset("y"), frozenset("z")}
    with pytest.raises(CliqueBudgetExceeded):
        find_cliques(_graph("xyz", []), budget=2)


@given(n=st.integers(1, 9), data=st.data())
@settings(max_examples=150, deadline=None)
def test_cliques_match_oracle(n, data):
    nodes = list(range(n))
    all_edges = list(itertools.combinations(nodes, 2))
    edges = data.draw(st.lists(st.sampled_from(all_edges), unique=True)) if all_edges else []
    got = find_cliques(_graph(nodes, edges))
    assert len(got) == len(set(got))
    assert set(got) == maximal_cliques(nodes, edges)
    # every node is covered
    assert set().union(*got) == set(nodes)


def test_group_pools_extractions():
    from metapattern.segmentation import Extraction
    a, b = P("$X y $Z"), P("$Z w $X")
    e1 = Extraction(a, ("1", "2"), (("X",), ("Z",)), "d", 0, 0)
    e2 = Extraction(b, ("3", "4"), (("Z",), ("X",)), "d", 1, 0)
    groups = group_patterns([frozenset([a, b])], [e1, e2])
    assert len(groups) == 1 and set(groups[0].extractions) == {e1, e2}
