import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapattern.candidates import CandidateSet, CandidateStats, parse_pattern
from metapattern.errors import DegenerateLabels, ParseError
from metapattern.quality import (
    FEATURE_NAMES,
    PatternLabel,
    QualityModel,
    concordance_z,
    extract_features,
    fit_quality_model,
    read_labels,
    score,
    train_quality_model,
)

from oracles import best_z


def test_single_symbol_scores_zero():
    assert concordance_z(("a",), {("a",): 10}, 100) == 0.0


def test_hand_computed_z():
    counts = {("a", "b"): 100, ("a",): 200, ("b",): 250}
    z = concordance_z(("a", "b"), counts, 1000)
    assert z == pytest.approx(50 / math.sqrt(1000 * 0.05 * 0.95), abs=1e-12)
    assert z == pytest.approx(7.254762501100116, abs=1e-9)
    counts[("a", "b")] = 50
    assert concordance_z(("a", "b"), counts, 1000) == 0.0


def test_zero_sigma_split_is_skipped():
    # left part covers the whole corpus: q = 1 * p_r, var > 0; left absent: var = 0
    counts = {("a", "b", "c"): 3, ("a",): 0, ("b", "c"): 3, ("a", "b"): 3, ("c",): 5}
    z = concordance_z(("a", "b", "c"), counts, 10)
    q = 0.3 * 0.5
    assert z == pytest.approx((3 - 10 * q) / math.sqrt(10 * q * (1 - q)))
    assert concordance_z(("a", "b"), {("a", "b"): 1}, 10) == 0.0


@given(L=st.integers(2, 10_000), data=st.data())
@settings(max_examples=100, deadline=None)
def test_z_matches_oracle(L, data):
    n = data.draw(st.integers(2, 5))
    p = tuple("abcde"[:n])
    counts = {}
    for i in range(n):
        for j in range(i + 1, n + 1):
            counts[p[i:j]] = data.draw(st.integers(0, L))
    assert concordance_z(p, counts, L) == pytest.approx(best_z(p, counts, L), abs=1e-9)


@given(c=st.integers(0, 500), l=st.integers(1, 600), r=st.integers(1, 600))
@settings(max_examples=100, deadline=None)
def test_z_increases_with_count(c, l, r):
    L = 1000
    lo = concordance_z(("a", "b"), {("a", "b"): c, ("a",): l, ("b",): r}, L)
    hi = concordance_z(("a", "b"), {("a", "b"): c + 1, ("a",): l, ("b",): r}, L)
    assert hi > lo


def _cands(table, L=1000):
    stats = {parse_pattern(k): CandidateStats(v) for k, v in table.items()}
    return CandidateSet(stats, L, 5, 20, "fine")


def test_informativeness_features():
    c = _cands({"$PERSON 's wife $PERSON": 10, "$PERSON 's wife": 12, "'s wife $PERSON": 11,
                "$PERSON 's": 40, "'s wife": 12, "wife $PERSON": 11, "$PERSON": 100, "'s": 50, "wife": 12})
    fv = extract_features(parse_pattern("$PERSON 's wife $PERSON"), c)
    assert fv.n_nonstop == 1
    assert fv.n_slots == 2 and fv.n_distinct_slots == 1
    assert fv.sub_ratio == pytest.approx(10 / 11)
    assert fv.super_ratio == 0.0
    sub = extract_features(parse_pattern("$PERSON 's wife"), c)
    assert sub.super_ratio == pytest.approx(10 / 12)


def test_boundary_stopwords_and_coverage():
    c = _cands({"and $COUNTRY president": 6, "and $COUNTRY": 6, "$COUNTRY president": 9,
                "and": 30, "$COUNTRY": 20, "president": 9})
    c[parse_pattern("and $COUNTRY president")].slot_entities = {1: {"barack obama"}}
    fv = extract_features(parse_pattern("and $COUNTRY president"), c)
    assert fv.first_is_stop and not fv.last_is_stop
    assert fv.coverage == 1


def test_ratios_bounded():
    c = _cands({"a b": 10, "a": 10, "b": 10})
    fv = extract_features(("a", "b"), c)
    assert 0 <= fv.sub_ratio <= 1 and 0 <= fv.super_ratio <= 1
    assert math.isfinite(fv.concordance_z)
    assert len(fv.as_array()) == len(FEATURE_NAMES)


def _toy(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((20, len(FEATURE_NAMES)))
    y = (X[:, 0] > 0.5).astype(int)
    y[:2] = [0, 1]
    X[0, 0], X[1, 0] = 0.1, 0.9
    return X, y


def test_separable_toy_is_fit_exactly():
    X, y = _toy()
    m = fit_quality_model(X, y, seed=3)
    assert ((m.score_matrix(X) >= 0.5).astype(int) == y).all()


def test_degenerate_labels():
    X, _ = _toy()
    with pytest.raises(DegenerateLabels):
        fit_quality_model(X[:0], np.zeros(0))
    with pytest.raises(DegenerateLabels):
        fit_quality_model(X, np.ones(20))
    c = _cands({"a b": 10, "a": 10, "b": 10})
    with pytest.raises(DegenerateLabels):
        train_quality_model([], c)


def test_determinism_and_round_trip():
    X, y = _toy()
    a, b = fit_quality_model(X, y, seed=1), fit_quality_model(X, y, seed=1)
    probe = np.random.default_rng(9).random((50, len(FEATURE_NAMES)))
    assert (a.score_matrix(probe) == b.score_matrix(probe)).all()
    again = QualityModel.load(io.BytesIO(a.to_bytes()))
    assert (again.score_matrix(probe) == a.score_matrix(probe)).all()
    scores = a.score_matrix(probe * 100 - 50)
    assert ((scores >= 0) & (scores <= 1)).all()
    with pytest.raises(ParseError):
        QualityModel.load(io.BytesIO(b"garbage\n"))


def test_zero_frequency_scores():
    X, y = _toy()
    m = fit_quality_model(X, y)
    c = _cands({"a b": 10, "a": 10, "b": 10})
    fv = extract_features(("a", "b"), c, rectified=True)
    assert fv.frequency == 0
    assert 0 <= score(m, fv) <= 1


def test_label_file(tmp_path):
    p = tmp_path / "labels.tsv"
    p.write_text("# comment\n$COUNTRY president $POLITICIAN\t1\nand $COUNTRY\t0\n")
    assert read_labels(p) == [PatternLabel(parse_pattern("$COUNTRY president $POLITICIAN"), True),
                              PatternLabel(("and", "$COUNTRY"), False)]
    p.write_text("x\t2\n")
    with pytest.raises(ParseError):
        read_labels(p)
