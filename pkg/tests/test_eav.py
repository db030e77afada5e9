
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapattern.candidates import parse_pattern
from metapattern.eav import (
    AttributeCatalog,
    AttributeType,
    EAVTuple,
    GoldTuple,
    assign_attributes,
    evaluate,
    extract_eav,
    read_eav,
    slot_roles,
    write_eav,
)
from metapattern.errors import CatalogMismatch, EmptyGold, InvalidParams
from metapattern.segmentation import Extraction
from metapattern.synonyms import PatternGroup

from oracles import trapezoid_pr_auc

P = parse_pattern
CAT = AttributeCatalog([AttributeType("country:president", "COUNTRY", "POLITICIAN"),
                        AttributeType("person:age", "PERSON", "DIGIT")])
A = P("$COUNTRY president $POLITICIAN")
B = P("president $POLITICIAN of $COUNTRY")


def _ext(p, bindings, k):
    paths = tuple(("LOCATION", "COUNTRY") if p[i] == "$COUNTRY" else ("PERSON", "POLITICIAN")
                  for i in range(len(p)) if p[i].startswith("$"))
    return Extraction(p, bindings, paths, "d", k, 0)


def _t(e, v, c):
    return EAVTuple(e, "country:president", v, c, ("x",))


def _g(e, v, label=True):
    return GoldTuple(e, "country:president", v, label)


def test_precision_recall_f1():
    pred = [_t("US", "Obama", 0.9), _t("France", "Macron", 0.8), _t("US", "Trudeau", 0.7)]
    gold = [_g("US", "Obama"), _g("France", "Macron"), _g("Spain", "Sanchez"), _g("Italy", "Mattarella"),
            _g("US", "Trudeau", False)]
    m = evaluate(pred, gold)
    assert (m.precision, m.recall) == (pytest.approx(2 / 3), 0.5)
    assert m.f1 == pytest.approx(4 / 7)
    assert (m.n_predicted, m.n_correct, m.n_gold) == (3, 2, 4)


def test_five_point_auc():
    hits = [True, False, True, True, False]
    pred = [_t(f"e{k}", f"v{k}", 1 - k / 10) for k in range(5)]
    gold = [_g(f"e{k}", f"v{k}", h) for k, h in enumerate(hits)] + [_g("x", "y")]
    m = evaluate(pred, gold)
    pts, tp = [], 0
    for k, h in enumerate(hits, 1):
        tp += h
        pts.append((tp / 4, tp / k))
    assert [(r, p) for _, p, r in m.curve] == pts
    assert m.auc == pytest.approx(trapezoid_pr_auc(pts), abs=1e-12)
    assert m.auc == pytest.approx(55 / 96)


def test_tied_confidence_is_one_point():
    pred = [_t("a", "1", 0.5), _t("b", "2", 0.5)]
    m = evaluate(pred, [_g("a", "1")])
    assert len(m.curve) == 1 and m.curve[0][1:] == (0.5, 1.0)


def test_empty_gold_and_empty_predictions():
    with pytest.raises(EmptyGold):
        evaluate([], [_g("a", "b", False)])
    m = evaluate([], [_g("a", "b")])
    assert (m.precision, m.recall, m.f1, m.auc) == (0.0, 0.0, 0.0, 0.0)


def test_dedup_and_confidence():
    g = PatternGroup((A, B), (_ext(A, ("U.S.", "Obama"), 0), _ext(B, ("obama", "u.s."), 1),
                              _ext(A, ("France", "Macron"), 2)), "country:president")
    out = extract_eav([g], {A: 0.8, B: 0.97}, CAT)
    assert [(t.entity, t.value, t.confidence, len(t.provenance)) for t in out] == \
        [("U.S.", "Obama", 0.97, 2), ("France", "Macron", 0.8, 1)]
    mean = extract_eav([g], {A: 0.8, B: 0.97}, CAT, "mean")
    assert mean[0].confidence == pytest.approx(0.885)
    with pytest.raises(InvalidParams):
        extract_eav([g], {}, CAT, "median")


def test_weighted_counts_occurrences():
    exts = tuple(_ext(A, ("US", "Obama"), k) for k in range(3)) + (_ext(B, ("Obama", "US"), 9),)
    out = extract_eav([PatternGroup((A, B), exts, "country:president")], {A: 0.6, B: 1.0}, CAT, "weighted")
    assert out[0].confidence == pytest.approx(0.7)


def test_unassigned_groups_produce_nothing():
    g = PatternGroup((A,), (_ext(A, ("US", "Obama"), 0),))
    assert extract_eav([g], {A: 1.0}, CAT) == []


def test_assignment(ontology):
    groups = [PatternGroup((A, B)), PatternGroup((P("$PERSON age $DIGIT"),))]
    out = assign_attributes(groups, {"president $POLITICIAN of $COUNTRY": "country:president", "g2": "person:age"},
                            CAT, ontology)
    assert [g.attribute for g in out] == ["country:president", "person:age"]
    mixed = assign_attributes([PatternGroup((A, B))], {"$COUNTRY president $POLITICIAN": "country:president",
                                                       "president $POLITICIAN of $COUNTRY": "person:age"}, CAT, ontology)
    assert mixed[0].attribute is None
    with pytest.raises(CatalogMismatch):
        assign_attributes([PatternGroup((P("$PERSON age $DIGIT"),))], {"g1": "country:president"}, CAT, ontology)
    with pytest.raises(CatalogMismatch):
        assign_attributes([PatternGroup((A,))], {"g1": "nope"}, CAT, ontology)


def test_slot_roles_use_lineage(ontology):
    row = CAT["country:president"]
    assert slot_roles(["COUNTRY", "POLITICIAN"], row, ontology) == (0, 1)
    assert slot_roles(["PERSON", "LOCATION"], row, ontology) == (1, 0)
    with pytest.raises(CatalogMismatch):
        slot_roles(["COUNTRY"], row, ontology)


def test_eav_file_round_trip(tmp_path):
    rows = [_t("US", "Obama", 0.97), _t("France", "Macron", 0.5)]
    path = tmp_path / "eav.tsv"
    with open(path, "w") as fh:
        write_eav(rows, fh)
    assert path.read_text().splitlines()[1] == "US\tcountry:president\tObama\t0.970000\t1"
    back = read_eav(path)
    assert [(t.entity, t.value, t.confidence) for t in back] == [("US", "Obama", 0.97), ("France", "Macron", 0.5)]


@given(data=st.data())
@settings(max_examples=100, deadline=None)
def test_metric_bounds(data):
    n = data.draw(st.integers(1, 15))
    pred = [_t(f"e{k}", "v", data.draw(st.floats(0, 1))) for k in range(n)]
    gold = [_g(f"e{k}", "v", data.draw(st.booleans())) for k in range(n + 3)]
    if not any(g.label for g in gold):
        return
    m = evaluate(pred, gold)
    for x in (m.precision, m.recall, m.f1, m.auc):
        assert 0.0 <= x <= 1.0
    assert m.curve[-1][1:] == pytest.approx((m.precision, m.recall))
    recalls = [r for _, _, r in m.curve]
    assert recalls == sorted(recalls)
