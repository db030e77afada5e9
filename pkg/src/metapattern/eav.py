"""Attribute assignment, EAV tuple aggregation and evaluation."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .candidates import Pattern, normalize_value, render, slot_positions, slot_type
from .corpus import TypeOntology
from .errors import CatalogMismatch, EmptyGold, InvalidParams, ParseError
from .synonyms import PatternGroup

log = logging.getLogger(__name__)

STRATEGIES = ("max", "mean", "weighted")


@dataclass(frozen=True)
class AttributeType:
    name: str
    entity_type: str
    value_type: str


class AttributeCatalog:
    def __init__(self, rows: Iterable[AttributeType]):
        self.rows = {r.name: r for r in rows}

    def __getitem__(self, name: str) -> AttributeType:
        return self.rows[name]

    def __contains__(self, name: str) -> bool:
        return name in self.rows


def _tsv_rows(path, width, what):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != width:
                raise ParseError(f"expected {what}", lineno)
            yield lineno, parts


def read_catalog(path) -> AttributeCatalog:
    """TSV ``attribute<TAB>entity_type<TAB>value_type``."""
    return AttributeCatalog(AttributeType(*p) for _, p in _tsv_rows(path, 3, "attribute<TAB>entity_type<TAB>value_type"))


def read_assignments(path) -> dict[str, str]:
    """TSV ``pattern-or-group-id<TAB>attribute``."""
    return {k: a for _, (k, a) in _tsv_rows(path, 2, "pattern<TAB>attribute")}


def _compatible(have: str, want: str, ontology: TypeOntology | None) -> bool:
    if have == want:
        return True
    if ontology is None or have not in ontology or want not in ontology:
        return False
    return ontology.is_ancestor_or_self(have, want) or ontology.is_ancestor_or_self(want, have)


def slot_roles(types: Sequence[str], row: AttributeType, ontology: TypeOntology | None = None) -> tuple[int, int]:
    """Indices (entity, value) into ``types`` for a two-slot pattern under a catalog row.

    Types related to the row's types by ancestry fit; with two fitting
    orders the earlier slot is the entity.
    """
    if len(types) != 2:
        raise CatalogMismatch(f"attribute {row.name} needs two slots, got {list(types)}")
    for e, v in ((0, 1), (1, 0)):
        if _compatible(types[e], row.entity_type, ontology) and _compatible(types[v], row.value_type, ontology):
            return e, v
    raise CatalogMismatch(f"slots {list(types)} do not fit {row.name} ({row.entity_type}, {row.value_type})")


def assign_attributes(groups: Sequence[PatternGroup], assignments: Mapping[str, str], catalog: AttributeCatalog,
                      ontology: TypeOntology | None = None) -> list[PatternGroup]:
    """Label groups by id (``g1``, ``g2``, ... in group order) or by member pattern.

    A pattern-keyed group is labelled only when its assigned members agree;
    a group mixing attributes is left unlabelled.
    """
    out = []
    for k, g in enumerate(groups, 1):
        attr = assignments.get(f"g{k}")
        if attr is None:
            votes = {assignments[render(m)] for m in g.members if render(m) in assignments}
            if len(votes) == 1:
                attr = votes.pop()
            elif votes:
                log.warning("group g%d mixes attributes %s; left unassigned", k, sorted(votes))
        if attr is None:
            out.append(replace(g, attribute=None))
            continue
        if attr not in catalog:
            raise CatalogMismatch(f"unknown attribute {attr!r}")
        for m in g.members:
            slot_roles([slot_type(m[i]) for i in slot_positions(m)], catalog[attr], ontology)
        out.append(replace(g, attribute=attr))
    return out


@dataclass(frozen=True)
class EAVTuple:
    entity: str
    attribute: str
    value: str
    confidence: float
    provenance: tuple[str, ...]

    @property
    def key(self) -> tuple[str, str, str]:
        return (normalize_value(self.entity), self.attribute, normalize_value(self.value))


def extract_eav(groups: Iterable[PatternGroup], qualities: Mapping[Pattern, float], catalog: AttributeCatalog,
                strategy: str = "max", ontology: TypeOntology | None = None) -> list[EAVTuple]:
    """One tuple per normalized (entity, attribute, value), sorted by confidence then key.

    ``strategy`` picks the confidence: ``max`` quality of any contributing
    pattern, ``mean`` over contributing patterns, or ``weighted`` mean over
    contributing occurrences.
    """
    if strategy not in STRATEGIES:
        raise InvalidParams(f"confidence strategy must be one of {STRATEGIES}")
    surfaces: dict[tuple, tuple[str, str]] = {}
    occ: dict[tuple, dict[str, Pattern]] = defaultdict(dict)
    for g in groups:
        if g.attribute is None:
            continue
        row = catalog[g.attribute]
        for ext in g.extractions:
            e_slot, v_slot = slot_roles([slot_type(ext.pattern[i]) for i in slot_positions(ext.pattern)], row, ontology)
            ent, val = ext.bindings[e_slot], ext.bindings[v_slot]
            key = (normalize_value(ent), g.attribute, normalize_value(val))
            surfaces.setdefault(key, (ent, val))
            occ[key][f"{render(ext.pattern)}@{ext.provenance}"] = ext.pattern
    out = []
    for key, where in occ.items():
        per_occ = [qualities.get(p, 0.0) for p in where.values()]
        if strategy == "max":
            conf = max(per_occ)
        elif strategy == "mean":
            conf = math.fsum(qualities.get(p, 0.0) for p in set(where.values())) / len(set(where.values()))
        else:
            conf = math.fsum(per_occ) / len(per_occ)
        ent, val = surfaces[key]
        prov = tuple(sorted(k.rsplit("@", 1)[1] for k in where))
        out.append(EAVTuple(ent, key[1], val, min(max(conf, 0.0), 1.0), prov))
    out.sort(key=lambda t: (-t.confidence, t.key))
    return out


def write_eav(tuples: Iterable[EAVTuple], fh) -> None:
    fh.write("entity\tattribute\tvalue\tconfidence\tprovenance_count\n")
    for t in tuples:
        fh.write(f"{t.entity}\t{t.attribute}\t{t.value}\t{t.confidence:.6f}\t{len(t.provenance)}\n")


def read_eav(path) -> list[EAVTuple]:
    out = []
    for lineno, p in _tsv_rows(path, 5, "entity<TAB>attribute<TAB>value<TAB>confidence<TAB>count"):
        if p[0] == "entity" and p[3] == "confidence":
            continue
        out.append(EAVTuple(p[0], p[1], p[2], float(p[3]), ("?",) * int(p[4])))
    return out


@dataclass(frozen=True)
class GoldTuple:
    entity: str
    attribute: str
    value: str
    label: bool

    @property
    def key(self) -> tuple[str, str, str]:
        return (normalize_value(self.entity), self.attribute, normalize_value(self.value))


def read_gold(path) -> list[GoldTuple]:
    out = []
    for lineno, p in _tsv_rows(path, 4, "entity<TAB>attribute<TAB>value<TAB>0|1"):
        if p[3] not in ("0", "1"):
            raise ParseError("gold label must be 0 or 1", lineno)
        out.append(GoldTuple(p[0], p[1], p[2], p[3] == "1"))
    return out


def write_gold(gold: Iterable[GoldTuple], fh) -> None:
    for g in gold:
        fh.write(f"{g.entity}\t{g.attribute}\t{g.value}\t{int(g.label)}\n")


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    auc: float
    n_predicted: int
    n_correct: int
    n_gold: int
    curve: tuple[tuple[float, float, float], ...]  # (threshold, precision, recall)

    def as_text(self) -> str:
        rows = [("precision", self.precision), ("recall", self.recall), ("f1", self.f1), ("auc", self.auc)]
        text = "".join(f"{k}={v:.6f}\n" for k, v in rows)
        return text + f"n_predicted={self.n_predicted}\nn_correct={self.n_correct}\nn_gold={self.n_gold}\n"

    def curve_csv(self) -> str:
        return "threshold,precision,recall\n" + "".join(f"{t:.6f},{p:.6f},{r:.6f}\n" for t, p, r in self.curve)


def pr_auc(curve: Sequence[tuple[float, float, float]]) -> float:
    """Trapezoidal area under (recall, precision), starting at recall 0 with the
    first point's precision."""
    if not curve:
        return 0.0
    pts = [(0.0, curve[0][1])] + [(r, p) for _, p, r in curve]
    return math.fsum((r1 - r0) * (p0 + p1) / 2 for (r0, p0), (r1, p1) in zip(pts, pts[1:]))


def evaluate(predicted: Sequence[EAVTuple], gold: Sequence[GoldTuple]) -> Metrics:
    """Precision, recall, F1 and PR-AUC of predictions against labelled gold.

    Predictions missing from gold count as false positives. The curve has one
    point per distinct confidence, taking every prediction at or above it.
    """
    truth = {g.key for g in gold if g.label}
    if not truth:
        raise EmptyGold("gold has no true tuples")
    keys = {}
    for t in predicted:
        keys[t.key] = max(keys.get(t.key, 0.0), t.confidence)
    hits = [(c, k in truth) for k, c in keys.items()]
    tp = sum(h for _, h in hits)
    n = len(hits)
    p = tp / n if n else 0.0
    r = tp / len(truth)
    curve = []
    hits.sort(key=lambda x: -x[0])
    seen = correct = 0
    for k, (c, h) in enumerate(hits):
        seen += 1
        correct += h
        if k + 1 == len(hits) or hits[k + 1][0] != c:
            curve.append((c, correct / seen, correct / len(truth)))
    # 2tp / (n + |gold|) equals 2pr / (p + r) but rounds only once
    f1 = 2 * tp / (n + len(truth)) if tp else 0.0
    return Metrics(p, r, f1, pr_auc(curve), n, tp, len(truth), tuple(curve))
