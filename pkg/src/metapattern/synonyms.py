"""Synonymous pattern grouping.

Patterns with identical slot-type multisets are scored pairwise by a learned
regressor over context-word and shared-extraction features; pairs scoring at
least ``tau`` become edges, and every maximal clique of the resulting graph is
a synonym group.
"""

from __future__ import annotations

import io
import logging
import pickle
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVR

from .candidates import (
    Pattern,
    canonical_slots,
    is_slot,
    literal_kind,
    normalize_value,
    parse_pattern,
    render,
    slot_positions,
    slot_signature,
)
from .corpus import default_stopwords
from .embeddings import EmbeddingTable
from .errors import CliqueBudgetExceeded, DegenerateLabels, ParseError, TypeMismatch
from .segmentation import Extraction

log = logging.getLogger(__name__)

MODEL_HEADER = b"METAPATTERN-SYNONYM-MODEL v1\n"
DEFAULT_TAU = 0.5
DEFAULT_CLIQUE_BUDGET = 100_000


@dataclass(frozen=True)
class PatternGroup:
    members: tuple[Pattern, ...]
    extractions: tuple[Extraction, ...] = ()
    attribute: str | None = None
    diagnostics: tuple = ()

    @property
    def signature(self) -> tuple[str, ...]:
        return slot_signature(self.members[0])


def extraction_key(ext: Extraction) -> tuple[str, ...]:
    """Binding tuple in canonical slot order, normalized; provenance ignored."""
    order = slot_positions(ext.pattern)
    return tuple(normalize_value(ext.bindings[order.index(pos)]) for pos in canonical_slots(ext.pattern))


def extraction_index(extractions: Iterable[Extraction]) -> dict[Pattern, set[tuple[str, ...]]]:
    index: dict[Pattern, set] = defaultdict(set)
    for e in extractions:
        index[e.pattern].add(extraction_key(e))
    return dict(index)


def _literals(p: Pattern, stopwords):
    words = {s.lower() for s in p if not is_slot(s) and literal_kind(s) == "word"}
    phrases = {s.lower() for s in p if not is_slot(s) and literal_kind(s) == "phrase"}
    nonstop = {w for w in words | phrases if w not in stopwords}
    return words, nonstop, phrases


@dataclass(frozen=True)
class PairFeatureVector:
    words: tuple[int, int, int]  # (pattern i, pattern j, shared)
    nonstop: tuple[int, int, int]
    phrases: tuple[int, int, int]
    max_similarity: float
    extractions: tuple[int, int, int]

    def mirrored(self) -> "PairFeatureVector":
        def sw(t):
            return (t[1], t[0], t[2])
        return PairFeatureVector(sw(self.words), sw(self.nonstop), sw(self.phrases),
                                 self.max_similarity, sw(self.extractions))

    def as_array(self) -> np.ndarray:
        """Order-free encoding, so any model over it scores (i, j) and (j, i) alike."""
        row = []
        for a, b, s in (self.words, self.nonstop, self.phrases):
            row += [min(a, b), max(a, b), s, s / max(a, b, 1)]
        a, b, s = self.extractions
        row += [self.max_similarity, np.log1p(min(a, b)), np.log1p(max(a, b)), np.log1p(s),
                s / max(min(a, b), 1), s / max(a + b - s, 1)]
        return np.array(row, dtype=float)


def pair_features(mp_i: Pattern, mp_j: Pattern, ext_index: Mapping[Pattern, set],
                  embeddings: EmbeddingTable | None, stopwords=None) -> PairFeatureVector:
    if slot_signature(mp_i) != slot_signature(mp_j):
        raise TypeMismatch(f"{render(mp_i)!r} and {render(mp_j)!r} have different slot types")
    if stopwords is None:
        stopwords = default_stopwords()
    wi, ni, pi = _literals(mp_i, stopwords)
    wj, nj, pj = _literals(mp_j, stopwords)
    best = 0.0
    if embeddings is not None and ni and nj:
        best = max(embeddings.similarity(a, b) for a in sorted(ni) for b in sorted(nj))
    ei, ej = ext_index.get(mp_i, set()), ext_index.get(mp_j, set())
    return PairFeatureVector(
        (len(wi), len(wj), len(wi & wj)),
        (len(ni), len(nj), len(ni & nj)),
        (len(pi), len(pj), len(pi & pj)),
        best,
        (len(ei), len(ej), len(ei & ej)),
    )


class SynonymModel:
    """Support-vector regressor on pair features, clamped to [0, 1]."""

    def __init__(self, pipeline):
        self.pipeline = pipeline

    def score_matrix(self, X) -> np.ndarray:
        if len(X) == 0:
            return np.zeros(0)
        return np.clip(self.pipeline.predict(np.asarray(X, dtype=float)), 0.0, 1.0)

    def save(self, fh):
        fh.write(MODEL_HEADER)
        pickle.dump(self.pipeline, fh, protocol=4)

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.save(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, fh) -> "SynonymModel":
        if fh.readline() != MODEL_HEADER:
            raise ParseError("not a synonym model file")
        return cls(pickle.load(fh))


def train_synonym_model(pairs: Sequence[PairFeatureVector], scores: Sequence[float],
                        C: float = 1.0, epsilon: float = 0.05) -> SynonymModel:
    y = np.asarray(scores, dtype=float)
    if len(y) < 2 or np.ptp(y) == 0:
        raise DegenerateLabels("synonym labels need at least two pairs with different scores")
    if y.min() < 0 or y.max() > 1:
        raise DegenerateLabels("synonym scores must lie in [0, 1]")
    X = np.vstack([p.as_array() for p in pairs])
    pipe = make_pipeline(StandardScaler(), SVR(kernel="rbf", C=C, epsilon=epsilon, gamma="scale"))
    pipe.fit(X, y)
    return SynonymModel(pipe)


def score_pair(model: SynonymModel, pfv: PairFeatureVector) -> float:
    return float(model.score_matrix(pfv.as_array()[None, :])[0])


def read_pair_labels(path) -> list[tuple[Pattern, Pattern, float]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError("expected pattern_i<TAB>pattern_j<TAB>score", lineno)
            out.append((parse_pattern(parts[0]), parse_pattern(parts[1]), float(parts[2])))
    return out


def train_from_pair_labels(labelled, ext_index, embeddings, stopwords=None) -> SynonymModel:
    feats, ys = [], []
    for a, b, y in labelled:
        try:
            feats.append(pair_features(a, b, ext_index, embeddings, stopwords))
        except TypeMismatch:
            log.warning("skipping pair label with different slot types: %s / %s", render(a), render(b))
            continue
        ys.append(y)
    return train_synonym_model(feats, ys)


Graph = dict[Hashable, set]


def build_synonym_graph(patterns: Iterable[Pattern], model: SynonymModel, tau: float,
                        ext_index: Mapping[Pattern, set], embeddings: EmbeddingTable | None,
                        stopwords=None) -> Graph:
    """Edges join same-signature pairs whose predicted synonymy is at least ``tau``."""
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    patterns = sorted(set(patterns))
    graph: Graph = {p: set() for p in patterns}
    buckets = defaultdict(list)
    for p in patterns:
        buckets[slot_signature(p)].append(p)
    for sig in sorted(buckets):
        pairs = list(combinations(buckets[sig], 2))
        if not pairs:
            continue
        X = np.vstack([pair_features(a, b, ext_index, embeddings, stopwords).as_array() for a, b in pairs])
        for (a, b), s in zip(pairs, model.score_matrix(X)):
            if s >= tau:
                graph[a].add(b)
                graph[b].add(a)
    return graph


def _components(graph: Graph):
    seen = set()
    for start in sorted(graph):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in graph[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        yield sorted(comp)


def find_cliques(graph: Graph, budget: int = DEFAULT_CLIQUE_BUDGET) -> list[frozenset]:
    """All maximal cliques (isolated nodes included as singletons).

    Bron-Kerbosch with Tomita pivoting, run per connected component. Raises
    CliqueBudgetExceeded once more than ``budget`` cliques have been found.
    """
    nbrs = {v: set(graph[v]) - {v} for v in graph}
    out: list[frozenset] = []

    def expand(R, P, X):
        if not P and not X:
            out.append(frozenset(R))
            if len(out) > budget:
                raise CliqueBudgetExceeded(f"more than {budget} maximal cliques; raise tau or the budget")
            return
        pivot = max(sorted(P | X), key=lambda u: len(P & nbrs[u]))
        for v in sorted(P - nbrs[pivot]):
            expand(R + [v], P & nbrs[v], X & nbrs[v])
            P = P - {v}
            X = X | {v}

    for comp in _components(nbrs):
        expand([], set(comp), set())
    return out


def group_patterns(cliques: Iterable[frozenset], extractions: Iterable[Extraction]) -> list[PatternGroup]:
    by_pattern = defaultdict(list)
    for e in extractions:
        by_pattern[e.pattern].append(e)
    groups = []
    for clique in cliques:
        members = tuple(sorted(clique))
        pooled = tuple(e for m in members for e in by_pattern.get(m, ()))
        groups.append(PatternGroup(members, pooled))
    return sort_groups(groups)


def sort_groups(groups: Iterable[PatternGroup]) -> list[PatternGroup]:
    return sorted(groups, key=lambda g: tuple(render(m) for m in g.members))


def singleton_groups(patterns: Iterable[Pattern], extractions: Iterable[Extraction]) -> list[PatternGroup]:
    return group_patterns((frozenset([p]) for p in set(patterns)), extractions)
