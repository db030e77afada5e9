"""Contextual pattern features and the learned quality function Q(mp) in [0, 1]."""

from __future__ import annotations

import io
import logging
import math
import pickle
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Mapping

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .candidates import CandidateSet, Pattern, is_slot, literal_kind, parse_pattern, render
from .corpus import default_stopwords
from .errors import DegenerateLabels, ParseError

log = logging.getLogger(__name__)

MODEL_HEADER = b"METAPATTERN-QUALITY-MODEL v1\n"


def concordance_z(mp: Pattern, counts: Mapping[Pattern, int], L: int) -> float:
    """Best Z score of ``mp`` over all binary splits, under an independence null.

    For a split into left/right parts with empirical probabilities p_l, p_r the
    expected count is L * p_l * p_r and the binomial standard deviation is
    sqrt(L * q * (1 - q)) with q = p_l * p_r. Single symbols score 0.
    """
    if len(mp) < 2:
        return 0.0
    c = counts.get(mp, 0)
    best = None
    for k in range(1, len(mp)):
        q = (counts.get(mp[:k], 0) / L) * (counts.get(mp[k:], 0) / L)
        var = L * q * (1.0 - q)
        if var <= 0.0:
            continue
        z = (c - L * q) / math.sqrt(var)
        if best is None or z > best:
            best = z
    return 0.0 if best is None else best


@dataclass(frozen=True)
class FeatureVector:
    frequency: float
    concordance_z: float
    n_slots: int
    n_distinct_slots: int
    n_words: int
    n_phrases: int
    n_nonstop: int
    n_punct: int
    sub_ratio: float
    super_ratio: float
    first_is_stop: bool
    last_is_stop: bool
    coverage: int

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


FEATURE_NAMES = tuple(f.name for f in fields(FeatureVector))


def _is_stop(sym, stopwords):
    return not is_slot(sym) and sym.lower() in stopwords


def extract_features(mp: Pattern, cands: CandidateSet, stopwords: frozenset[str] | None = None,
                     rectified: bool = False, counts: Mapping[Pattern, int] | None = None) -> FeatureVector:
    """Feature vector of a candidate.

    ``rectified`` swaps the raw occurrence count for the post-segmentation count
    in the frequency feature; every other feature keeps using raw counts.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    if counts is None:
        counts = {p: st.raw_count for p, st in cands.stats.items()}
    st = cands[mp]
    c = st.raw_count
    slots = [s for s in mp if is_slot(s)]
    kinds = [literal_kind(s) for s in mp if not is_slot(s)]
    nonstop = sum(1 for s in mp if not is_slot(s) and literal_kind(s) != "punct" and s.lower() not in stopwords)

    if len(mp) > 1:
        sub_ratio = max(c / counts[sub] for sub in (mp[:-1], mp[1:]))
    else:
        sub_ratio = 0.0
    super_ratio = cands.max_super_count(mp) / c if c else 0.0

    return FeatureVector(
        frequency=float(st.rectified_count if rectified else c),
        concordance_z=concordance_z(mp, counts, cands.corpus_tokens),
        n_slots=len(slots),
        n_distinct_slots=len(set(slots)),
        n_words=kinds.count("word"),
        n_phrases=kinds.count("phrase"),
        n_nonstop=nonstop,
        n_punct=kinds.count("punct"),
        sub_ratio=min(sub_ratio, 1.0),
        super_ratio=min(super_ratio, 1.0),
        first_is_stop=_is_stop(mp[0], stopwords),
        last_is_stop=_is_stop(mp[-1], stopwords),
        coverage=st.coverage,
    )


def feature_matrix(patterns: Iterable[Pattern], cands: CandidateSet, stopwords=None, rectified=False) -> np.ndarray:
    counts = {p: st.raw_count for p, st in cands.stats.items()}
    rows = [extract_features(p, cands, stopwords, rectified, counts).as_array() for p in patterns]
    return np.vstack(rows) if rows else np.zeros((0, len(FEATURE_NAMES)))


@dataclass(frozen=True)
class PatternLabel:
    pattern: Pattern
    label: bool


def read_labels(path) -> list[PatternLabel]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1] not in ("0", "1"):
                raise ParseError("expected pattern<TAB>0|1", lineno)
            out.append(PatternLabel(parse_pattern(parts[0]), parts[1] == "1"))
    return out


def write_labels(labels: Iterable[PatternLabel], fh) -> None:
    for lab in labels:
        fh.write(f"{render(lab.pattern)}\t{int(lab.label)}\n")


class QualityModel:
    """Random-forest quality scorer over min-max scaled feature vectors."""

    def __init__(self, forest: RandomForestClassifier, lo: np.ndarray, hi: np.ndarray, n_labels: int, seed: int):
        self.forest = forest
        self.lo = lo
        self.hi = hi
        self.n_labels = n_labels
        self.seed = seed

    def _scale(self, X):
        span = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        return (np.asarray(X, dtype=float) - self.lo) / span

    def score_matrix(self, X: np.ndarray) -> np.ndarray:
        if len(X) == 0:
            return np.zeros(0)
        proba = self.forest.predict_proba(self._scale(X))
        pos = list(self.forest.classes_).index(1)
        return np.clip(proba[:, pos], 0.0, 1.0)

    def save(self, fh) -> None:
        state = {"forest": self.forest, "lo": self.lo, "hi": self.hi,
                 "n_labels": self.n_labels, "seed": self.seed, "features": FEATURE_NAMES}
        fh.write(MODEL_HEADER)
        pickle.dump(state, fh, protocol=4)

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.save(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, fh) -> "QualityModel":
        header = fh.readline()
        if header != MODEL_HEADER:
            raise ParseError(f"not a quality model file (header {header[:40]!r})")
        state = pickle.load(fh)
        if tuple(state["features"]) != FEATURE_NAMES:
            raise ParseError("quality model was trained on a different feature schema")
        return cls(state["forest"], state["lo"], state["hi"], state["n_labels"], state["seed"])


def fit_quality_model(X: np.ndarray, y: np.ndarray, seed: int = 0, n_trees: int = 100) -> QualityModel:
    y = np.asarray(y, dtype=int)
    if len(y) < 2 or len(set(y.tolist())) < 2:
        raise DegenerateLabels(f"need both classes among labels, got {len(y)} labels with classes {sorted(set(y.tolist()))}")
    X = np.asarray(X, dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    model = QualityModel(None, lo, hi, len(y), seed)
    forest = RandomForestClassifier(n_estimators=n_trees, random_state=seed, min_samples_leaf=1)
    forest.fit(model._scale(X), y)
    model.forest = forest
    return model


def train_quality_model(labels: list[PatternLabel], cands: CandidateSet, seed: int = 0, stopwords=None,
                        rectified: bool = False, n_trees: int = 100) -> QualityModel:
    """Fit Q on the labelled patterns that are present in ``cands``."""
    usable = [lab for lab in labels if lab.pattern in cands]
    if len(usable) < len(labels):
        log.info("%d of %d labels are not candidates at level %s and are ignored",
                 len(labels) - len(usable), len(labels), cands.level)
    X = feature_matrix([lab.pattern for lab in usable], cands, stopwords, rectified)
    y = np.array([int(lab.label) for lab in usable], dtype=int)
    return fit_quality_model(X, y, seed, n_trees)


def score(model: QualityModel, fv: FeatureVector) -> float:
    return float(model.score_matrix(fv.as_array()[None, :])[0])


def score_candidates(model: QualityModel, cands: CandidateSet, stopwords=None, rectified=False) -> dict[Pattern, float]:
    pats = list(cands.stats)
    q = model.score_matrix(feature_matrix(pats, cands, stopwords, rectified))
    return dict(zip(pats, q.tolist()))
