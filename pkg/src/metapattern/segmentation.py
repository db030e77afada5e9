"""Quality-driven sentence segmentation, frequency rectification and extraction.

Each sentence is partitioned into contiguous segments maximizing the summed
segment score: a span matching a candidate whose quality is at least
``q_min`` scores that quality, any other single token scores ``delta``, and
longer unmatched spans are not allowed. The optimum is found by dynamic
programming over prefix boundaries (right to left), with ties broken toward
fewer segments and then toward the longest leftmost segment.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .candidates import CandidateSet, Pattern, generalize, slot_positions
from .corpus import Corpus, Sentence
from .quality import PatternLabel, QualityModel, score_candidates, train_quality_model

log = logging.getLogger(__name__)

DEFAULT_Q_MIN = 0.5
DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    pattern: Pattern
    quality: float
    matched: bool

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class Segmentation:
    sentence: Sentence
    segments: tuple[Segment, ...]

    @property
    def total(self) -> float:
        return math.fsum(s.quality for s in self.segments)


class Segmenter:
    def __init__(self, scores: Mapping[Pattern, float], q_min: float = DEFAULT_Q_MIN,
                 delta: float = DEFAULT_DELTA, max_len: int = 20):
        self.scores = dict(scores)
        self.q_min = q_min
        self.delta = delta
        self.max_len = max_len
        prefixes = set()
        for p in self.scores:
            for k in range(1, len(p) + 1):
                prefixes.add(p[:k])
        self.prefixes = prefixes

    def segment_symbols(self, seq: Pattern) -> list[Segment]:
        n = len(seq)
        # best[i] = (total, -segments) for the suffix starting at i
        best: list[tuple[float, int]] = [(0.0, 0)] * (n + 1)
        choice: list[tuple[int, float, bool]] = [(0, 0.0, False)] * n
        for i in range(n - 1, -1, -1):
            top = None
            for j in range(i + 1, min(n, i + self.max_len) + 1):
                p = seq[i:j]
                if j > i + 1 and p not in self.prefixes:
                    break
                q = self.scores.get(p)
                if q is not None and q >= self.q_min:
                    val, matched = q, True
                elif j == i + 1:
                    val, matched = self.delta, False
                else:
                    continue
                tail_total, tail_neg = best[j]
                key = (val + tail_total, tail_neg - 1)
                if top is None or key >= top:
                    top = key
                    choice[i] = (j, val, matched)
            best[i] = top
        segs = []
        i = 0
        while i < n:
            j, val, matched = choice[i]
            segs.append(Segment(i, j, seq[i:j], val, matched))
            i = j
        return segs

    def segment_sentence(self, sentence: Sentence, level: str = "fine") -> Segmentation:
        return Segmentation(sentence, tuple(self.segment_symbols(generalize(sentence, level))))


def segment_sentence(sentence: Sentence, scores: Mapping[Pattern, float], level: str = "fine",
                     q_min: float = DEFAULT_Q_MIN, delta: float = DEFAULT_DELTA, max_len: int = 20) -> Segmentation:
    return Segmenter(scores, q_min, delta, max_len).segment_sentence(sentence, level)


_worker_segmenter: Segmenter | None = None


def _init_worker(segmenter):
    global _worker_segmenter
    _worker_segmenter = segmenter


def _segment_chunk(seqs):
    return [_worker_segmenter.segment_symbols(seq) for seq in seqs]


def segment_corpus(corpus: Corpus, segmenter: Segmenter, level: str, threads: int = 1) -> list[Segmentation]:
    """Segment every sentence. With ``threads > 1`` sentences are split into
    fixed contiguous chunks and processed by a worker pool; output order and
    content do not depend on the worker count."""
    seqs = [generalize(s, level) for s in corpus]
    if threads > 1 and len(seqs) > 1:
        size = max(1, math.ceil(len(seqs) / (threads * 4)))
        chunks = [seqs[k:k + size] for k in range(0, len(seqs), size)]
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker, initargs=(segmenter,)) as ex:
            parts = [segs for chunk in ex.map(_segment_chunk, chunks) for segs in chunk]
    else:
        parts = [segmenter.segment_symbols(seq) for seq in seqs]
    return [Segmentation(s, tuple(segs)) for s, segs in zip(corpus, parts)]


def rectify_counts(segmentations: Sequence[Segmentation], cands: CandidateSet | None = None) -> dict[Pattern, int]:
    """Count matched segments per pattern; stores them as rectified counts when ``cands`` is given."""
    c_r: dict[Pattern, int] = {}
    for seg in segmentations:
        for s in seg.segments:
            if s.matched:
                c_r[s.pattern] = c_r.get(s.pattern, 0) + 1
    if cands is not None:
        cands.reset_rectified()
        for p, c in c_r.items():
            cands[p].rectified_count = c
    return c_r


@dataclass(frozen=True)
class Extraction:
    pattern: Pattern
    bindings: tuple[str, ...]  # one per slot, in pattern order
    paths: tuple[tuple[str, ...], ...]  # entity type path, or (DATA_TYPE,) for data slots
    doc_id: str
    sentence_index: int
    start: int

    @property
    def provenance(self) -> str:
        return f"{self.doc_id}:{self.sentence_index}:{self.start}"


def extraction_from_span(pattern: Pattern, sentence: Sentence, start: int) -> Extraction:
    toks = [sentence.tokens[start + k] for k in slot_positions(pattern)]
    paths = tuple(t.type_path if t.type_path else (t.data_type,) for t in toks)
    doc, idx = sentence.key
    return Extraction(pattern, tuple(t.value for t in toks), paths, doc, idx, start)


def emit_extractions(segmentations: Sequence[Segmentation]) -> list[Extraction]:
    out = []
    for seg in segmentations:
        for s in seg.segments:
            if s.matched and slot_positions(s.pattern):
                out.append(extraction_from_span(s.pattern, seg.sentence, s.start))
    return out


@dataclass
class FeedbackResult:
    initial_model: QualityModel
    model: QualityModel
    initial_scores: dict[Pattern, float]
    scores: dict[Pattern, float]
    initial_rectified: dict[Pattern, int]
    rectified: dict[Pattern, int]
    segmentations: list[Segmentation]
    quality_patterns: dict[Pattern, float]
    iterations: int
    trainings: int


def run_feedback_loop(corpus: Corpus, labels: list[PatternLabel], cands: CandidateSet, seed: int = 0,
                      q_min: float = DEFAULT_Q_MIN, delta: float = DEFAULT_DELTA, stopwords=None,
                      threads: int = 1, n_trees: int = 100, initial_model: QualityModel | None = None) -> FeedbackResult:
    """Segment with Q, rectify counts, re-learn Q on rectified frequency, segment again.

    Exactly one feedback iteration is performed. Returned quality patterns have
    final quality >= ``q_min`` and final rectified count >= ``cands.min_sup``.
    """
    trainings = 0
    if initial_model is None:
        initial_model = train_quality_model(labels, cands, seed, stopwords, rectified=False, n_trees=n_trees)
        trainings += 1
    scores0 = score_candidates(initial_model, cands, stopwords, rectified=False)
    segs0 = segment_corpus(corpus, Segmenter(scores0, q_min, delta, cands.max_len), cands.level, threads)
    c_r0 = rectify_counts(segs0, cands)
    log.info("first pass: %d patterns matched", len(c_r0))

    model = train_quality_model(labels, cands, seed, stopwords, rectified=True, n_trees=n_trees)
    trainings += 1
    scores1 = score_candidates(model, cands, stopwords, rectified=True)
    segs1 = segment_corpus(corpus, Segmenter(scores1, q_min, delta, cands.max_len), cands.level, threads)
    c_r1 = rectify_counts(segs1, cands)

    quality = {p: q for p, q in scores1.items() if q >= q_min and c_r1.get(p, 0) >= cands.min_sup}
    log.info("second pass: %d quality patterns", len(quality))
    return FeedbackResult(initial_model, model, scores0, scores1, c_r0, c_r1, segs1, quality, 1, trainings)


def format_segmentation(seg: Segmentation, ids: Mapping[Pattern, str]) -> str:
    parts = []
    for s in seg.segments:
        surf = " ".join(t.surface for t in seg.sentence.tokens[s.start:s.end])
        parts.append(f"[{ids[s.pattern]} {surf}]" if s.matched else surf)
    doc, idx = seg.sentence.key
    return f"{doc}:{idx}\t" + " ".join(parts)
