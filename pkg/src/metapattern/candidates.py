"""Frequent contiguous pattern candidates over generalized sentences.

A pattern is a tuple of symbols. Type slots are written ``$TYPE``; every other
symbol is a literal (lower-cased for words and phrases, verbatim for
punctuation). Literals that would read as a slot are escaped with a leading
backslash.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .corpus import Corpus, Kind, Sentence, Token
from .errors import InvalidParams, ParseError

log = logging.getLogger(__name__)

Pattern = tuple[str, ...]

LEVELS = ("coarse", "fine")


def is_slot(sym: str) -> bool:
    return sym.startswith("$")


def slot_type(sym: str) -> str:
    return sym[1:]


def render(p: Pattern) -> str:
    return " ".join(p)


def parse_pattern(text: str) -> Pattern:
    syms = tuple(text.split())
    if not syms:
        raise ParseError(f"empty pattern {text!r}")
    return syms


def slot_positions(p: Pattern) -> list[int]:
    return [i for i, s in enumerate(p) if is_slot(s)]


def slot_signature(p: Pattern) -> tuple[str, ...]:
    """Sorted multiset of slot types; two patterns can only be synonyms if these agree."""
    return tuple(sorted(slot_type(s) for s in p if is_slot(s)))


def canonical_slots(p: Pattern) -> list[int]:
    """Slot positions ordered by (type, position) so bindings line up across word orders."""
    return sorted(slot_positions(p), key=lambda i: (p[i], i))


def literal_kind(sym: str) -> str:
    """'word', 'phrase' or 'punct' for a literal symbol."""
    if not any(c.isalnum() for c in sym):
        return "punct"
    return "phrase" if "_" in sym.strip("_") else "word"


def symbol(tok: Token, level: str = "fine") -> str:
    if tok.kind is Kind.ENTITY:
        return "$" + (tok.type_path[0] if level == "coarse" else tok.type_path[-1])
    if tok.kind is Kind.DATA:
        return "$" + tok.data_type
    lit = tok.surface if tok.kind is Kind.PUNCT else tok.surface.lower()
    if lit[0] in "$\\":
        lit = "\\" + lit
    return lit


def generalize(sentence: Sentence, level: str = "fine") -> Pattern:
    """Replace entities by their type at ``level`` (coarse = top of the type path, fine = leaf)."""
    if level not in LEVELS:
        raise InvalidParams(f"unknown type level {level!r}")
    return tuple(symbol(t, level) for t in sentence.tokens)


def normalize_value(text: str) -> str:
    return " ".join(text.replace("_", " ").split()).casefold()


@dataclass
class CandidateStats:
    raw_count: int
    rectified_count: int = 0
    # slot position -> distinct normalized values bound there
    slot_entities: dict[int, set[str]] = field(default_factory=dict)

    @property
    def coverage(self) -> int:
        if not self.slot_entities:
            return 0
        return min(len(v) for v in self.slot_entities.values())


class CandidateSet:
    """Frequent patterns of one type level with their corpus statistics."""

    def __init__(self, stats: dict[Pattern, CandidateStats], corpus_tokens: int,
                 min_sup: int, max_len: int, level: str):
        self.stats = stats
        self.corpus_tokens = corpus_tokens
        self.min_sup = min_sup
        self.max_len = max_len
        self.level = level
        self._supers: dict[Pattern, int] | None = None

    def __contains__(self, p):
        return p in self.stats

    def __getitem__(self, p) -> CandidateStats:
        return self.stats[p]

    def __len__(self):
        return len(self.stats)

    def __iter__(self) -> Iterator[Pattern]:
        return iter(self.stats)

    def count(self, p: Pattern) -> int:
        st = self.stats.get(p)
        return st.raw_count if st else 0

    def max_super_count(self, p: Pattern) -> int:
        """Largest raw count among candidates that extend ``p`` by one symbol."""
        if self._supers is None:
            sup: dict[Pattern, int] = {}
            for q, st in self.stats.items():
                if len(q) > 1:
                    for sub in (q[:-1], q[1:]):
                        if st.raw_count > sup.get(sub, 0):
                            sup[sub] = st.raw_count
            self._supers = sup
        return self._supers.get(p, 0)

    def ordered(self) -> list[Pattern]:
        """Stable artifact order: most frequent first, ties by rendering."""
        return sorted(self.stats, key=lambda p: (-self.stats[p].raw_count, render(p)))

    def ids(self) -> dict[Pattern, str]:
        return {p: f"c{i}" for i, p in enumerate(self.ordered(), 1)}

    def reset_rectified(self):
        for st in self.stats.values():
            st.rectified_count = 0

    def to_tsv(self) -> str:
        lines = [f"# level={self.level} min_sup={self.min_sup} max_len={self.max_len} L={self.corpus_tokens}"]
        for p in self.ordered():
            st = self.stats[p]
            lines.append(f"{render(p)}\t{st.raw_count}\t{st.rectified_count}")
        return "\n".join(lines) + "\n"


def _encode(corpus: Corpus, level: str):
    vocab: dict[str, int] = {}
    seqs = []
    for s in corpus:
        seqs.append([vocab.setdefault(sym, len(vocab)) for sym in generalize(s, level)])
    return vocab, seqs


def mine_candidates(corpus: Corpus, min_sup: int = 5, max_len: int = 20, level: str = "fine") -> CandidateSet:
    """All contiguous patterns of length <= ``max_len`` seen at least ``min_sup`` times.

    Level-wise: an n-gram is only counted where both its (n-1)-prefix and
    (n-1)-suffix are frequent, which is exact by anti-monotonicity and keeps
    the result closed under sub-patterns.
    """
    if min_sup < 1 or max_len < 1:
        raise InvalidParams(f"need min_sup >= 1 and max_len >= 1, got {min_sup}, {max_len}")
    vocab, seqs = _encode(corpus, level)
    inv = {v: k for k, v in vocab.items()}

    uni = Counter()
    for seq in seqs:
        uni.update(seq)
    counts: dict[tuple[int, ...], int] = {(s,): c for s, c in uni.items() if c >= min_sup}
    alive = [[i for i, s in enumerate(seq) if (s,) in counts] for seq in seqs]

    n = 1
    while n < max_len and any(alive):
        n += 1
        level_counts: Counter = Counter()
        grams = []
        for seq, starts in zip(seqs, alive):
            ok = set(starts)
            gs = [(i, tuple(seq[i:i + n])) for i in starts if i + n <= len(seq) and i + 1 in ok]
            grams.append(gs)
            level_counts.update(g for _, g in gs)
        frequent = {g: c for g, c in level_counts.items() if c >= min_sup}
        counts.update(frequent)
        alive = [[i for i, g in gs if g in frequent] for gs in grams]
        log.debug("length %d: %d frequent", n, len(frequent))

    stats = {tuple(inv[s] for s in g): CandidateStats(c) for g, c in counts.items()}
    cands = CandidateSet(stats, corpus.total_tokens, min_sup, max_len, level)
    collect_slot_entities(corpus, cands)
    return cands


def iter_matches(seq: Pattern, contains, max_len: int) -> Iterator[tuple[int, int]]:
    """(start, end) of every span of ``seq`` that is a candidate.

    Relies on sub-pattern closure: once a span is not a candidate no extension is.
    """
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, min(n, i + max_len) + 1):
            if not contains(seq[i:j]):
                break
            yield i, j


def collect_slot_entities(corpus: Corpus, cands: CandidateSet) -> None:
    for st in cands.stats.values():
        st.slot_entities = {}
    for s in corpus:
        seq = generalize(s, cands.level)
        values = [normalize_value(t.value) if t.is_slot else None for t in s.tokens]
        for i, j in iter_matches(seq, cands.stats.__contains__, cands.max_len):
            p = seq[i:j]
            ents = cands.stats[p].slot_entities
            for k in range(i, j):
                if values[k] is not None:
                    ents.setdefault(k - i, set()).add(values[k])


def corpus_frequency_table(corpus: Corpus, level: str = "fine", patterns: Iterable[Pattern] | None = None,
                           max_len: int = 20) -> tuple[dict[Pattern, int], int]:
    """Exact occurrence counts by direct scanning, plus the corpus size L.

    With ``patterns`` given, counts exactly those patterns and their single
    symbols (absent ones map to 0); otherwise every n-gram up to ``max_len``.
    """
    targets = None
    if patterns is not None:
        targets = set()
        for p in patterns:
            targets.add(tuple(p))
            targets.update((s,) for s in p)
        lengths = sorted({len(p) for p in targets})
    else:
        lengths = range(1, max_len + 1)
    table: Counter = Counter()
    for s in corpus:
        seq = generalize(s, level)
        for n in lengths:
            for i in range(len(seq) - n + 1):
                g = seq[i:i + n]
                if targets is None or g in targets:
                    table[g] += 1
    out = dict(table)
    if targets is not None:
        for p in targets:
            out.setdefault(p, 0)
    return out, corpus.total_tokens


def read_candidates_tsv(path, corpus: Corpus) -> CandidateSet:
    """Load a candidates artifact; slot entity sets are rebuilt from ``corpus``."""
    meta = {}
    stats = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                meta.update(kv.split("=", 1) for kv in line[1:].split())
                continue
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError("expected pattern<TAB>raw<TAB>rectified", lineno)
            stats[parse_pattern(parts[0])] = CandidateStats(int(parts[1]), int(parts[2]))
    try:
        cands = CandidateSet(stats, int(meta["L"]), int(meta["min_sup"]), int(meta["max_len"]), meta["level"])
    except KeyError as e:
        raise ParseError(f"candidates header lacks {e}") from None
    collect_slot_entities(corpus, cands)
    return cands
