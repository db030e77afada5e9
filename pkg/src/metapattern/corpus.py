"""Typed-corpus data model, file formats, and rule-based data-type tagging.

A typed corpus is stored one sentence per line. Each token is encoded as
``kind|surface|mention|type_path`` with empty fields omitted for kinds that do
not carry them::

    E|United_States|United States|LOCATION>COUNTRY W|president E|Barack_Obama|Barack Obama|PERSON>POLITICIAN

A line may be prefixed with ``doc_id<TAB>`` to attach a document identifier.
``|`` and ``\\`` inside fields are backslash-escaped. Entity mentions may
contain spaces; every other field may not.
"""

from __future__ import annotations

import enum
import functools
import io
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, TextIO

from .errors import (
    EmptyCorpus,
    InvalidOntology,
    InvalidTypePath,
    ParseError,
    ValidationError,
)

DATA_TYPES = ("DIGIT", "DIGITUNIT", "DIGITRANK", "MONTH", "DAY", "YEAR")

_BAD_NAME = re.compile(r"[\s|>$\\]")


class Kind(str, enum.Enum):
    ENTITY = "E"
    DATA = "D"
    WORD = "W"
    PHRASE = "P"
    PUNCT = "M"


_N_FIELDS = {Kind.ENTITY: 4, Kind.DATA: 3, Kind.WORD: 2, Kind.PHRASE: 2, Kind.PUNCT: 2}


@dataclass(frozen=True)
class Token:
    kind: Kind
    surface: str
    mention: str | None = None
    type_path: tuple[str, ...] = ()
    data_type: str | None = None

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValidationError(f"bad token surface {self.surface!r}")
        if self.kind is Kind.ENTITY:
            if not self.mention or not self.type_path:
                raise ValidationError(f"entity token {self.surface!r} needs a mention and a type path")
        elif self.mention is not None or self.type_path:
            raise ValidationError(f"{self.kind.name} token {self.surface!r} cannot carry a mention or type path")
        if self.kind is Kind.DATA:
            if self.data_type not in DATA_TYPES:
                raise ValidationError(f"unknown data type {self.data_type!r}")
        elif self.data_type is not None:
            raise ValidationError(f"{self.kind.name} token cannot carry a data type")

    @property
    def is_slot(self) -> bool:
        return self.kind in (Kind.ENTITY, Kind.DATA)

    @property
    def value(self) -> str:
        """What a pattern slot binds to: the mention for entities, the surface otherwise."""
        return self.mention if self.kind is Kind.ENTITY else self.surface


def entity(surface, mention, *type_path):
    return Token(Kind.ENTITY, surface, mention, tuple(type_path))


def word(surface):
    return Token(Kind.WORD, surface)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    doc_id: str | None = None
    sentence_index: int = 0

    def __post_init__(self):
        if not self.tokens:
            raise ValidationError("empty sentence")
        if self.sentence_index < 0:
            raise ValidationError("negative sentence index")

    def __len__(self):
        return len(self.tokens)

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id or "-", self.sentence_index)


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    total_tokens: int = field(init=False)

    def __post_init__(self):
        n = sum(len(s) for s in self.sentences)
        if n == 0:
            raise EmptyCorpus("corpus has no tokens")
        keys = set()
        for s in self.sentences:
            if s.key in keys:
                raise ValidationError(f"duplicate sentence id {s.key}")
            keys.add(s.key)
        object.__setattr__(self, "total_tokens", n)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def index(self) -> dict[tuple[str, int], Sentence]:
        return {s.key: s for s in self.sentences}


# --------------------------------------------------------------------------
# Ontology


@dataclass(frozen=True)
class TypeOntology:
    root: str
    children: dict[str, tuple[str, ...]]
    parent: dict[str, str] = field(init=False, repr=False)
    height: int = field(init=False)

    def __post_init__(self):
        parent = {}
        for p, kids in self.children.items():
            for c in kids:
                if c in parent or c == self.root:
                    raise InvalidOntology(f"type {c} has more than one parent")
                parent[c] = p
        # every node must reach the root without revisiting anything
        for node in parent:
            seen = {node}
            cur = node
            while cur != self.root:
                if cur not in parent:
                    raise InvalidOntology(f"type {node} is not connected to root {self.root}")
                cur = parent[cur]
                if cur in seen:
                    raise InvalidOntology(f"cycle through {cur}")
                seen.add(cur)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "height", self._depth_below(self.root))

    def _depth_below(self, node):
        kids = self.children.get(node, ())
        return 1 + max(self._depth_below(k) for k in kids) if kids else 0

    def __contains__(self, name):
        return name == self.root or name in self.parent

    def subtypes(self, name) -> tuple[str, ...]:
        return self.children.get(name, ())

    def siblings(self, name) -> tuple[str, ...]:
        """Other children of ``name``'s parent (``name`` itself excluded)."""
        p = self.parent.get(name)
        if p is None:
            return ()
        return tuple(c for c in self.children[p] if c != name)

    def path_to(self, name) -> tuple[str, ...]:
        """Types from the top level down to ``name``, root excluded."""
        out = []
        while name != self.root:
            out.append(name)
            name = self.parent[name]
        return tuple(reversed(out))

    def is_ancestor_or_self(self, ancestor, name) -> bool:
        while True:
            if name == ancestor:
                return True
            if name not in self.parent:
                return False
            name = self.parent[name]

    def check_path(self, path: Iterable[str]) -> None:
        prev = self.root
        for t in path:
            if t not in self:
                raise InvalidTypePath(f"unknown type {t!r}")
            if self.parent.get(t) != prev:
                raise InvalidTypePath(f"type path {'>'.join(path)}: {t} is not a child of {prev}")
            prev = t

    def to_lines(self) -> list[str]:
        lines = []
        stack = [self.root]
        while stack:
            node = stack.pop(0)
            for c in self.children.get(node, ()):
                lines.append(f"{node}\t{c}")
                stack.append(c)
        return lines


def load_ontology(stream: Iterable[str] | str) -> TypeOntology:
    """Read ``parent<TAB>child`` lines (``#`` starts a comment) into a validated tree."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    children: dict[str, list[str]] = defaultdict(list)
    nodes = set()
    has_parent = set()
    for lineno, raw in enumerate(stream, 1):
        line = raw.split("#", 1)[0].rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not all(p.strip() for p in parts):
            raise InvalidOntology(f"line {lineno}: expected parent<TAB>child")
        p, c = (x.strip() for x in parts)
        for name in (p, c):
            if _BAD_NAME.search(name):
                raise InvalidOntology(f"line {lineno}: illegal type name {name!r}")
        if p == c:
            raise InvalidOntology(f"line {lineno}: self loop on {p}")
        if c in has_parent:
            raise InvalidOntology(f"line {lineno}: {c} has more than one parent")
        children[p].append(c)
        has_parent.add(c)
        nodes.update((p, c))
    roots = sorted(nodes - has_parent)
    if len(roots) != 1:
        raise InvalidOntology(f"expected exactly one root, found {roots or 'none (cycle)'}")
    return TypeOntology(roots[0], {k: tuple(v) for k, v in children.items()})


# --------------------------------------------------------------------------
# Typed-corpus file format


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace("|", "\\|")


def _split_fields(s: str) -> list[str]:
    fields, cur, i = [], [], 0
    while i < len(s):
        ch = s[i]
        if ch == "\\" and i + 1 < len(s):
            cur.append(s[i + 1])
            i += 2
            continue
        if ch == "|":
            fields.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    fields.append("".join(cur))
    return fields


def _count_pipes(s: str) -> int:
    n, i = 0, 0
    while i < len(s):
        if s[i] == "\\":
            i += 2
            continue
        n += s[i] == "|"
        i += 1
    return n


def format_token(tok: Token) -> str:
    if tok.kind is Kind.ENTITY:
        fields = [tok.surface, tok.mention, ">".join(tok.type_path)]
    elif tok.kind is Kind.DATA:
        fields = [tok.surface, tok.data_type]
    else:
        fields = [tok.surface]
    return tok.kind.value + "|" + "|".join(_escape(f) for f in fields)


def format_sentence(sentence: Sentence) -> str:
    body = " ".join(format_token(t) for t in sentence.tokens)
    return body if sentence.doc_id is None else f"{sentence.doc_id}\t{body}"


def write_corpus(corpus: Corpus, fh: TextIO) -> None:
    for s in corpus.sentences:
        fh.write(format_sentence(s) + "\n")


def _parse_tokens(body: str, lineno: int, ontology: TypeOntology | None) -> list[Token]:
    pieces = body.split(" ")
    tokens = []
    i = 0
    while i < len(pieces):
        piece = pieces[i]
        i += 1
        if not piece:
            continue
        try:
            kind = Kind(piece.split("|", 1)[0])
        except ValueError:
            raise ParseError(f"token {piece!r} has no valid kind prefix", lineno) from None
        need = _N_FIELDS[kind] - 1
        # entity mentions may contain spaces: keep consuming pieces until all fields are present
        while kind is Kind.ENTITY and _count_pipes(piece) < need and i < len(pieces):
            piece += " " + pieces[i]
            i += 1
        fields = _split_fields(piece)
        if len(fields) != need + 1:
            raise ParseError(f"token {piece!r} needs {need + 1} fields, got {len(fields)}", lineno)
        try:
            if kind is Kind.ENTITY:
                path = tuple(fields[3].split(">")) if fields[3] else ()
                if ontology is not None and path:
                    ontology.check_path(path)
                tokens.append(Token(kind, fields[1], fields[2], path))
            elif kind is Kind.DATA:
                tokens.append(Token(kind, fields[1], data_type=fields[2]))
            else:
                tokens.append(Token(kind, fields[1]))
        except InvalidTypePath as e:
            raise InvalidTypePath(f"line {lineno}: {e}") from None
        except ValidationError as e:
            raise ParseError(str(e), lineno) from None
    return tokens


def parse_typed_corpus(stream: Iterable[str] | str, ontology: TypeOntology | None = None) -> Corpus:
    """Parse typed-corpus lines into a :class:`Corpus`.

    Blank lines are skipped. Sentences without a ``doc_id`` prefix are numbered
    by their position among un-prefixed lines; prefixed ones are numbered within
    their document. When ``ontology`` is given, every entity type path is checked
    against it.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    counters: dict[str | None, int] = defaultdict(int)
    sentences = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        doc_id = None
        if "\t" in line:
            doc_id, line = line.split("\t", 1)
            if not doc_id or _BAD_NAME.search(doc_id.replace(">", "")):
                raise ParseError(f"bad doc id {doc_id!r}", lineno)
        tokens = _parse_tokens(line, lineno, ontology)
        if not tokens:
            continue
        sentences.append(Sentence(tuple(tokens), doc_id, counters[doc_id]))
        counters[doc_id] += 1
    if not sentences:
        raise EmptyCorpus("no sentences in input")
    return Corpus(tuple(sentences))


def read_corpus(path, ontology: TypeOntology | None = None) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_typed_corpus(fh, ontology)


def read_ontology(path) -> TypeOntology:
    with open(path, encoding="utf-8") as fh:
        return load_ontology(fh)


def validate_corpus(corpus: Corpus, ontology: TypeOntology) -> None:
    for s in corpus:
        for t in s.tokens:
            if t.kind is Kind.ENTITY:
                ontology.check_path(t.type_path)


# --------------------------------------------------------------------------
# Data-type tagging


@functools.lru_cache(maxsize=None)
def _rules():
    raw = json.loads(resources.files("metapattern").joinpath("data/datatypes.json").read_text("utf-8"))
    return {
        "digit": re.compile(raw["digit_pattern"]),
        "year": re.compile(raw["year_pattern"]),
        "rank": re.compile(raw["rank_pattern"], re.IGNORECASE),
        "unit": frozenset(raw["digit_unit"]),
        "rank_words": frozenset(raw["digit_rank"]),
        "month": raw["month"],
        "capitalized_only": frozenset(raw["capitalized_only"]),
        "day_range": tuple(raw["day_range"]),
    }


def classify_word(surface: str) -> str | None:
    """Data type for one raw word, ignoring context (DAY needs neighbours)."""
    r = _rules()
    low = surface.lower()
    if r["year"].match(surface):
        return "YEAR"
    if r["digit"].match(surface):
        return "DIGIT"
    if low in r["rank_words"] or r["rank"].match(surface):
        return "DIGITRANK"
    if low in r["unit"]:
        return "DIGITUNIT"
    if low.rstrip(".") in r["month"]:
        if low.rstrip(".") in r["capitalized_only"] and not surface[0].isupper():
            return None
        return "MONTH"
    return None


def tag_data_types(sentence: Sentence) -> Sentence:
    """Rewrite numeral/date words as data-type tokens; everything else passes through.

    A plain integer in the day range that sits next to a month becomes DAY.
    """
    toks = list(sentence.tokens)
    tagged = {}
    for i, t in enumerate(toks):
        if t.kind is Kind.WORD:
            dt = classify_word(t.surface)
            if dt is not None:
                tagged[i] = dt

    def is_month(j):
        if not 0 <= j < len(toks):
            return False
        return tagged.get(j) == "MONTH" or (toks[j].kind is Kind.DATA and toks[j].data_type == "MONTH")

    lo, hi = _rules()["day_range"]
    for i, dt in list(tagged.items()):
        if dt == "DIGIT" and toks[i].surface.isdigit() and lo <= int(toks[i].surface) <= hi:
            if is_month(i - 1) or is_month(i + 1):
                tagged[i] = "DAY"
    if not tagged:
        return sentence
    for i, dt in tagged.items():
        toks[i] = Token(Kind.DATA, toks[i].surface, data_type=dt)
    return Sentence(tuple(toks), sentence.doc_id, sentence.sentence_index)


def tag_corpus(corpus: Corpus) -> Corpus:
    return Corpus(tuple(tag_data_types(s) for s in corpus))


@functools.lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    text = resources.files("metapattern").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def load_stopwords(path=None) -> frozenset[str]:
    if path is None:
        return default_stopwords()
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip() and not w.startswith("#"))

