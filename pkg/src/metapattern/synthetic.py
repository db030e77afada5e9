"""Synthetic typed corpus with planted patterns and a ground-truth manifest.

Every planted template belongs to a synonym family. A family owns a table of
facts (entity, value); each planted instance picks a fact and realizes it
through one of the family's templates, so synonymous templates share
extractions. Distractor sentences mix filler words with random entities.
Filler never contains a template literal, commas, or numerals, which lets
the generator verify its planted counts by scanning its own output.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .candidates import Pattern, generalize, render
from .corpus import Corpus, Kind, Sentence, Token, TypeOntology, classify_word, default_stopwords, format_sentence, load_ontology, tag_corpus
from .errors import SpecError

ONTOLOGY = {
    "ROOT": ["LOCATION", "PERSON", "ORGANIZATION"],
    "LOCATION": ["COUNTRY", "ETHNICITY", "CITY", "STATE"],
    "PERSON": ["POLITICIAN", "ATHLETE", "ARTIST", "BUSINESSPERSON"],
    "ORGANIZATION": ["COMPANY", "UNIVERSITY", "PARTY"],
}


@dataclass(frozen=True)
class FamilySpec:
    """A synonym family: the entity slot ``{E}`` and value slot ``{V}`` of its templates.

    ``entity_types`` maps type paths (``>``-joined) to their share of facts;
    ``attributes`` maps the fine entity type to the attribute it expresses
    (types missing there produce gold-false tuples). A value type of ``DIGIT``
    draws integer values from ``value_range``.
    """

    name: str
    templates: tuple[str, ...]
    counts: tuple[int, ...]
    entity_types: dict[str, float]
    value_type: str
    attributes: dict[str, str]
    n_facts: int = 150
    value_range: tuple[int, int] = (18, 95)
    labelled: tuple[bool, ...] = ()


def default_families(scale: float = 1.0) -> tuple[FamilySpec, ...]:
    def n(k):
        return max(1, int(round(k * scale)))

    return (
        FamilySpec("president",
                   ("{E} president {V}", "president {V} of {E}", "{V} , the president of {E} ,"),
                   (n(700), n(700), n(700)),
                   {"LOCATION>COUNTRY": 0.62, "LOCATION>ETHNICITY": 0.35, "LOCATION>CITY": 0.03},
                   "PERSON>POLITICIAN",
                   {"COUNTRY": "country:president", "ETHNICITY": "ethnicity:president"},
                   n_facts=200, labelled=(True, False, True)),
        FamilySpec("prime_minister",
                   ("{E} prime_minister {V}", "prime_minister {V} of {E}"),
                   (n(600), n(600)),
                   {"LOCATION>COUNTRY": 1.0},
                   "PERSON>POLITICIAN",
                   {"COUNTRY": "country:prime_minister"},
                   labelled=(True, False)),
        FamilySpec("ceo",
                   ("{E} ceo {V}", "{V} , chief_executive of {E}"),
                   (n(600), n(600)),
                   {"ORGANIZATION>COMPANY": 1.0},
                   "PERSON>BUSINESSPERSON",
                   {"COMPANY": "company:ceo"},
                   labelled=(False, True)),
        FamilySpec("age",
                   ("{E} 's age is {V}", "{E} , {V} ,", "{V} -year-old {E}"),
                   (n(700), n(700), n(700)),
                   {"PERSON": 0.90, "PERSON>POLITICIAN": 0.06, "PERSON>ATHLETE": 0.04},
                   "DIGIT",
                   {"PERSON": "person:age", "POLITICIAN": "person:age", "ATHLETE": "person:age"},
                   n_facts=300, labelled=(True, True, False)),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    families: tuple[FamilySpec, ...] = field(default_factory=default_families)
    noise_rate: float = 0.2
    token_budget: int = 200_000
    vocab_size: int = 1500
    zipf_a: float = 1.1
    stopword_share: float = 0.25
    min_sup: int = 5
    max_len: int = 20
    docs_per: int = 25
    seed: int = 7

    @classmethod
    def scaled(cls, factor: float, **kw) -> "SyntheticSpec":
        return cls(families=default_families(factor), token_budget=int(round(200_000 * factor)), **kw)


@dataclass
class SyntheticBundle:
    corpus: Corpus
    ontology: TypeOntology
    manifest: dict
    gold: list[tuple[str, str, str, bool]]
    catalog: list[tuple[str, str, str]]
    assignments: list[tuple[str, str]]
    labels: list[tuple[str, int]]
    pair_labels: list[tuple[str, str, float]]

    def write(self, outdir) -> dict[str, str]:
        os.makedirs(outdir, exist_ok=True)
        paths = {k: os.path.join(outdir, f) for k, f in (
            ("corpus", "corpus.txt"), ("ontology", "ontology.tsv"), ("manifest", "manifest.json"),
            ("gold", "gold.tsv"), ("catalog", "catalog.tsv"), ("assignments", "assignments.tsv"),
            ("labels", "labels.tsv"), ("pair_labels", "pair_labels.tsv"))}
        with open(paths["corpus"], "w", encoding="utf-8", newline="\n") as fh:
            for s in self.corpus:
                fh.write(format_sentence(s) + "\n")
        with open(paths["ontology"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write("".join(line + "\n" for line in self.ontology.to_lines()))
        with open(paths["manifest"], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
        tables = {
            "gold": [(e, a, v, str(int(lab))) for e, a, v, lab in self.gold],
            "catalog": self.catalog,
            "assignments": self.assignments,
            "labels": [(p, str(y)) for p, y in self.labels],
            "pair_labels": [(a, b, f"{y:g}") for a, b, y in self.pair_labels],
        }
        for key, rows in tables.items():
            with open(paths[key], "w", encoding="utf-8", newline="\n") as fh:
                fh.write("".join("\t".join(r) + "\n" for r in rows))
        return paths


_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "dr", "gr", "kl", "st", "tr"]
_NUCLEI = ["a", "e", "i", "o", "u", "ai", "ou", "ei"]
_CODAS = ["", "", "n", "r", "s", "l", "k", "th"]


class _Names:
    """Unique pseudo-words so no generated string collides with any other."""

    def __init__(self, rng, reserved):
        self.rng = rng
        self.used = set(reserved)

    def word(self, syllables):
        while True:
            w = "".join(self.rng.choice(_ONSETS) + self.rng.choice(_NUCLEI) + self.rng.choice(_CODAS)
                        for _ in range(syllables))
            if w not in self.used and classify_word(w) is None and classify_word(w.capitalize()) is None:
                self.used.add(w)
                return w

    def mention(self, fine_type):
        if fine_type in ("PERSON", "POLITICIAN", "ATHLETE", "ARTIST", "BUSINESSPERSON"):
            return f"{self.word(2).capitalize()} {self.word(3).capitalize()}"
        if fine_type == "ETHNICITY":
            return self.word(2).capitalize() + "ian"
        if fine_type == "CITY":
            return "Port " + self.word(2).capitalize()
        if fine_type == "COMPANY":
            return self.word(2).capitalize() + " Corp"
        return self.word(3).capitalize()


def _entity_token(mention, path):
    return Token(Kind.ENTITY, mention.replace(" ", "_"), mention, tuple(path))


def _literal_token(w):
    if not any(c.isalnum() for c in w):
        return Token(Kind.PUNCT, w)
    return Token(Kind.PHRASE if "_" in w else Kind.WORD, w)


def _template_symbols(text: str, e_path, v_path, level: str) -> Pattern:
    def slot(path):
        return "$" + (path[0] if level == "coarse" else path[-1])
    return tuple(slot(e_path) if t == "{E}" else slot(v_path) if t == "{V}" else t for t in text.split())


def build_ontology() -> TypeOntology:
    return load_ontology([f"{p}\t{c}" for p, cs in ONTOLOGY.items() for c in cs])


def _count_spans(seqs, pattern):
    n, k = 0, len(pattern)
    for seq in seqs:
        for i in range(len(seq) - k + 1):
            if seq[i:i + k] == pattern:
                n += 1
    return n


def generate_synthetic(spec: SyntheticSpec) -> SyntheticBundle:
    """Deterministic corpus + manifest for ``spec``; raises SpecError when infeasible."""
    if spec.token_budget <= 0:
        raise SpecError("token budget must be positive")
    if not 0 <= spec.noise_rate < 1:
        raise SpecError("noise rate must lie in [0, 1)")
    rng = np.random.default_rng(spec.seed)
    ontology = build_ontology()
    literals = set()
    for fam in spec.families:
        if len(fam.templates) != len(fam.counts):
            raise SpecError(f"family {fam.name}: one count per template")
        for t, c in zip(fam.templates, fam.counts):
            if c < spec.min_sup:
                raise SpecError(f"template {t!r} planted {c} times, below min_sup={spec.min_sup}")
            if len(t.split()) > spec.max_len:
                raise SpecError(f"template {t!r} longer than {spec.max_len}")
            literals |= {w.lower() for w in t.split() if w not in ("{E}", "{V}")}
        for p in list(fam.entity_types) + [fam.value_type]:
            if p != "DIGIT":
                ontology.check_path(p.split(">"))

    names = _Names(rng, literals)
    stop_filler = sorted(w for w in default_stopwords() if w not in literals and w.isalpha() and len(w) > 1)[:60]
    vocab = [names.word(int(rng.integers(2, 4))) for _ in range(spec.vocab_size)]
    zipf = 1.0 / np.arange(1, len(vocab) + 1) ** spec.zipf_a
    zipf /= zipf.sum()

    # facts per family
    facts = {}
    entity_pool = []
    for fam in spec.families:
        types = list(fam.entity_types)
        shares = np.array([fam.entity_types[t] for t in types], dtype=float)
        per_type = np.floor(shares / shares.sum() * fam.n_facts).astype(int)
        per_type[np.argmax(shares)] += fam.n_facts - per_type.sum()
        rows = []
        for t, k in zip(types, per_type):
            path = tuple(t.split(">"))
            for _ in range(max(k, 1)):
                ent = names.mention(path[-1])
                if fam.value_type == "DIGIT":
                    val, vpath = str(int(rng.integers(fam.value_range[0], fam.value_range[1] + 1))), ("DIGIT",)
                else:
                    vpath = tuple(fam.value_type.split(">"))
                    val = names.mention(vpath[-1])
                    entity_pool.append((val, vpath))
                rows.append((ent, path, val, vpath))
                entity_pool.append((ent, path))
        facts[fam.name] = rows

    plants = []  # (family, template index, fact index)
    for fam in spec.families:
        for ti, c in enumerate(fam.counts):
            idx = rng.integers(0, len(facts[fam.name]), size=c)
            plants += [(fam.name, ti, int(f)) for f in idx]
    n_plant = len(plants)
    n_noise = int(round(n_plant * spec.noise_rate / (1 - spec.noise_rate)))
    fam_by_name = {f.name: f for f in spec.families}
    plant_tokens = sum(len(fam_by_name[f].templates[t].split()) + 1 for f, t, _ in plants)
    min_noise = 4
    remaining = spec.token_budget - plant_tokens - n_noise * (min_noise + 1)
    if remaining < 0:
        raise SpecError(f"token budget {spec.token_budget} cannot hold {plant_tokens} planted tokens "
                        f"and {n_noise} distractor sentences")
    units = plants + [None] * n_noise
    order = rng.permutation(len(units))
    extra = rng.multinomial(remaining, np.full(len(units), 1.0 / len(units)))

    def filler(k):
        out = []
        stops = rng.random(k) < spec.stopword_share
        ws = rng.choice(len(vocab), size=k, p=zipf)
        for is_stop, w in zip(stops, ws):
            out.append(Token(Kind.WORD, stop_filler[int(rng.integers(len(stop_filler)))] if is_stop else vocab[int(w)]))
        return out

    sentences = []
    for pos, u in enumerate(order):
        unit = units[u]
        budget = int(extra[pos])
        if unit is None:
            toks = filler(budget + min_noise)
            for at in rng.choice(len(toks), size=int(rng.integers(1, 3)), replace=False):
                ment, path = entity_pool[int(rng.integers(len(entity_pool)))]
                toks[int(at)] = _entity_token(ment, path)
        else:
            fname, ti, fi = unit
            ent, epath, val, vpath = facts[fname][fi]
            body = []
            for w in fam_by_name[fname].templates[ti].split():
                if w == "{E}":
                    body.append(_entity_token(ent, epath))
                elif w == "{V}":
                    body.append(Token(Kind.WORD, val) if vpath == ("DIGIT",) else _entity_token(val, vpath))
                else:
                    body.append(_literal_token(w))
            before = int(rng.integers(0, budget + 1))
            toks = filler(before) + body + filler(budget - before)
        toks.append(Token(Kind.PUNCT, "."))
        sentences.append(toks)

    sents = tuple(Sentence(tuple(toks), f"d{k // spec.docs_per:05d}", k % spec.docs_per)
                  for k, toks in enumerate(sentences))
    corpus = Corpus(sents)
    if corpus.total_tokens != spec.token_budget:
        raise SpecError(f"generated {corpus.total_tokens} tokens, expected {spec.token_budget}")

    manifest, gold, catalog, assignments, labels, pair_labels = _ground_truth(spec, facts, plants, corpus)
    return SyntheticBundle(corpus, ontology, manifest, gold, catalog, assignments, labels, pair_labels)


def _ground_truth(spec, facts, plants, corpus):
    fam_by_name = {f.name: f for f in spec.families}
    tagged = tag_corpus(corpus)
    seqs = {lvl: [generalize(s, lvl) for s in tagged] for lvl in ("coarse", "fine")}

    realized = Counter()  # (family, template, fine entity path, value path)
    for fname, ti, fi in plants:
        _, epath, _, vpath = facts[fname][fi]
        realized[(fname, ti, epath, vpath)] += 1

    templates = []
    for fam in spec.families:
        for ti, text in enumerate(fam.templates):
            variants = {k: c for k, c in realized.items() if k[:2] == (fam.name, ti)}
            epath0, vpath0 = next(iter(variants))[2:]
            coarse = _template_symbols(text, epath0, vpath0, "coarse")
            n_coarse = _count_spans(seqs["coarse"], coarse)
            if n_coarse != fam.counts[ti]:
                raise SpecError(f"self-check: {render(coarse)!r} found {n_coarse} times, planted {fam.counts[ti]}")
            fine = {}
            for (_, _, ep, vp), c in sorted(variants.items()):
                p = render(_template_symbols(text, ep, vp, "fine"))
                fine[p] = fine.get(p, 0) + c
            for p, c in fine.items():
                found = _count_spans(seqs["fine"], tuple(p.split()))
                if found != c:
                    raise SpecError(f"self-check: {p!r} found {found} times, planted {c}")
            templates.append({"family": fam.name, "template": text, "count": fam.counts[ti],
                              "coarse": render(coarse), "fine": fine,
                              "labelled": bool(fam.labelled[ti]) if fam.labelled else True})

    gold = {}
    catalog = {}
    for fname, ti, fi in plants:
        fam = fam_by_name[fname]
        ent, epath, val, vpath = facts[fname][fi]
        attr = fam.attributes.get(epath[-1])
        if attr is not None:
            gold[(ent, attr, val)] = True
            catalog[attr] = (epath[-1], vpath[-1])
    # the same facts read through the family's dominant attribute are false
    for fam in spec.families:
        main = _main_attribute(fam)
        for ent, epath, val, vpath in facts[fam.name]:
            if fam.attributes.get(epath[-1]) != main:
                gold.setdefault((ent, main, val), False)

    assignments = {}
    for t in templates:
        fam = fam_by_name[t["family"]]
        for p in t["fine"]:
            fine_e = _fine_entity_type(p, fam)
            if fine_e in fam.attributes:
                assignments[p] = fam.attributes[fine_e]
        assignments.setdefault(t["coarse"], _main_attribute(fam))

    labels = _labels(templates, seqs)
    pair_labels = _pair_labels(templates, labels)

    manifest = {
        "seed": spec.seed,
        "tokens": corpus.total_tokens,
        "sentences": len(corpus),
        "noise_rate": spec.noise_rate,
        "noise_sentences": len(corpus) - len(plants),
        "templates": templates,
        "families": {f.name: [t["coarse"] for t in templates if t["family"] == f.name] for f in spec.families},
        "attributes": {a: list(v) for a, v in sorted(catalog.items())},
        "gold_true": sum(gold.values()),
    }
    gold_rows = sorted((e, a, v, lab) for (e, a, v), lab in gold.items())
    catalog_rows = sorted((a, e, v) for a, (e, v) in catalog.items())
    return manifest, gold_rows, catalog_rows, sorted(assignments.items()), labels, pair_labels


def _main_attribute(fam: FamilySpec) -> str:
    top = max(fam.entity_types, key=lambda t: fam.entity_types[t])
    return fam.attributes[top.split(">")[-1]]


def _fine_entity_type(pattern: str, fam: FamilySpec) -> str:
    val_fine = fam.value_type.split(">")[-1]
    slots = [s[1:] for s in pattern.split() if s.startswith("$")]
    if slots.count(val_fine) == 2:
        return val_fine
    slots.remove(val_fine)
    return slots[0]


def _labels(templates, seqs) -> list[tuple[str, int]]:
    """Positive labels for the labelled templates' renderings; negatives for
    their fragments, their one-token extensions and frequent filler n-grams.
    Unlabelled templates get no positive label at all."""
    pos, neg = set(), set()
    for t in templates:
        rend = [t["coarse"]] + list(t["fine"])
        if t["labelled"]:
            pos.update(rend)
        for r in rend:
            syms = r.split()
            for a in range(len(syms)):
                for b in range(a + 1, len(syms) + 1):
                    if b - a < len(syms) and b - a >= 2:
                        neg.add(" ".join(syms[a:b]))
    for lvl in ("coarse", "fine"):
        grams = Counter()
        for seq in seqs[lvl]:
            for k in (2, 3):
                for i in range(len(seq) - k + 1):
                    g = seq[i:i + k]
                    if not any(s in ("president", "prime_minister", "ceo", "age", "-year-old", "chief_executive", ",")
                               for s in g):
                        grams[g] += 1
        for g, _ in grams.most_common(30):
            neg.add(render(g))
        ext = Counter()
        positives = {tuple(p.split()) for p in pos}
        for seq in seqs[lvl]:
            for p in positives:
                k = len(p)
                for i in range(len(seq) - k):
                    if seq[i:i + k] == p:
                        ext[seq[i:i + k + 1]] += 1
        for g, c in ext.most_common(20):
            if c >= 5:
                neg.add(render(g))
    neg -= {r for t in templates for r in [t["coarse"], *t["fine"]]}
    return sorted([(p, 1) for p in pos] + [(p, 0) for p in neg])


def _pair_labels(templates, labels) -> list[tuple[str, str, float]]:
    """Same-signature template pairs at both type levels: 1 within a family,
    0 across families. Fragment pairs are added as further negatives."""
    from .candidates import slot_signature

    rends = []
    for t in templates:
        rends.append((t["family"], t["coarse"]))
        rends += [(t["family"], p) for p in t["fine"]]
    out = set()
    for i in range(len(rends)):
        for j in range(i + 1, len(rends)):
            (fa, a), (fb, b) = rends[i], rends[j]
            if slot_signature(tuple(a.split())) == slot_signature(tuple(b.split())):
                out.add((min(a, b), max(a, b), 1.0 if fa == fb else 0.0))
    negs = [p for p, y in labels if y == 0 and any(s.startswith("$") for s in p.split())]
    for _, a in rends:
        sig = slot_signature(tuple(a.split()))
        for p in negs:
            if slot_signature(tuple(p.split())) == sig:
                out.add((min(a, p), max(a, p), 0.0))
    return sorted(out)
