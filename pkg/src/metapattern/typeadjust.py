"""Entity-type granularity for synonym groups.

For a slot typed ``T`` the graininess g(T) is the share of the slot's
bindings whose most specific type lies strictly below ``T``; the support s(T)
of a type is its binding mass relative to its strongest sibling. A slot
descends to ``T``'s subtypes when g(T) > theta, keeping only subtypes with
s > gamma. Binding counts are occurrences, and the mass of a subtype includes
everything typed below it.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Iterable

from .candidates import Pattern, canonical_slots, is_slot, slot_positions, slot_type
from .corpus import TypeOntology
from .errors import InvalidParams
from .segmentation import Extraction
from .synonyms import PatternGroup, sort_groups

DEFAULT_THETA = 0.8
DEFAULT_GAMMA = 0.1


def _slot_path(ext: Extraction, order: list[int], slot: int) -> tuple[str, ...]:
    return ext.paths[slot_positions(ext.pattern).index(order[slot])]


def type_distribution(group: PatternGroup, slot: int) -> Counter:
    """num_entity per most specific type for canonical slot ``slot`` of the group."""
    n_slots = len(group.signature)
    if not 0 <= slot < n_slots:
        raise InvalidParams(f"slot {slot} out of range for {n_slots}-slot group")
    dist = Counter()
    for e in group.extractions:
        dist[_slot_path(e, canonical_slots(e.pattern), slot)[-1]] += 1
    return dist


def _mass(t: str, dist: Counter, ontology: TypeOntology) -> int:
    return sum(c for k, c in dist.items() if k in ontology and ontology.is_ancestor_or_self(t, k))


def graininess(t: str, dist: Counter, ontology: TypeOntology) -> float:
    below = sum(_mass(c, dist, ontology) for c in ontology.subtypes(t))
    total = below + dist.get(t, 0)
    return below / total if total else 0.0


def support(t: str, dist: Counter, ontology: TypeOntology) -> float:
    p = ontology.parent.get(t)
    peers = ontology.subtypes(p) if p is not None else (t,)
    top = max(_mass(x, dist, ontology) for x in set(peers) | {t})
    return _mass(t, dist, ontology) / top if top else 0.0


@dataclass(frozen=True)
class SlotDecision:
    """How one slot resolves: ``descend`` holds nodes whose children are used,
    ``dropped`` subtypes that failed the support test."""

    root_type: str
    descend: frozenset
    dropped: frozenset
    diagnostics: tuple  # (type, graininess, support)

    def assign(self, path: tuple[str, ...]) -> str | None:
        """Final type for a binding with this type path, or None if discarded."""
        node = self.root_type
        try:
            k = path.index(node)
        except ValueError:
            return node
        while node in self.descend:
            if k + 1 >= len(path):
                return node
            nxt = path[k + 1]
            if nxt in self.dropped:
                return None
            node, k = nxt, k + 1
        return node


def decide_slot(t: str, dist: Counter, ontology: TypeOntology, theta: float, gamma: float) -> SlotDecision:
    descend, dropped, diag = set(), set(), []

    def visit(node, s):
        g = graininess(node, dist, ontology)
        diag.append((node, g, s))
        if g > theta:
            descend.add(node)
            for c in ontology.subtypes(node):
                if _mass(c, dist, ontology) == 0:
                    continue
                sc = support(c, dist, ontology)
                if sc > gamma:
                    visit(c, sc)
                else:
                    dropped.add(c)
                    diag.append((c, graininess(c, dist, ontology), sc))

    visit(t, support(t, dist, ontology) if t in ontology.parent else 1.0)
    return SlotDecision(t, frozenset(descend), frozenset(dropped), tuple(diag))


def retype(p: Pattern, order: list[int], types: tuple[str, ...]) -> Pattern:
    syms = list(p)
    for pos, t in zip(order, types):
        syms[pos] = "$" + t
    return tuple(syms)


def _entity_slots(sig, ontology):
    return [k for k, t in enumerate(sig) if t in ontology and t != ontology.root]


def adjust_top_down(groups: Iterable[PatternGroup], ontology: TypeOntology,
                    theta: float = DEFAULT_THETA, gamma: float = DEFAULT_GAMMA) -> list[PatternGroup]:
    """Split coarse groups into finer-typed variants where the evidence supports it."""
    out = []
    for g in groups:
        sig = g.signature
        if not g.extractions:
            out.append(g)
            continue
        decisions = {k: decide_slot(sig[k], type_distribution(g, k), ontology, theta, gamma)
                     for k in _entity_slots(sig, ontology)}
        diag = tuple((k, d.diagnostics) for k, d in decisions.items())
        if not any(d.descend for d in decisions.values()):
            out.append(replace(g, diagnostics=diag))
            continue
        parts = defaultdict(list)
        for e in g.extractions:
            order = canonical_slots(e.pattern)
            key = []
            for k in range(len(sig)):
                t = decisions[k].assign(_slot_path(e, order, k)) if k in decisions else sig[k]
                if t is None:
                    break
                key.append(t)
            else:
                parts[tuple(key)].append(e)
        for key, exts in parts.items():
            members = tuple(sorted({retype(m, canonical_slots(m), key) for m in g.members}))
            out.append(PatternGroup(members, tuple(exts), g.attribute, diag))
    return sort_groups(out)


def coarsen(p: Pattern, ontology: TypeOntology) -> Pattern:
    """Replace every entity slot type by its top-level ancestor."""
    return tuple("$" + ontology.path_to(slot_type(s))[0] if is_slot(s) and slot_type(s) in ontology.parent else s
                 for s in p)


def adjust_bottom_up(groups: Iterable[PatternGroup], ontology: TypeOntology,
                     theta: float = DEFAULT_THETA, gamma: float = DEFAULT_GAMMA) -> list[PatternGroup]:
    """Merge fine groups that are sibling variants of one coarse group when the
    union type distribution is not grainy enough to justify the split."""
    groups = list(groups)
    coarse_members = [{coarsen(m, ontology) for m in g.members} for g in groups]

    parent = list(range(len(groups)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner = {}
    for i, cm in enumerate(coarse_members):
        for m in sorted(cm):
            if m in owner:
                parent[find(i)] = find(owner[m])
            else:
                owner[m] = i
    families = defaultdict(list)
    for i in range(len(groups)):
        families[find(i)].append(i)

    out = []
    for idxs in families.values():
        fam = [groups[i] for i in idxs]
        csig = tuple(sorted(coarsen(fam[0].members[0], ontology)[p][1:]
                            for p in slot_positions(fam[0].members[0])))
        dists = defaultdict(Counter)
        for g in fam:
            for e in g.extractions:
                order = canonical_slots(coarsen(e.pattern, ontology))
                for k in range(len(csig)):
                    dists[k][_slot_path(e, order, k)[-1]] += 1
        decisions = {k: decide_slot(csig[k], dists[k], ontology, theta, gamma)
                     for k in _entity_slots(csig, ontology)}
        diag = tuple((k, d.diagnostics) for k, d in decisions.items())
        merged = defaultdict(lambda: ([], set()))
        for g in fam:
            cm = coarsen(g.members[0], ontology)
            corder = canonical_slots(cm)
            key = []
            for k, pos in enumerate(corder):
                own = slot_type(g.members[0][pos])
                if k in decisions:
                    path = ontology.path_to(own)
                    t = decisions[k].assign(path)
                    if t is None:
                        break
                    key.append(t)
                else:
                    key.append(own)
            else:
                exts, members = merged[tuple(key)]
                exts.extend(g.extractions)
                for m in g.members:
                    members.add(retype(coarsen(m, ontology), canonical_slots(coarsen(m, ontology)), tuple(key)))
        for key, (exts, members) in merged.items():
            attr = next((g.attribute for g in fam if g.attribute), None)
            out.append(PatternGroup(tuple(sorted(members)), tuple(exts), attr, diag))
    return sort_groups(out)


def slot_levels(group: PatternGroup, ontology: TypeOntology) -> tuple[int, ...]:
    """Ontology depth of each canonical slot type (0 for data types)."""
    return tuple(len(ontology.path_to(t)) if t in ontology.parent else 0 for t in group.signature)
