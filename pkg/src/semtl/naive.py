"""Unoptimised reference reasoner used to cross-check :mod:`semtl.reasoner`.

It shares nothing with the saturation engine beyond the data model: no
normal form, no indexes, no worklist.  It grows a canonical structure over
the *original* concept expressions: individuals, one anonymous element, and
one witness per ``(role, filler)`` requested by an element, re-scanning every
axiom against every element until nothing changes.
"""

from __future__ import annotations

from .entailment import Entailment
from .ontology import (
    And,
    Atomic,
    Bottom,
    ConceptAssertion,
    Equality,
    Gci,
    Inequality,
    One,
    Ontology,
    Ri,
    RoleAssertion,
    Some,
    Top,
    TOP,
)

ANON = ("anon",)


def naive_closure(o: Ontology) -> tuple[set, bool]:
    """Return ``(entailments, consistent)`` by brute-force fixpoint."""
    individuals = sorted(o.signature.individuals)
    gcis = [ax for ax in o.tbox if isinstance(ax, Gci)]
    ris = [ax for ax in o.tbox if isinstance(ax, Ri)]
    labels: dict = {ANON: {TOP}}
    for a in individuals:
        labels[a] = {TOP, One(a)}
    edges: set = set()
    distinct: list = []
    for ax in o.abox:
        if isinstance(ax, ConceptAssertion):
            labels[ax.individual].add(ax.concept)
        elif isinstance(ax, RoleAssertion):
            edges.add((ax.subject, ax.role, ax.object))
        elif isinstance(ax, Equality):
            labels[ax.left].add(One(ax.right))
            labels[ax.right].add(One(ax.left))
        elif isinstance(ax, Inequality):
            distinct.append((ax.left, ax.right))

    def holds(x, c) -> bool:
        if isinstance(c, Top):
            return True
        if isinstance(c, (Bottom, Atomic, One)):
            return c in labels[x]
        if isinstance(c, And):
            return all(holds(x, d) for d in c.conjuncts)
        if isinstance(c, Some):
            return any(
                holds(y, c.filler) for (s, r, y) in edges if s == x and r == c.role
            )
        raise TypeError(c)

    changed = True
    while changed:
        changed = False
        for x in list(labels):
            lab = labels[x]
            for c in list(lab):
                if isinstance(c, And):
                    for d in c.conjuncts:
                        if d not in lab:
                            lab.add(d)
                            changed = True
                elif isinstance(c, Some):
                    w = ("w", c.role, c.filler)
                    if w not in labels:
                        labels[w] = {TOP, c.filler}
                        changed = True
                    if (x, c.role, w) not in edges:
                        edges.add((x, c.role, w))
                        changed = True
            for ax in gcis:
                if ax.sup not in lab and holds(x, ax.sub):
                    lab.add(ax.sup)
                    changed = True
        for ri in ris:
            for (s, r, y) in list(edges):
                if r == ri.sub and (s, ri.sup, y) not in edges:
                    edges.add((s, ri.sup, y))
                    changed = True
        # an element carrying One(a) is the individual a
        for x in list(labels):
            for a in individuals:
                if x == a or One(a) not in labels[x]:
                    continue
                merged = labels[x] | labels[a]
                if merged != labels[x] or merged != labels[a]:
                    labels[x] = set(merged)
                    labels[a] = set(merged)
                    changed = True
                for (s, r, y) in list(edges):
                    for old, new in ((x, a), (a, x)):
                        e1 = (new if s == old else s, r, new if y == old else y)
                        if (s == old or y == old) and e1 not in edges:
                            edges.add(e1)
                            changed = True

    consistent = not any(Bottom() in lab for lab in labels.values())
    for a, b in distinct:
        if a == b or One(b) in labels[a]:
            consistent = False
    sig = o.signature
    out: set = set()
    if not consistent:
        out = {Entailment.concept(c, a) for c in sig.concepts for a in individuals}
        out |= {
            Entailment.role(r, a, b) for r in sig.roles for a in individuals for b in individuals
        }
        return out, False
    for a in individuals:
        for c in labels[a]:
            if isinstance(c, Atomic):
                out.add(Entailment.concept(c.name, a))
    for (s, r, y) in edges:
        if s in sig.individuals:
            for b in individuals:
                if One(b) in labels[y]:
                    out.add(Entailment.role(r, s, b))
    return out, True
