"""Seeded random EL++ ontologies for property and oracle tests."""

from __future__ import annotations

import random

from .ontology import (
    BOTTOM,
    TOP,
    Atomic,
    ConceptAssertion,
    Equality,
    Gci,
    Inequality,
    One,
    Ontology,
    Ri,
    RoleAssertion,
    Signature,
    Some,
    conj,
)


def random_concept(rng: random.Random, concepts, roles, individuals, depth: int = 2):
    roll = rng.random()
    if depth <= 0 or roll < 0.45:
        r = rng.random()
        if r < 0.04:
            return TOP
        if r < 0.07:
            return BOTTOM
        if r < 0.17 and individuals:
            return One(rng.choice(individuals))
        return Atomic(rng.choice(concepts))
    if roll < 0.75 and roles:
        return Some(rng.choice(roles), random_concept(rng, concepts, roles, individuals, depth - 1))
    parts = [random_concept(rng, concepts, roles, individuals, depth - 1) for _ in range(rng.randint(2, 3))]
    return conj(*parts)


def random_ontology(
    seed: int,
    max_concepts: int = 12,
    max_roles: int = 4,
    max_individuals: int = 8,
    max_axioms: int = 25,
    depth: int = 2,
) -> Ontology:
    rng = random.Random(seed)
    concepts = [f"C{i}" for i in range(rng.randint(1, max_concepts))]
    roles = [f"r{i}" for i in range(rng.randint(1, max_roles))]
    individuals = [f"a{i}" for i in range(rng.randint(1, max_individuals))]
    tbox, abox = [], []
    for _ in range(rng.randint(1, max_axioms)):
        kind = rng.random()
        if kind < 0.45:
            tbox.append(
                Gci(
                    random_concept(rng, concepts, roles, individuals, depth),
                    random_concept(rng, concepts, roles, individuals, depth),
                )
            )
        elif kind < 0.52:
            tbox.append(Ri(rng.choice(roles), rng.choice(roles)))
        elif kind < 0.77:
            c = random_concept(rng, concepts, roles, individuals, depth - 1) if rng.random() < 0.4 else Atomic(rng.choice(concepts))
            abox.append(ConceptAssertion(c, rng.choice(individuals)))
        elif kind < 0.92:
            abox.append(RoleAssertion(rng.choice(roles), rng.choice(individuals), rng.choice(individuals)))
        elif kind < 0.96:
            abox.append(Equality(rng.choice(individuals), rng.choice(individuals)))
        else:
            abox.append(Inequality(rng.choice(individuals), rng.choice(individuals)))
    sig = Signature(frozenset(concepts), frozenset(roles), frozenset(individuals))
    return Ontology(sig, tuple(tbox), tuple(abox))
