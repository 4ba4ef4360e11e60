"""Saturation-based EL++ reasoner for atomic ABox entailments.

ABox assertions are internalised through nominals (``C(a)`` becomes
``{a} ⊑ C``), the axioms are put in normal form, and a worklist applies the
completion rules to *contexts*: the top context, one context per individual,
and one context per existential filler reached from those.  Every context is
non-empty in every model, which is what makes the nominal merge rule and the
global clash test sound.
"""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

from .entailment import Entailment, EntailmentSet
from .ontology import (
    BOTTOM,
    TOP,
    And,
    Atomic,
    Bottom,
    Concept,
    ConceptAssertion,
    Equality,
    Gci,
    Inequality,
    One,
    Ontology,
    OntologyError,
    Ri,
    RoleAssertion,
    Some,
    Top,
    conj,
)

log = logging.getLogger(__name__)

TOP_ID = ":top"
BOT_ID = ":bottom"
FRESH_PREFIX = "_gen:"


class UnknownNameError(OntologyError):
    pass


class MixedTBoxError(OntologyError):
    pass


def nominal_id(individual: str) -> str:
    return "{" + individual + "}"


def is_nominal(cid: str) -> bool:
    return cid.startswith("{")


# ---------------------------------------------------------------------------
# normalisation
# ---------------------------------------------------------------------------


@dataclass
class NormalizedTBox:
    """Axioms in normal form over basic concept ids.

    Basic ids are concept names, ``{a}`` for nominals, ``:top``; ``:bottom``
    appears only on right-hand sides.  Fresh names start with ``_gen``.
    """

    simple: list = field(default_factory=list)  # (A, B): A ⊑ B
    conjunctive: list = field(default_factory=list)  # (frozenset As, B): ⊓As ⊑ B
    exist_intro: list = field(default_factory=list)  # (A, r, B): A ⊑ ∃r.B
    exist_elim: list = field(default_factory=list)  # (r, A, B): ∃r.A ⊑ B
    role_incl: list = field(default_factory=list)  # (r, s): r ⊑ s
    nominals: set = field(default_factory=set)
    fresh: set = field(default_factory=set)

    def __len__(self) -> int:
        return (
            len(self.simple)
            + len(self.conjunctive)
            + len(self.exist_intro)
            + len(self.exist_elim)
            + len(self.role_incl)
        )


def simplify(c: Concept) -> Concept:
    """Push ⊥ up and drop ⊤ from conjunctions."""
    if isinstance(c, And):
        parts = [simplify(x) for x in c.conjuncts]
        if any(isinstance(p, Bottom) for p in parts):
            return BOTTOM
        parts = [p for p in parts if not isinstance(p, Top)]
        if not parts:
            return TOP
        return conj(*parts)
    if isinstance(c, Some):
        f = simplify(c.filler)
        if isinstance(f, Bottom):
            return BOTTOM
        return Some(c.role, f)
    return c


def _basic_id(c: Concept) -> str | None:
    if isinstance(c, Atomic):
        return c.name
    if isinstance(c, Top):
        return TOP_ID
    if isinstance(c, One):
        return nominal_id(c.individual)
    return None


class _Normalizer:
    def __init__(self, tag: str = ""):
        self.tag = tag
        self.out = NormalizedTBox()
        self._lhs_names: dict[Concept, str] = {}
        self._rhs_names: dict[Concept, str] = {}
        self._names: dict[Concept, str] = {}
        self._counter = 0

    def _fresh(self, c: Concept) -> str:
        name = self._names.get(c)
        if name is None:
            self._counter += 1
            name = f"{FRESH_PREFIX}{self.tag}{self._counter}"
            self._names[c] = name
            self.out.fresh.add(name)
        return name

    def _note_nominals(self, c: Concept) -> None:
        stack = [c]
        while stack:
            x = stack.pop()
            if isinstance(x, One):
                self.out.nominals.add(x.individual)
            elif isinstance(x, And):
                stack.extend(x.conjuncts)
            elif isinstance(x, Some):
                stack.append(x.filler)

    def lhs_basic(self, c: Concept) -> str:
        """A basic id X with ``c ⊑ X``."""
        b = _basic_id(c)
        if b is not None:
            return b
        name = self._lhs_names.get(c)
        if name is None:
            name = self._fresh(c)
            self._lhs_names[c] = name
            self.gci(c, Atomic(name))
        return name

    def rhs_basic(self, c: Concept) -> str:
        """A basic id Y with ``Y ⊑ c``."""
        b = _basic_id(c)
        if b is not None:
            return b
        name = self._rhs_names.get(c)
        if name is None:
            name = self._fresh(c)
            self._rhs_names[c] = name
            self.gci(Atomic(name), c)
        return name

    def gci(self, sub: Concept, sup: Concept) -> None:
        sub = simplify(sub)
        sup = simplify(sup)
        self._note_nominals(sub)
        self._note_nominals(sup)
        if isinstance(sub, Bottom) or isinstance(sup, Top):
            return
        if isinstance(sup, And):
            a = self.lhs_basic(sub)
            for part in sup.conjuncts:
                self.gci(_from_id(a), part)
            return
        if isinstance(sup, Some):
            a = self.lhs_basic(sub)
            self.out.exist_intro.append((a, sup.role, self.rhs_basic(sup.filler)))
            return
        target = BOT_ID if isinstance(sup, Bottom) else _basic_id(sup)
        if isinstance(sub, And):
            ids = frozenset(self.lhs_basic(x) for x in sub.conjuncts)
            if len(ids) == 1:
                self.out.simple.append((next(iter(ids)), target))
            else:
                self.out.conjunctive.append((ids, target))
        elif isinstance(sub, Some):
            self.out.exist_elim.append((sub.role, self.lhs_basic(sub.filler), target))
        else:
            self.out.simple.append((_basic_id(sub), target))


def _from_id(cid: str) -> Concept:
    if cid == TOP_ID:
        return TOP
    if is_nominal(cid):
        return One(cid[1:-1])
    return Atomic(cid)


def internalize(ax) -> list:
    """ABox axiom as equivalent nominal GCIs; TBox axioms pass through."""
    if isinstance(ax, ConceptAssertion):
        return [Gci(One(ax.individual), ax.concept)]
    if isinstance(ax, RoleAssertion):
        return [Gci(One(ax.subject), Some(ax.role, One(ax.object)))]
    if isinstance(ax, Equality):
        return [Gci(One(ax.left), One(ax.right)), Gci(One(ax.right), One(ax.left))]
    if isinstance(ax, Inequality):
        return [Gci(conj(One(ax.left), One(ax.right)), BOTTOM)]
    return [ax]


def normalize(axioms: Iterable, tag: str = "") -> NormalizedTBox:
    """Normal form of TBox axioms (ABox axioms are internalised first).

    ``tag`` keeps fresh names of separately normalised axiom sets apart.
    """
    nz = _Normalizer(tag)
    for ax in axioms:
        for a in internalize(ax):
            if isinstance(a, Ri):
                nz.out.role_incl.append((a.sub, a.sup))
            else:
                nz.gci(a.sub, a.sup)
    return nz.out


@lru_cache(maxsize=256)
def _normalize_tbox(tbox: tuple) -> NormalizedTBox:
    return normalize(tbox)


# ---------------------------------------------------------------------------
# saturation
# ---------------------------------------------------------------------------


class Saturation:
    """Worklist saturation state; facts can be added after :meth:`run`."""

    def __init__(self, rules: list[NormalizedTBox], individuals: Iterable[str]):
        self.simple: dict[str, list] = defaultdict(list)
        self.conj: dict[str, list] = defaultdict(list)
        self.intro: dict[str, list] = defaultdict(list)
        self.elim: dict[tuple, list] = defaultdict(list)
        sub_roles: dict[str, set] = defaultdict(set)
        for nt in rules:
            for a, b in nt.simple:
                self.simple[a].append(b)
            for ids, b in nt.conjunctive:
                for a in ids:
                    self.conj[a].append((ids, b))
            for a, r, b in nt.exist_intro:
                self.intro[a].append((r, b))
            for r, a, b in nt.exist_elim:
                self.elim[(r, a)].append(b)
            for r, s in nt.role_incl:
                sub_roles[r].add(s)
        self.supers = _transitive(sub_roles)
        self.S: dict[str, set] = {}
        self.pred: dict[str, list] = defaultdict(list)
        self.R: set = set()
        self.members: dict[str, set] = defaultdict(set)  # nominal -> contexts containing it
        self.nominals_in: dict[str, set] = defaultdict(set)  # context -> nominals it contains
        self.clash = False
        self.todo: deque = deque()
        self.individuals = tuple(sorted(set(individuals)))
        self._context(TOP_ID)
        for a in self.individuals:
            self._context(nominal_id(a))

    def copy(self) -> "Saturation":
        new = object.__new__(Saturation)
        new.simple, new.conj, new.intro, new.elim = self.simple, self.conj, self.intro, self.elim
        new.supers = self.supers
        new.S = {k: set(v) for k, v in self.S.items()}
        new.pred = defaultdict(list, {k: list(v) for k, v in self.pred.items()})
        new.R = set(self.R)
        new.members = defaultdict(set, {k: set(v) for k, v in self.members.items()})
        new.nominals_in = defaultdict(set, {k: set(v) for k, v in self.nominals_in.items()})
        new.clash = self.clash
        new.todo = deque(self.todo)
        new.individuals = self.individuals
        return new

    def _context(self, c: str) -> None:
        if c not in self.S:
            self.S[c] = set()
            self.todo.append((0, c, c))
            self.todo.append((0, c, TOP_ID))

    def add_fact(self, g: Entailment) -> None:
        if g.is_concept:
            self.todo.append((0, nominal_id(g.args[0]), g.predicate))
        else:
            a, b = g.args
            self.todo.append((1, g.predicate, nominal_id(a), nominal_id(b)))

    def run(self, stop_on_clash: bool = False) -> "Saturation":
        todo = self.todo
        S = self.S
        while todo:
            item = todo.popleft()
            if item[0] == 0:
                _, c, x = item
                sc = S[c]
                if x in sc:
                    continue
                sc.add(x)
                self._on_concept(c, x, sc)
                if x == BOT_ID:
                    self.clash = True
                    if stop_on_clash:
                        todo.clear()
                        break
            else:
                _, r, c, d = item
                if (r, c, d) in self.R:
                    continue
                self._context(d)
                self.R.add((r, c, d))
                self.pred[d].append((r, c))
                for s in self.supers.get(r, ()):
                    todo.append((1, s, c, d))
                sd = S[d]
                if BOT_ID in sd:
                    todo.append((0, c, BOT_ID))
                for y in tuple(sd):
                    for b in self.elim.get((r, y), ()):
                        todo.append((0, c, b))
        return self

    def _on_concept(self, c: str, x: str, sc: set) -> None:
        push = self.todo.append
        if x == BOT_ID:
            for _, p in self.pred.get(c, ()):
                push((0, p, BOT_ID))
        for b in self.simple.get(x, ()):
            push((0, c, b))
        for ids, b in self.conj.get(x, ()):
            if ids <= sc:
                push((0, c, b))
        for r, b in self.intro.get(x, ()):
            push((1, r, c, b))
        for r, p in self.pred.get(c, ()):
            for b in self.elim.get((r, x), ()):
                push((0, p, b))
        # a context containing {a} denotes exactly a: share everything both ways
        if is_nominal(x) and x != c:
            self.members[x].add(c)
            self.nominals_in[c].add(x)
            for y in tuple(sc):
                push((0, x, y))
            for y in tuple(self.S[x]):
                push((0, c, y))
        for n in self.nominals_in.get(c, ()):
            push((0, n, x))
        if is_nominal(c):
            for d in self.members.get(c, ()):
                push((0, d, x))

    # -- queries -----------------------------------------------------------

    def concepts_of(self, individual: str) -> set:
        return self.S.get(nominal_id(individual), set())

    def role_pairs(self):
        for r, c, d in self.R:
            if is_nominal(c):
                a = c[1:-1]
                for n in self.S[d]:
                    if is_nominal(n):
                        yield r, a, n[1:-1]


def _transitive(direct: dict[str, set]) -> dict[str, frozenset]:
    out = {}
    for r in list(direct):
        seen = set()
        stack = list(direct[r])
        while stack:
            s = stack.pop()
            if s in seen or s == r:
                continue
            seen.add(s)
            stack.extend(direct.get(s, ()))
        out[r] = frozenset(seen)
    return out


def saturate(o: Ontology) -> Saturation:
    rules = [_normalize_tbox(tuple(o.tbox)), normalize(o.abox, tag="a")]
    return Saturation(rules, o.signature.individuals).run()


def _closure_from(sat: Saturation, o: Ontology) -> EntailmentSet:
    sig = o.signature
    if sat.clash:
        everything = [Entailment.concept(c, a) for c in sig.concepts for a in sig.individuals]
        everything += [
            Entailment.role(r, a, b)
            for r in sig.roles
            for a in sig.individuals
            for b in sig.individuals
        ]
        return EntailmentSet(everything, consistent=False)
    out = []
    for a in sig.individuals:
        for c in sat.concepts_of(a):
            if c in sig.concepts:
                out.append(Entailment.concept(c, a))
    for r, a, b in sat.role_pairs():
        if r in sig.roles:
            out.append(Entailment.role(r, a, b))
    return EntailmentSet(out)


@lru_cache(maxsize=4096)
def entailment_closure(o: Ontology) -> EntailmentSet:
    """All atomic assertions over ``o``'s signature entailed by ``o``.

    For an inconsistent ontology every assertion is returned and the result
    has ``consistent=False``.
    """
    return _closure_from(saturate(o), o)


def is_consistent(o: Ontology) -> bool:
    return entailment_closure(o).consistent


def _check_names(o: Ontology, g: Entailment) -> None:
    cs, rs, ins = g.names()
    sig = o.signature
    missing = (cs - sig.concepts) | (rs - sig.roles) | (ins - sig.individuals)
    if missing:
        raise UnknownNameError(f"{g} uses names outside the signature: {sorted(missing)}")


def entails(o: Ontology, g: Entailment) -> bool:
    _check_names(o, g)
    return g in entailment_closure(o)


def same_tbox(a: Ontology, b: Ontology) -> bool:
    return a.tbox == b.tbox or set(a.normalized().tbox) == set(b.normalized().tbox)


def closure_of_lso_set(lsos) -> EntailmentSet:
    """Union of per-LSO closures; all LSOs must share one TBox."""
    lsos = list(lsos)
    onts = [getattr(x, "ontology", x) for x in lsos]
    for o in onts[1:]:
        if not same_tbox(onts[0], o):
            raise MixedTBoxError("LSOs do not share the same TBox")
    items: set = set()
    consistent = True
    for o in onts:
        cl = entailment_closure(o)
        items |= cl.items
        consistent = consistent and cl.consistent
    return EntailmentSet(items, consistent=consistent)


class IncrementalChecker:
    """Saturates a base ontology once and tests single-fact extensions.

    ``consistent_with(g)`` equals ``is_consistent(merge_abox(base, {g}))``.
    """

    def __init__(self, base: Ontology):
        self.base = base
        self._sat = saturate(base)
        self._closure = _closure_from(self._sat, base)

    @property
    def consistent(self) -> bool:
        return not self._sat.clash

    @property
    def closure(self) -> EntailmentSet:
        return self._closure

    def consistent_with(self, g: Entailment) -> bool:
        if self._sat.clash:
            return False
        if g in self._closure:
            return True
        cs, rs, ins = g.names()
        sig = self.base.signature
        if ins - sig.individuals:
            # fresh individuals need their own contexts: fall back to a full run
            from .ontology import merge_abox

            return is_consistent(merge_abox(self.base, [g]))
        sat = self._sat.copy()
        sat.add_fact(g)
        sat.run(stop_on_clash=True)
        return not sat.clash
