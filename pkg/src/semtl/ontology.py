"""EL++ ontology data model and the line-oriented ``.onto`` text format.

A document is a sequence of lines; ``#`` starts a comment::

    Concept Road
    Concept Way
    Role locatedIn
    Individual r0
    GCI Road SubClassOf And(Way Some(locatedIn Continent))
    RI partOf SubRoleOf locatedIn
    CA Road(r0)
    RA locatedIn(r0,r1)
    EQ r0 = r1
    NEQ r0 != r1

Concepts are ``Top``, ``Bottom``, a concept name, ``And(C D ...)``,
``Some(role C)`` or ``One(individual)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
RESERVED = frozenset({"Top", "Bottom", "And", "Some", "One"})


class OntologyError(ValueError):
    """Base class for malformed ontology input."""


class OntologySyntaxError(OntologyError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class UndeclaredNameError(OntologyError):
    pass


class DuplicateDeclarationError(OntologyError):
    pass


# ---------------------------------------------------------------------------
# concept expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "Top"


@dataclass(frozen=True)
class Bottom:
    def __str__(self) -> str:
        return "Bottom"


@dataclass(frozen=True)
class Atomic:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class And:
    """Conjunction; build through :func:`conj` to get the canonical form."""

    conjuncts: tuple

    def __str__(self) -> str:
        return "And(" + " ".join(str(c) for c in self.conjuncts) + ")"


@dataclass(frozen=True)
class Some:
    role: str
    filler: "Concept"

    def __str__(self) -> str:
        return f"Some({self.role} {self.filler})"


@dataclass(frozen=True)
class One:
    individual: str

    def __str__(self) -> str:
        return f"One({self.individual})"


Concept = Union[Top, Bottom, Atomic, And, Some, One]

TOP = Top()
BOTTOM = Bottom()


def conj(*concepts: Concept) -> Concept:
    """Flatten, deduplicate and sort conjuncts; a single conjunct is returned as is."""
    flat: dict[str, Concept] = {}
    stack = list(concepts)
    while stack:
        c = stack.pop()
        if isinstance(c, And):
            stack.extend(c.conjuncts)
        else:
            flat[str(c)] = c
    if not flat:
        raise ValueError("empty conjunction")
    items = tuple(flat[k] for k in sorted(flat))
    if len(items) == 1:
        return items[0]
    return And(items)


def canonical(c: Concept) -> Concept:
    """Recursively normalise conjunctions inside ``c``."""
    if isinstance(c, And):
        return conj(*(canonical(x) for x in c.conjuncts))
    if isinstance(c, Some):
        return Some(c.role, canonical(c.filler))
    return c


def concept_names(c: Concept) -> tuple[set[str], set[str], set[str]]:
    """(concepts, roles, individuals) mentioned by ``c``."""
    cs: set[str] = set()
    rs: set[str] = set()
    ins: set[str] = set()
    stack = [c]
    while stack:
        x = stack.pop()
        if isinstance(x, Atomic):
            cs.add(x.name)
        elif isinstance(x, And):
            stack.extend(x.conjuncts)
        elif isinstance(x, Some):
            rs.add(x.role)
            stack.append(x.filler)
        elif isinstance(x, One):
            ins.add(x.individual)
    return cs, rs, ins


# ---------------------------------------------------------------------------
# axioms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gci:
    sub: Concept
    sup: Concept

    def __str__(self) -> str:
        return f"GCI {self.sub} SubClassOf {self.sup}"


@dataclass(frozen=True)
class Ri:
    sub: str
    sup: str

    def __str__(self) -> str:
        return f"RI {self.sub} SubRoleOf {self.sup}"


@dataclass(frozen=True)
class ConceptAssertion:
    concept: Concept
    individual: str

    def __str__(self) -> str:
        return f"CA {self.concept}({self.individual})"


@dataclass(frozen=True)
class RoleAssertion:
    role: str
    subject: str
    object: str

    def __str__(self) -> str:
        return f"RA {self.role}({self.subject},{self.object})"


@dataclass(frozen=True)
class Equality:
    left: str
    right: str

    def __str__(self) -> str:
        return f"EQ {self.left} = {self.right}"


@dataclass(frozen=True)
class Inequality:
    left: str
    right: str

    def __str__(self) -> str:
        return f"NEQ {self.left} != {self.right}"


TBoxAxiom = Union[Gci, Ri]
ABoxAxiom = Union[ConceptAssertion, RoleAssertion, Equality, Inequality]
Axiom = Union[Gci, Ri, ConceptAssertion, RoleAssertion, Equality, Inequality]


def axiom_names(ax: Axiom) -> tuple[set[str], set[str], set[str]]:
    if isinstance(ax, Gci):
        a = concept_names(ax.sub)
        b = concept_names(ax.sup)
        return a[0] | b[0], a[1] | b[1], a[2] | b[2]
    if isinstance(ax, Ri):
        return set(), {ax.sub, ax.sup}, set()
    if isinstance(ax, ConceptAssertion):
        cs, rs, ins = concept_names(ax.concept)
        return cs, rs, ins | {ax.individual}
    if isinstance(ax, RoleAssertion):
        return set(), {ax.role}, {ax.subject, ax.object}
    return set(), set(), {ax.left, ax.right}


def canonical_axiom(ax: Axiom) -> Axiom:
    if isinstance(ax, Gci):
        return Gci(canonical(ax.sub), canonical(ax.sup))
    if isinstance(ax, ConceptAssertion):
        return ConceptAssertion(canonical(ax.concept), ax.individual)
    return ax


# ---------------------------------------------------------------------------
# signature and ontology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    concepts: frozenset = frozenset()
    roles: frozenset = frozenset()
    individuals: frozenset = frozenset()

    def __post_init__(self):
        for kind in ("concepts", "roles", "individuals"):
            object.__setattr__(self, kind, frozenset(getattr(self, kind)))
            for name in getattr(self, kind):
                if not isinstance(name, str) or not NAME_RE.match(name):
                    raise OntologyError(f"invalid {kind[:-1]} name {name!r}")
                if name in RESERVED:
                    raise OntologyError(f"{name!r} is a reserved word")
        overlap = (
            (self.concepts & self.roles)
            | (self.concepts & self.individuals)
            | (self.roles & self.individuals)
        )
        if overlap:
            raise OntologyError(f"names declared in more than one category: {sorted(overlap)}")

    def union(self, other: "Signature") -> "Signature":
        return Signature(
            self.concepts | other.concepts,
            self.roles | other.roles,
            self.individuals | other.individuals,
        )

    def __contains__(self, name: str) -> bool:
        return name in self.concepts or name in self.roles or name in self.individuals


@dataclass(frozen=True)
class Ontology:
    """Immutable ``<T, A>`` pair over an explicit signature."""

    signature: Signature = field(default_factory=Signature)
    tbox: tuple = ()
    abox: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tbox", tuple(self.tbox))
        object.__setattr__(self, "abox", tuple(self.abox))
        for ax in self.tbox:
            if not isinstance(ax, (Gci, Ri)):
                raise OntologyError(f"not a TBox axiom: {ax}")
        for ax in self.abox:
            if not isinstance(ax, (ConceptAssertion, RoleAssertion, Equality, Inequality)):
                raise OntologyError(f"not an ABox axiom: {ax}")
        sig = self.signature
        for ax in self.tbox + self.abox:
            cs, rs, ins = axiom_names(ax)
            missing = (cs - sig.concepts) | (rs - sig.roles) | (ins - sig.individuals)
            if missing:
                raise UndeclaredNameError(f"undeclared names {sorted(missing)} in {ax}")

    def normalized(self) -> "Ontology":
        """Canonical concepts, axioms deduplicated and sorted by their text."""
        tbox = {str(a): a for a in map(canonical_axiom, self.tbox)}
        abox = {str(a): a for a in map(canonical_axiom, self.abox)}
        return Ontology(
            self.signature,
            tuple(tbox[k] for k in sorted(tbox)),
            tuple(abox[k] for k in sorted(abox)),
        )

    def with_abox(self, abox: Iterable[ABoxAxiom]) -> "Ontology":
        return Ontology(self.signature, self.tbox, tuple(abox))


def signature_of(o: Ontology) -> Signature:
    return o.signature


def scan_signature(axioms: Iterable[Axiom]) -> Signature:
    cs: set[str] = set()
    rs: set[str] = set()
    ins: set[str] = set()
    for ax in axioms:
        a, b, c = axiom_names(ax)
        cs |= a
        rs |= b
        ins |= c
    return Signature(frozenset(cs), frozenset(rs), frozenset(ins))


def merge_abox(base: Ontology, extra: Iterable) -> Ontology:
    """Materialise entailments (or ABox axioms) into ``base``'s ABox.

    Names unknown to ``base`` are added to its signature.
    """
    new = []
    for g in extra:
        new.append(g.to_axiom() if hasattr(g, "to_axiom") else g)
    if not new:
        return base
    present = set(base.abox)
    abox = list(base.abox) + [a for a in dict.fromkeys(new) if a not in present]
    sig = base.signature.union(scan_signature(new))
    return Ontology(sig, base.tbox, tuple(abox))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(!=|[(),=]|[A-Za-z_][A-Za-z0-9_]*)")


def _tokenize(text: str, line: int) -> list[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise OntologySyntaxError(f"unexpected character {text[pos:].strip()[:1]!r}", line)
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _Tokens:
    def __init__(self, tokens: list[str], line: int):
        self.tokens = tokens
        self.i = 0
        self.line = line

    def peek(self, k: int = 0) -> str | None:
        j = self.i + k
        return self.tokens[j] if j < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise OntologySyntaxError("unexpected end of line", self.line)
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise OntologySyntaxError(f"expected {tok!r}, got {got!r}", self.line)

    def name(self) -> str:
        tok = self.next()
        if not NAME_RE.match(tok):
            raise OntologySyntaxError(f"expected a name, got {tok!r}", self.line)
        return tok

    def done(self) -> None:
        if self.peek() is not None:
            raise OntologySyntaxError(f"trailing tokens: {' '.join(self.tokens[self.i:])}", self.line)


def _parse_concept(ts: _Tokens) -> Concept:
    tok = ts.name()
    if tok == "Top":
        return TOP
    if tok == "Bottom":
        return BOTTOM
    if tok in ("And", "Some", "One") and ts.peek() == "(":
        ts.expect("(")
        if tok == "One":
            ind = ts.name()
            ts.expect(")")
            return One(ind)
        if tok == "Some":
            role = ts.name()
            filler = _parse_concept(ts)
            ts.expect(")")
            return Some(role, filler)
        parts = [_parse_concept(ts)]
        while ts.peek() != ")":
            parts.append(_parse_concept(ts))
        ts.expect(")")
        if len(parts) < 2:
            raise OntologySyntaxError("And needs at least two conjuncts", ts.line)
        return conj(*parts)
    if tok in RESERVED:
        raise OntologySyntaxError(f"misplaced keyword {tok!r}", ts.line)
    return Atomic(tok)


def parse_concept(text: str) -> Concept:
    ts = _Tokens(_tokenize(text, 0), 0)
    c = _parse_concept(ts)
    ts.done()
    return c


def _parse_axiom(ts: _Tokens) -> Axiom:
    kw = ts.next()
    if kw == "GCI":
        sub = _parse_concept(ts)
        if ts.next() != "SubClassOf":
            raise OntologySyntaxError("expected SubClassOf", ts.line)
        return Gci(sub, _parse_concept(ts))
    if kw == "RI":
        sub = ts.name()
        tok = ts.next()
        if tok != "SubRoleOf":
            raise OntologySyntaxError("expected SubRoleOf (role chains are not supported)", ts.line)
        return Ri(sub, ts.name())
    if kw == "CA":
        c = _parse_concept(ts)
        ts.expect("(")
        ind = ts.name()
        ts.expect(")")
        return ConceptAssertion(c, ind)
    if kw == "RA":
        role = ts.name()
        ts.expect("(")
        a = ts.name()
        ts.expect(",")
        b = ts.name()
        ts.expect(")")
        return RoleAssertion(role, a, b)
    if kw == "EQ":
        a = ts.name()
        ts.expect("=")
        return Equality(a, ts.name())
    if kw == "NEQ":
        a = ts.name()
        ts.expect("!=")
        return Inequality(a, ts.name())
    raise OntologySyntaxError(f"unknown statement {kw!r}", ts.line)


_DECL = {"Concept": "concepts", "Role": "roles", "Individual": "individuals"}


def parse_ontology(text: str) -> Ontology:
    """Parse an ``.onto`` document.

    Every name used by an axiom must be declared; redeclaring a name (in any
    category) is an error.
    """
    decls: dict[str, set[str]] = {k: set() for k in _DECL.values()}
    seen: dict[str, str] = {}
    tbox: list[Axiom] = []
    abox: list[Axiom] = []
    lines: list[tuple[int, Axiom]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        ts = _Tokens(_tokenize(body, lineno), lineno)
        head = ts.peek()
        if head in _DECL:
            ts.next()
            name = ts.name()
            ts.done()
            if name in RESERVED:
                raise OntologySyntaxError(f"{name!r} is a reserved word", lineno)
            if name in seen:
                raise DuplicateDeclarationError(
                    f"line {lineno}: {name!r} already declared as {seen[name]}"
                )
            seen[name] = head
            decls[_DECL[head]].add(name)
            continue
        ax = _parse_axiom(ts)
        ts.done()
        lines.append((lineno, ax))
    sig = Signature(
        frozenset(decls["concepts"]), frozenset(decls["roles"]), frozenset(decls["individuals"])
    )
    for lineno, ax in lines:
        cs, rs, ins = axiom_names(ax)
        missing = (cs - sig.concepts) | (rs - sig.roles) | (ins - sig.individuals)
        if missing:
            raise UndeclaredNameError(f"line {lineno}: undeclared names {sorted(missing)}")
        ax = canonical_axiom(ax)
        (tbox if isinstance(ax, (Gci, Ri)) else abox).append(ax)
    return Ontology(sig, tuple(tbox), tuple(abox))


def serialize_ontology(o: Ontology) -> str:
    """Canonical text: sorted declarations, then sorted TBox, then sorted ABox."""
    n = o.normalized()
    out = []
    for kw, names in (
        ("Concept", n.signature.concepts),
        ("Role", n.signature.roles),
        ("Individual", n.signature.individuals),
    ):
        out.extend(f"{kw} {name}" for name in sorted(names))
    out.extend(str(a) for a in n.tbox)
    out.extend(str(a) for a in n.abox)
    return "".join(line + "\n" for line in out)
