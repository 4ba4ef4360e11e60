"""Atomic ABox entailments and sorted, immutable sets of them."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .ontology import Atomic, ConceptAssertion, RoleAssertion

_TEXT_RE = re.compile(
    r"\s*(CA|RA)\s+([A-Za-z_][A-Za-z0-9_]*)\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*"
    r"(?:,\s*([A-Za-z_][A-Za-z0-9_]*)\s*)?\)\s*\Z"
)


@dataclass(frozen=True, order=True)
class Entailment:
    """``A(a)`` when ``args`` has one individual, ``r(a,b)`` when it has two."""

    predicate: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) not in (1, 2):
            raise ValueError(f"entailment arity must be 1 or 2, got {self.args!r}")

    @classmethod
    def concept(cls, name: str, individual: str) -> "Entailment":
        return cls(name, (individual,))

    @classmethod
    def role(cls, name: str, subject: str, obj: str) -> "Entailment":
        return cls(name, (subject, obj))

    @classmethod
    def parse(cls, text: str) -> "Entailment":
        m = _TEXT_RE.match(text)
        if not m:
            raise ValueError(f"not an atomic entailment: {text!r}")
        kind, pred, a, b = m.groups()
        if kind == "CA" and b is None:
            return cls.concept(pred, a)
        if kind == "RA" and b is not None:
            return cls.role(pred, a, b)
        raise ValueError(f"arity does not match {kind}: {text!r}")

    @property
    def is_concept(self) -> bool:
        return len(self.args) == 1

    def names(self) -> tuple[set[str], set[str], set[str]]:
        if self.is_concept:
            return {self.predicate}, set(), set(self.args)
        return set(), {self.predicate}, set(self.args)

    def to_axiom(self):
        if self.is_concept:
            return ConceptAssertion(Atomic(self.predicate), self.args[0])
        return RoleAssertion(self.predicate, *self.args)

    def sort_key(self) -> str:
        return str(self)

    def __str__(self) -> str:
        if self.is_concept:
            return f"CA {self.predicate}({self.args[0]})"
        return f"RA {self.predicate}({self.args[0]},{self.args[1]})"


class EntailmentSet:
    """Duplicate-free entailments iterated in sorted text order.

    ``consistent`` is False when the set was produced from an inconsistent
    ontology (it then holds every assertion over the signature).
    """

    __slots__ = ("items", "consistent", "origin", "_order")

    def __init__(self, items: Iterable[Entailment] = (), consistent: bool = True, origin=None):
        self.items = frozenset(items)
        self.consistent = consistent
        self.origin = origin
        self._order = None

    def __iter__(self) -> Iterator[Entailment]:
        if self._order is None:
            self._order = tuple(sorted(self.items, key=str))
        return iter(self._order)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, g) -> bool:
        return g in self.items

    def __eq__(self, other) -> bool:
        if isinstance(other, EntailmentSet):
            return self.items == other.items
        if isinstance(other, (set, frozenset)):
            return self.items == other
        return NotImplemented

    def __hash__(self):
        return hash(self.items)

    def __or__(self, other) -> "EntailmentSet":
        return EntailmentSet(self.items | _items(other), self.consistent and _consistent(other))

    def __and__(self, other) -> "EntailmentSet":
        return EntailmentSet(self.items & _items(other))

    def __sub__(self, other) -> "EntailmentSet":
        return EntailmentSet(self.items - _items(other))

    def __xor__(self, other) -> "EntailmentSet":
        return EntailmentSet(self.items ^ _items(other))

    def __le__(self, other) -> bool:
        return self.items <= _items(other)

    def __ge__(self, other) -> bool:
        return self.items >= _items(other)

    def __repr__(self) -> str:
        flag = "" if self.consistent else ", consistent=False"
        return f"EntailmentSet([{', '.join(map(str, self))}]{flag})"

    def lines(self) -> list[str]:
        return [str(g) for g in self]


def _items(other) -> frozenset:
    return other.items if isinstance(other, EntailmentSet) else frozenset(other)


def _consistent(other) -> bool:
    return other.consistent if isinstance(other, EntailmentSet) else True
