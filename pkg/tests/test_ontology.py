import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semtl.entailment import Entailment
from semtl.ontology import (
    And,
    Atomic,
    ConceptAssertion,
    DuplicateDeclarationError,
    Gci,
    Ontology,
    OntologyError,
    OntologySyntaxError,
    Signature,
    Some,
    UndeclaredNameError,
    axiom_names,
    merge_abox,
    parse_ontology,
    scan_signature,
    serialize_ontology,
    signature_of,
)
from semtl.random_ontology import random_ontology
from semtl.reasoner import entailment_closure

ROAD = """\
Concept Road
Concept Way
Concept Continent
Role locatedIn
GCI Road SubClassOf And(Way Some(locatedIn Continent))
"""


def test_minimal_document():
    o = parse_ontology("Concept Road\nConcept Way\nGCI Road SubClassOf Way")
    assert len(o.tbox) == 1 and not o.abox
    assert o.tbox[0] == Gci(Atomic("Road"), Atomic("Way"))


def test_ways_in_a_continent_has_two_conjuncts():
    (gci,) = parse_ontology(ROAD).tbox
    assert isinstance(gci.sup, And)
    assert set(gci.sup.conjuncts) == {Atomic("Way"), Some("locatedIn", Atomic("Continent"))}


def test_signature_of_road_example():
    sig = signature_of(parse_ontology(ROAD))
    assert {"Road", "Way", "Continent"} <= sig.concepts
    assert "locatedIn" in sig.roles


def test_undeclared_name():
    with pytest.raises(UndeclaredNameError):
        parse_ontology("Concept Road\nGCI Road SubClassOf Bogus")


def test_duplicate_declaration():
    with pytest.raises(DuplicateDeclarationError):
        parse_ontology("Concept A\nRole A")


@pytest.mark.parametrize(
    "text",
    [
        "Concept A\nGCI A Way",
        "Concept A\nFOO A",
        "Role r\nRole s\nRI r s",
        "Concept A\nIndividual a\nCA A(a",
    ],
)
def test_syntax_errors(text):
    with pytest.raises(OntologyError):
        parse_ontology(text)


def test_reserved_word_rejected():
    with pytest.raises(OntologySyntaxError):
        parse_ontology("Concept Bottom")


def test_conjunctions_flattened_and_sorted():
    o = parse_ontology("Concept A\nConcept B\nConcept C\nGCI And(C And(B A) B) SubClassOf A")
    assert o.tbox[0].sub == And((Atomic("A"), Atomic("B"), Atomic("C")))


def test_empty_ontology():
    o = Ontology()
    assert serialize_ontology(o) == ""
    assert signature_of(o) == Signature()
    assert parse_ontology("") == o


def test_reserialize_is_idempotent():
    text = serialize_ontology(parse_ontology(ROAD))
    assert serialize_ontology(parse_ontology(text)) == text


def test_comments_and_blank_lines():
    o = parse_ontology("# header\n\nConcept A  # trailing\nIndividual a\nCA A(a)\n")
    assert o.abox == (ConceptAssertion(Atomic("A"), "a"),)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_round_trip_random(seed):
    o = random_ontology(seed)
    assert parse_ontology(serialize_ontology(o)) == o.normalized()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_signature_covers_axioms(seed):
    o = random_ontology(seed)
    scanned = scan_signature(o.tbox + o.abox)
    sig = signature_of(o)
    assert scanned.concepts <= sig.concepts
    assert scanned.roles <= sig.roles
    assert scanned.individuals <= sig.individuals
    for ax in o.tbox + o.abox:
        cs, rs, ins = axiom_names(ax)
        assert cs <= sig.concepts and rs <= sig.roles and ins <= sig.individuals


def test_signature_rejects_overlap():
    with pytest.raises(OntologyError):
        Signature(frozenset({"A"}), frozenset({"A"}))


def test_merge_empty_is_identity():
    o = parse_ontology(ROAD)
    assert merge_abox(o, []) is o


def test_merge_adds_one_assertion():
    o = parse_ontology(ROAD + "Individual r4\nConcept Disrupted\n")
    merged = merge_abox(o, [Entailment.concept("Disrupted", "r4")])
    assert len(merged.abox) == len(o.abox) + 1
    assert set(o.abox) <= set(merged.abox)


def test_merge_extends_signature():
    o = parse_ontology("Concept A\n")
    merged = merge_abox(o, [Entailment.role("r", "a", "b")])
    assert "r" in merged.signature.roles and {"a", "b"} <= merged.signature.individuals


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_merge_own_closure_adds_nothing(seed):
    o = random_ontology(seed)
    closure = entailment_closure(o)
    if not closure.consistent:
        return
    merged = merge_abox(o, closure)
    assert set(o.abox) <= set(merged.abox)
    assert entailment_closure(merged) == closure


def test_entailment_text_round_trip():
    for text in ("CA Cleared(r0)", "RA hasEvent(r0,e1)"):
        assert str(Entailment.parse(text)) == text
    with pytest.raises(ValueError):
        Entailment.parse("CA Cleared(r0,r1)")
