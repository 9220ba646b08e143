from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from mdr.errors import ValidationFailed
from mdr.model import (
    DataElement,
    DataElementConcept,
    Datatype,
    Kind,
    LinkSet,
    NumericRange,
    OntologyRef,
    PermissibleValue,
    Registry,
    Relation,
    Snapshot,
    ValueDomain,
    entity_from_payload,
    entity_to_payload,
    fits_strict_iso,
    strict_iso_check,
    validate_entity,
    validate_model,
)


def ref(name="ONT", ident="X1"):
    return OntologyRef(name, ident)


def test_ref_ordering_and_str():
    a = OntologyRef("A", "2")
    b = OntologyRef("A", "10")
    assert b < a  # ids compare as strings
    assert str(a) == "A:2"


def test_payload_round_trip_value_domain():
    vd = ValueDomain(id="v1", ref=ref(ident="D1"), label="Severity",
                     datatype=Datatype.INTEGER, format="score",
                     range=NumericRange(0.0, 5.0, True, False))
    payload = entity_to_payload(vd)
    back = entity_from_payload(Kind.VALUE_DOMAIN, "v1", payload)
    assert back == vd


def test_payload_rejects_bad_datatype():
    with pytest.raises(ValidationFailed):
        entity_from_payload(Kind.VALUE_DOMAIN, "v1",
                            {"ontology": "O", "ontology_id": "1", "label": "x",
                             "datatype": "floatish"})


def test_payload_rejects_malformed_range():
    with pytest.raises(ValidationFailed):
        entity_from_payload(Kind.VALUE_DOMAIN, "v1",
                            {"ontology": "O", "ontology_id": "1", "label": "x",
                             "datatype": "integer", "range": {"lo": "low"}})


def test_validate_entity_catches_local_problems():
    bad = ValueDomain(id="v1", ref=OntologyRef("", ""), label="  ",
                      datatype=Datatype.STRING, range=NumericRange(5.0, 1.0))
    problems = validate_entity(bad)
    assert any("ontology" in p for p in problems)
    assert any("label" in p for p in problems)
    assert any("range is only valid" in p for p in problems)
    assert any("exceeds" in p for p in problems)


def test_validate_entity_duplicate_synonyms_case_insensitive():
    dec = DataElementConcept(id="d1", ref=ref(), label="Thing",
                             synonyms=frozenset({"Alpha", "alpha"}))
    assert any("duplicate" in p for p in validate_entity(dec))


def _snapshot(**kwargs):
    defaults = dict(version=1, registries={}, conceptual_domains={},
                    data_element_concepts={}, value_domains={},
                    permissible_values={}, data_elements={}, links=LinkSet())
    defaults.update(kwargs)
    return Snapshot(**defaults)


def test_validate_model_duplicate_ontology_key():
    snap = _snapshot(data_element_concepts={
        "a": DataElementConcept(id="a", ref=ref(), label="One"),
        "b": DataElementConcept(id="b", ref=ref(), label="Two"),
    })
    report = validate_model(snap)
    assert any(f.rule == "duplicate_ontology_key" for f in report.violations)


def test_validate_model_registry_and_path_uniqueness():
    snap = _snapshot(
        registries={
            "r1": Registry(id="r1", name="Reg"),
            "r2": Registry(id="r2", name="reg"),
        },
    )
    assert any(f.rule == "duplicate_registry_name" for f in validate_model(snap).violations)

    dec = DataElementConcept(id="d", ref=ref(ident="C"), label="C")
    vd = ValueDomain(id="v", ref=ref(ident="D"), label="D", datatype=Datatype.STRING)
    snap = _snapshot(
        registries={"r1": Registry(id="r1", name="Reg")},
        data_element_concepts={"d": dec},
        value_domains={"v": vd},
        data_elements={
            "e1": DataElement(id="e1", registry_id="r1", storage_path="p",
                              expresses="d", value_domain="v"),
            "e2": DataElement(id="e2", registry_id="r1", storage_path="p",
                              expresses="d", value_domain="v"),
        },
        links=LinkSet(cd_dec=frozenset()),
    )
    assert any(f.rule == "duplicate_storage_path" for f in validate_model(snap).violations)


def test_validate_model_dangling_references_and_links():
    snap = _snapshot(
        data_elements={
            "e1": DataElement(id="e1", registry_id="nope", storage_path="p",
                              expresses="nodec", value_domain="novd"),
        },
        links=LinkSet(cd_dec=frozenset({("ghost_cd", "ghost_dec")})),
    )
    rules = {f.rule for f in validate_model(snap).violations}
    assert "unknown_reference" in rules
    assert "unknown_link_endpoint" in rules


def test_validate_model_enumerated_warning_and_value_link_violation():
    enum_vd = ValueDomain(id="v1", ref=ref(ident="D1"), label="Enum",
                          datatype=Datatype.ENUMERATED)
    str_vd = ValueDomain(id="v2", ref=ref(ident="D2"), label="Str",
                         datatype=Datatype.STRING)
    pv = PermissibleValue(id="p1", ref=ref(ident="P1"), label="Val")
    snap = _snapshot(
        value_domains={"v1": enum_vd, "v2": str_vd},
        permissible_values={"p1": pv},
        links=LinkSet(vd_pv=frozenset({("v2", "p1")})),
    )
    report = validate_model(snap)
    assert any(f.rule == "enumerated_domain_without_values" and f.severity == "warning"
               for f in report.warnings)
    assert any(f.rule == "values_on_non_enumerated_domain" for f in report.violations)


def test_validate_model_orphan_concept_is_warning_only():
    snap = _snapshot(data_element_concepts={
        "d": DataElementConcept(id="d", ref=ref(), label="Lonely"),
    })
    report = validate_model(snap)
    assert not report.has_violations
    assert any(f.rule == "orphan_data_element_concept" for f in report.warnings)


def test_strict_check_flags_multi_parent_entities():
    cd1 = {"id": "c1", "ref": OntologyRef("O", "CD1"), "label": "A"}
    snap = _snapshot(
        conceptual_domains={
            "c1": entity_from_payload(Kind.CONCEPTUAL_DOMAIN, "c1",
                                      {"ontology": "O", "ontology_id": "CD1", "label": "A"}),
            "c2": entity_from_payload(Kind.CONCEPTUAL_DOMAIN, "c2",
                                      {"ontology": "O", "ontology_id": "CD2", "label": "B"}),
        },
        data_element_concepts={
            "d1": DataElementConcept(id="d1", ref=ref(ident="C1"), label="Shared"),
            "d2": DataElementConcept(id="d2", ref=ref(ident="C2"), label="Single"),
        },
        links=LinkSet(cd_dec=frozenset({("c1", "d1"), ("c2", "d1"), ("c1", "d2")})),
    )
    uses = strict_iso_check(snap)
    assert len(uses) == 1
    assert uses[0].entity_id == "d1"
    assert uses[0].relation is Relation.CD_DEC
    assert uses[0].parent_ids == ("c1", "c2")
    assert not fits_strict_iso(snap)
    del cd1


def test_strict_check_skips_temporary_domains_by_default():
    temp_vd = ValueDomain(id="t1", ref=OntologyRef("LOCAL", "tmp1"), label="Temp",
                          datatype=Datatype.ENUMERATED, temporary=True)
    real_vd = ValueDomain(id="v1", ref=ref(ident="D1"), label="Real",
                          datatype=Datatype.ENUMERATED)
    pv = PermissibleValue(id="p1", ref=ref(ident="P1"), label="Val")
    snap = _snapshot(
        value_domains={"t1": temp_vd, "v1": real_vd},
        permissible_values={"p1": pv},
        links=LinkSet(vd_pv=frozenset({("t1", "p1"), ("v1", "p1")})),
    )
    assert strict_iso_check(snap) == []
    included = strict_iso_check(snap, include_temporary=True)
    assert [u.entity_id for u in included] == ["p1"]


_texts = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=30
).filter(lambda s: s.strip())


@given(ontology=_texts, ident=_texts, label=_texts,
       definition=st.none() | _texts,
       synonyms=st.lists(_texts, max_size=4, unique_by=lambda s: s.casefold()))
def test_concept_payload_round_trip(ontology, ident, label, definition, synonyms):
    dec = DataElementConcept(id="x", ref=OntologyRef(ontology, ident), label=label,
                             definition=definition, synonyms=frozenset(synonyms))
    assert entity_from_payload(Kind.DATA_ELEMENT_CONCEPT, "x", entity_to_payload(dec)) == dec


@given(lo=st.floats(allow_nan=False, allow_infinity=False, width=32),
       span=st.floats(min_value=0, max_value=1e6, allow_nan=False),
       lo_closed=st.booleans(), hi_closed=st.booleans(),
       datatype=st.sampled_from([Datatype.INTEGER, Datatype.DECIMAL]),
       unit=st.none() | st.sampled_from(["mg/dL", "mmol/L"]))
def test_numeric_domain_payload_round_trip(lo, span, lo_closed, hi_closed, datatype, unit):
    vd = ValueDomain(id="v", ref=ref(), label="N", datatype=datatype, format=unit,
                     range=NumericRange(lo, lo + span, lo_closed, hi_closed))
    assert entity_from_payload(Kind.VALUE_DOMAIN, "v", entity_to_payload(vd)) == vd
