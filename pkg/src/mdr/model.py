"""Core metadata model for clinical data dictionaries.

Six metadata classes arranged in a conceptual layer (ConceptualDomain,
DataElementConcept) and a representational layer (ValueDomain,
PermissibleValue), plus Registry and DataElement rows that anchor both
layers to concrete storage paths. The three inter-layer relations are
many-to-many sets carried by a LinkSet, so the poly-hierarchies found in
medical ontologies can be represented without duplicating terms.

Everything in this module is a pure value type with no interior
mutability; persistence lives in :mod:`mdr.store`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import ValidationFailed

LOCAL_ONTOLOGY = "LOCAL"


class Kind(str, enum.Enum):
    """The six storable metadata classes."""

    REGISTRY = "registry"
    CONCEPTUAL_DOMAIN = "conceptual_domain"
    DATA_ELEMENT_CONCEPT = "data_element_concept"
    VALUE_DOMAIN = "value_domain"
    PERMISSIBLE_VALUE = "permissible_value"
    DATA_ELEMENT = "data_element"


#: Kinds identified by an (ontology name, ontology id) pair.
REF_KINDS = (
    Kind.CONCEPTUAL_DOMAIN,
    Kind.DATA_ELEMENT_CONCEPT,
    Kind.VALUE_DOMAIN,
    Kind.PERMISSIBLE_VALUE,
)


class Relation(str, enum.Enum):
    """The three many-to-many link relations."""

    CD_DEC = "cd_dec"
    CD_VD = "cd_vd"
    VD_PV = "vd_pv"


#: (left kind, right kind) endpoint types per relation.
RELATION_ENDPOINTS: dict[Relation, tuple[Kind, Kind]] = {
    Relation.CD_DEC: (Kind.CONCEPTUAL_DOMAIN, Kind.DATA_ELEMENT_CONCEPT),
    Relation.CD_VD: (Kind.CONCEPTUAL_DOMAIN, Kind.VALUE_DOMAIN),
    Relation.VD_PV: (Kind.VALUE_DOMAIN, Kind.PERMISSIBLE_VALUE),
}


class Datatype(str, enum.Enum):
    ENUMERATED = "enumerated"
    INTEGER = "integer"
    DECIMAL = "decimal"
    STRING = "string"
    DATE = "date"
    BOOLEAN = "boolean"


NUMERIC_DATATYPES = (Datatype.INTEGER, Datatype.DECIMAL)


@dataclass(frozen=True, order=True)
class OntologyRef:
    """Globally unique key of a catalogued term: ontology name plus id.

    The pair is compared byte-exactly; ontology ids are case-significant
    codes. ``LOCAL`` is reserved for user-created items whose ids are
    generated by the repository.
    """

    ontology_name: str
    ontology_id: str

    def __str__(self) -> str:
        return f"{self.ontology_name}:{self.ontology_id}"


@dataclass(frozen=True)
class NumericRange:
    """Closed or open numeric interval attached to a numeric value domain."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True


@dataclass(frozen=True)
class ConceptualDomain:
    """Semantic grouping of related concepts, typically an ontology ancestor."""

    id: str
    ref: OntologyRef
    label: str
    definition: str | None = None
    synonyms: frozenset[str] = frozenset()


@dataclass(frozen=True)
class DataElementConcept:
    """One abstract clinical feature that elements in registries may express."""

    id: str
    ref: OntologyRef
    label: str
    definition: str | None = None
    synonyms: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ValueDomain:
    """Datatype, format and (for enumerated domains) permitted-value links.

    ``format`` doubles as the unit for numeric domains (e.g. "mg/dL").
    ``temporary`` marks intersection domains materialised by the
    compatibility engine; they are skipped by hierarchy checks and
    dashboards unless explicitly requested.
    """

    id: str
    ref: OntologyRef
    label: str
    datatype: Datatype
    format: str | None = None
    range: NumericRange | None = None
    temporary: bool = False


@dataclass(frozen=True)
class PermissibleValue:
    """One enumerated permitted value, attachable to many value domains."""

    id: str
    ref: OntologyRef
    label: str
    code: str | None = None


@dataclass(frozen=True)
class Registry:
    """An organisation-level clinical data source described by its dictionary."""

    id: str
    name: str
    organisation: str | None = None
    contact: str | None = None


@dataclass(frozen=True)
class DataElement:
    """A concrete storage path inside one registry, bound to one concept
    and one value domain."""

    id: str
    registry_id: str
    storage_path: str
    expresses: str
    value_domain: str


@dataclass(frozen=True)
class LinkSet:
    """The three many-to-many relations as sets of (left id, right id)."""

    cd_dec: frozenset[tuple[str, str]] = frozenset()
    cd_vd: frozenset[tuple[str, str]] = frozenset()
    vd_pv: frozenset[tuple[str, str]] = frozenset()

    def pairs(self, relation: Relation) -> frozenset[tuple[str, str]]:
        return getattr(self, relation.value)

    def parents_of(self, relation: Relation, right_id: str) -> set[str]:
        """Left-side ids linked to ``right_id``."""
        return {left for left, right in self.pairs(relation) if right == right_id}

    def children_of(self, relation: Relation, left_id: str) -> set[str]:
        """Right-side ids linked to ``left_id``."""
        return {right for left, right in self.pairs(relation) if left == left_id}


Entity = (
    ConceptualDomain
    | DataElementConcept
    | ValueDomain
    | PermissibleValue
    | Registry
    | DataElement
)

ENTITY_TYPES: dict[Kind, type] = {
    Kind.REGISTRY: Registry,
    Kind.CONCEPTUAL_DOMAIN: ConceptualDomain,
    Kind.DATA_ELEMENT_CONCEPT: DataElementConcept,
    Kind.VALUE_DOMAIN: ValueDomain,
    Kind.PERMISSIBLE_VALUE: PermissibleValue,
    Kind.DATA_ELEMENT: DataElement,
}


@dataclass(frozen=True)
class Snapshot:
    """Immutable view of one committed model version."""

    version: int = 0
    registries: Mapping[str, Registry] = field(default_factory=dict)
    conceptual_domains: Mapping[str, ConceptualDomain] = field(default_factory=dict)
    data_element_concepts: Mapping[str, DataElementConcept] = field(default_factory=dict)
    value_domains: Mapping[str, ValueDomain] = field(default_factory=dict)
    permissible_values: Mapping[str, PermissibleValue] = field(default_factory=dict)
    data_elements: Mapping[str, DataElement] = field(default_factory=dict)
    links: LinkSet = field(default_factory=LinkSet)

    _COLLECTIONS = {
        Kind.REGISTRY: "registries",
        Kind.CONCEPTUAL_DOMAIN: "conceptual_domains",
        Kind.DATA_ELEMENT_CONCEPT: "data_element_concepts",
        Kind.VALUE_DOMAIN: "value_domains",
        Kind.PERMISSIBLE_VALUE: "permissible_values",
        Kind.DATA_ELEMENT: "data_elements",
    }

    def collection(self, kind: Kind) -> Mapping[str, Any]:
        return getattr(self, self._COLLECTIONS[kind])

    def by_ref(self, kind: Kind) -> dict[OntologyRef, Any]:
        """Index a ref-keyed collection by OntologyRef (last one wins on
        duplicates, which validate_model reports separately)."""
        return {entity.ref: entity for entity in self.collection(kind).values()}

    def elements_of(self, registry_id: str) -> list[DataElement]:
        found = [de for de in self.data_elements.values() if de.registry_id == registry_id]
        return sorted(found, key=lambda de: de.storage_path)

    def value_refs_of(self, vd_id: str) -> set[OntologyRef]:
        """Refs of all permissible values linked to a value domain."""
        return {
            self.permissible_values[pv_id].ref
            for pv_id in self.links.children_of(Relation.VD_PV, vd_id)
            if pv_id in self.permissible_values
        }


# ---------------------------------------------------------------------------
# Payload codec
# ---------------------------------------------------------------------------

def ref_to_dict(ref: OntologyRef) -> dict[str, str]:
    return {"ontology": ref.ontology_name, "ontology_id": ref.ontology_id}


def ref_from_dict(data: Mapping[str, Any]) -> OntologyRef:
    return OntologyRef(str(data.get("ontology", "")), str(data.get("ontology_id", "")))


def range_to_dict(rng: NumericRange | None) -> dict[str, Any] | None:
    if rng is None:
        return None
    return {"lo": rng.lo, "hi": rng.hi, "lo_closed": rng.lo_closed, "hi_closed": rng.hi_closed}


def range_from_dict(data: Mapping[str, Any] | None) -> NumericRange | None:
    if data is None:
        return None
    try:
        return NumericRange(
            lo=float(data["lo"]),
            hi=float(data["hi"]),
            lo_closed=bool(data.get("lo_closed", True)),
            hi_closed=bool(data.get("hi_closed", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationFailed(f"malformed range: {exc}") from exc


def entity_to_payload(entity: Entity) -> dict[str, Any]:
    """Serialize an entity to its id-free payload dict."""
    if isinstance(entity, Registry):
        return {"name": entity.name, "organisation": entity.organisation, "contact": entity.contact}
    if isinstance(entity, (ConceptualDomain, DataElementConcept)):
        return {
            **ref_to_dict(entity.ref),
            "label": entity.label,
            "definition": entity.definition,
            "synonyms": sorted(entity.synonyms),
        }
    if isinstance(entity, ValueDomain):
        return {
            **ref_to_dict(entity.ref),
            "label": entity.label,
            "datatype": entity.datatype.value,
            "format": entity.format,
            "range": range_to_dict(entity.range),
            "temporary": entity.temporary,
        }
    if isinstance(entity, PermissibleValue):
        return {**ref_to_dict(entity.ref), "label": entity.label, "code": entity.code}
    if isinstance(entity, DataElement):
        return {
            "registry_id": entity.registry_id,
            "storage_path": entity.storage_path,
            "expresses": entity.expresses,
            "value_domain": entity.value_domain,
        }
    raise TypeError(f"not an entity: {entity!r}")


def _opt_str(payload: Mapping[str, Any], key: str) -> str | None:
    value = payload.get(key)
    if value is None:
        return None
    return str(value)


def _synonyms(payload: Mapping[str, Any]) -> frozenset[str]:
    raw = payload.get("synonyms") or []
    if not isinstance(raw, (list, tuple, set, frozenset)):
        raise ValidationFailed("synonyms must be a list of strings")
    return frozenset(str(s) for s in raw)


def entity_from_payload(kind: Kind, entity_id: str, payload: Mapping[str, Any]) -> Entity:
    """Build an entity of ``kind`` from a payload dict.

    Structural problems (bad datatype token, malformed range) raise
    ValidationFailed; semantic invariants are left to validate checks so
    arbitrary snapshots stay representable.
    """
    if kind is Kind.REGISTRY:
        return Registry(
            id=entity_id,
            name=str(payload.get("name", "")),
            organisation=_opt_str(payload, "organisation"),
            contact=_opt_str(payload, "contact"),
        )
    if kind is Kind.CONCEPTUAL_DOMAIN or kind is Kind.DATA_ELEMENT_CONCEPT:
        cls = ConceptualDomain if kind is Kind.CONCEPTUAL_DOMAIN else DataElementConcept
        return cls(
            id=entity_id,
            ref=ref_from_dict(payload),
            label=str(payload.get("label", "")),
            definition=_opt_str(payload, "definition"),
            synonyms=_synonyms(payload),
        )
    if kind is Kind.VALUE_DOMAIN:
        try:
            datatype = Datatype(str(payload.get("datatype", "")))
        except ValueError:
            raise ValidationFailed(
                f"invalid datatype {payload.get('datatype')!r}; expected one of "
                + ", ".join(d.value for d in Datatype)
            ) from None
        return ValueDomain(
            id=entity_id,
            ref=ref_from_dict(payload),
            label=str(payload.get("label", "")),
            datatype=datatype,
            format=_opt_str(payload, "format"),
            range=range_from_dict(payload.get("range")),
            temporary=bool(payload.get("temporary", False)),
        )
    if kind is Kind.PERMISSIBLE_VALUE:
        return PermissibleValue(
            id=entity_id,
            ref=ref_from_dict(payload),
            label=str(payload.get("label", "")),
            code=_opt_str(payload, "code"),
        )
    if kind is Kind.DATA_ELEMENT:
        return DataElement(
            id=entity_id,
            registry_id=str(payload.get("registry_id", "")),
            storage_path=str(payload.get("storage_path", "")),
            expresses=str(payload.get("expresses", "")),
            value_domain=str(payload.get("value_domain", "")),
        )
    raise TypeError(f"unknown kind: {kind}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

VIOLATION = "violation"
WARNING = "warning"


@dataclass(frozen=True, order=True)
class Finding:
    """One validity finding: a hard violation or a soft warning."""

    severity: str
    rule: str
    kind: str
    entity_id: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def violations(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == VIOLATION)

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == WARNING)

    @property
    def is_clean(self) -> bool:
        return not self.findings

    @property
    def has_violations(self) -> bool:
        return any(f.severity == VIOLATION for f in self.findings)


def validate_entity(entity: Entity) -> list[str]:
    """Payload-local invariant check; returns human-readable problems.

    Used by the store before committing a create or update. Snapshot-wide
    rules (uniqueness, referential integrity) live in validate_model.
    """
    problems: list[str] = []
    if isinstance(entity, Registry):
        if not entity.name.strip():
            problems.append("registry name must be non-empty")
        return problems
    if isinstance(entity, DataElement):
        if not entity.storage_path.strip():
            problems.append("storage_path must be non-empty")
        if not entity.registry_id:
            problems.append("registry_id must be set")
        if not entity.expresses:
            problems.append("expresses must reference a data element concept")
        if not entity.value_domain:
            problems.append("value_domain must reference a value domain")
        return problems

    if not entity.ref.ontology_name or not entity.ref.ontology_id:
        problems.append("ontology and ontology_id must both be non-empty")
    if not entity.label.strip():
        problems.append("label must be non-empty")
    synonyms = getattr(entity, "synonyms", frozenset())
    seen: dict[str, str] = {}
    for syn in sorted(synonyms):
        folded = syn.casefold()
        if folded in seen:
            problems.append(f"synonyms duplicate (case-insensitive): {seen[folded]!r} / {syn!r}")
        seen[folded] = syn
    if isinstance(entity, ValueDomain) and entity.range is not None:
        if entity.datatype not in NUMERIC_DATATYPES:
            problems.append(f"range is only valid for numeric datatypes, not {entity.datatype.value}")
        if entity.range.lo > entity.range.hi:
            problems.append(f"range lo {entity.range.lo} exceeds hi {entity.range.hi}")
    return problems


def _ref_key_findings(snapshot: Snapshot) -> Iterable[Finding]:
    for kind in REF_KINDS:
        groups: dict[OntologyRef, list[str]] = {}
        for entity_id, entity in sorted(snapshot.collection(kind).items()):
            groups.setdefault(entity.ref, []).append(entity_id)
        for ref, ids in sorted(groups.items()):
            if len(ids) > 1:
                yield Finding(
                    VIOLATION,
                    "duplicate_ontology_key",
                    kind.value,
                    ids[0],
                    f"{len(ids)} {kind.value} items share ontology key {ref}: {', '.join(ids)}",
                )


def _entity_findings(snapshot: Snapshot) -> Iterable[Finding]:
    for kind in (*REF_KINDS, Kind.REGISTRY, Kind.DATA_ELEMENT):
        for entity_id, entity in sorted(snapshot.collection(kind).items()):
            for problem in validate_entity(entity):
                yield Finding(VIOLATION, "invalid_payload", kind.value, entity_id, problem)


def _registry_findings(snapshot: Snapshot) -> Iterable[Finding]:
    by_name: dict[str, list[str]] = {}
    for reg_id, reg in sorted(snapshot.registries.items()):
        by_name.setdefault(reg.name.casefold(), []).append(reg_id)
    for name, ids in sorted(by_name.items()):
        if len(ids) > 1:
            yield Finding(
                VIOLATION,
                "duplicate_registry_name",
                Kind.REGISTRY.value,
                ids[0],
                f"{len(ids)} registries share the name {name!r}: {', '.join(ids)}",
            )


def _element_findings(snapshot: Snapshot) -> Iterable[Finding]:
    by_path: dict[tuple[str, str], list[str]] = {}
    for de_id, de in sorted(snapshot.data_elements.items()):
        by_path.setdefault((de.registry_id, de.storage_path), []).append(de_id)
        if de.registry_id not in snapshot.registries:
            yield Finding(
                VIOLATION, "unknown_reference", Kind.DATA_ELEMENT.value, de_id,
                f"registry {de.registry_id!r} does not exist",
            )
        if de.expresses not in snapshot.data_element_concepts:
            yield Finding(
                VIOLATION, "unknown_reference", Kind.DATA_ELEMENT.value, de_id,
                f"data element concept {de.expresses!r} does not exist",
            )
        if de.value_domain not in snapshot.value_domains:
            yield Finding(
                VIOLATION, "unknown_reference", Kind.DATA_ELEMENT.value, de_id,
                f"value domain {de.value_domain!r} does not exist",
            )
    for (registry_id, path), ids in sorted(by_path.items()):
        if len(ids) > 1:
            yield Finding(
                VIOLATION, "duplicate_storage_path", Kind.DATA_ELEMENT.value, ids[0],
                f"{len(ids)} elements share storage path {path!r} in registry {registry_id}",
            )


def _link_findings(snapshot: Snapshot) -> Iterable[Finding]:
    for relation, (left_kind, right_kind) in RELATION_ENDPOINTS.items():
        left_coll = snapshot.collection(left_kind)
        right_coll = snapshot.collection(right_kind)
        for left, right in sorted(snapshot.links.pairs(relation)):
            if left not in left_coll:
                yield Finding(
                    VIOLATION, "unknown_link_endpoint", relation.value, left,
                    f"{relation.value} pair ({left}, {right}): unknown {left_kind.value}",
                )
            if right not in right_coll:
                yield Finding(
                    VIOLATION, "unknown_link_endpoint", relation.value, right,
                    f"{relation.value} pair ({left}, {right}): unknown {right_kind.value}",
                )


def _domain_value_findings(snapshot: Snapshot) -> Iterable[Finding]:
    linked = {left for left, _ in snapshot.links.vd_pv}
    for vd_id, vd in sorted(snapshot.value_domains.items()):
        if vd.datatype is Datatype.ENUMERATED and vd_id not in linked:
            yield Finding(
                WARNING, "enumerated_domain_without_values", Kind.VALUE_DOMAIN.value, vd_id,
                f"enumerated domain {vd.label!r} has no permissible value links yet",
            )
        if vd.datatype is not Datatype.ENUMERATED and vd_id in linked:
            yield Finding(
                VIOLATION, "values_on_non_enumerated_domain", Kind.VALUE_DOMAIN.value, vd_id,
                f"domain {vd.label!r} has datatype {vd.datatype.value} but carries value links",
            )


def _orphan_findings(snapshot: Snapshot) -> Iterable[Finding]:
    linked = {right for _, right in snapshot.links.cd_dec}
    for dec_id, dec in sorted(snapshot.data_element_concepts.items()):
        if dec_id not in linked:
            yield Finding(
                WARNING, "orphan_data_element_concept", Kind.DATA_ELEMENT_CONCEPT.value, dec_id,
                f"concept {dec.label!r} is not linked to any conceptual domain",
            )


def validate_model(snapshot: Snapshot) -> ValidationReport:
    """Check every type invariant and link rule of a snapshot.

    Pure and idempotent. Hard violations (uniqueness, referential
    integrity, payload invariants) are rejected by the store at commit
    time; warnings (orphan concepts, enumerated domains with no values
    yet) are legal intermediate states during staged ingest.
    """
    findings: list[Finding] = []
    findings.extend(_entity_findings(snapshot))
    findings.extend(_ref_key_findings(snapshot))
    findings.extend(_registry_findings(snapshot))
    findings.extend(_element_findings(snapshot))
    findings.extend(_link_findings(snapshot))
    findings.extend(_domain_value_findings(snapshot))
    findings.extend(_orphan_findings(snapshot))
    return ValidationReport(tuple(sorted(findings)))


# ---------------------------------------------------------------------------
# Strict one-to-many check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelaxationUse:
    """One place where the snapshot needs a many-to-many relation.

    A classic one-to-many metadata registry (one parent per item in each
    relation) cannot represent the entity listed here.
    """

    relation: Relation
    kind: Kind
    entity_id: str
    ref: OntologyRef
    label: str
    parent_ids: tuple[str, ...]


def strict_iso_check(snapshot: Snapshot, include_temporary: bool = False) -> list[RelaxationUse]:
    """List every entity holding more than one parent in a link relation.

    An empty result means the snapshot is representable in a strict
    one-to-many registry model. Temporary value domains are ignored
    unless ``include_temporary`` is set.
    """

    def is_temp(vd_id: str) -> bool:
        vd = snapshot.value_domains.get(vd_id)
        return bool(vd and vd.temporary)

    uses: list[RelaxationUse] = []
    for dec_id, dec in snapshot.data_element_concepts.items():
        parents = snapshot.links.parents_of(Relation.CD_DEC, dec_id)
        if len(parents) > 1:
            uses.append(RelaxationUse(
                Relation.CD_DEC, Kind.DATA_ELEMENT_CONCEPT, dec_id, dec.ref, dec.label,
                tuple(sorted(parents)),
            ))
    for vd_id, vd in snapshot.value_domains.items():
        if vd.temporary and not include_temporary:
            continue
        parents = snapshot.links.parents_of(Relation.CD_VD, vd_id)
        if len(parents) > 1:
            uses.append(RelaxationUse(
                Relation.CD_VD, Kind.VALUE_DOMAIN, vd_id, vd.ref, vd.label,
                tuple(sorted(parents)),
            ))
    for pv_id, pv in snapshot.permissible_values.items():
        parents = snapshot.links.parents_of(Relation.VD_PV, pv_id)
        if not include_temporary:
            parents = {vd_id for vd_id in parents if not is_temp(vd_id)}
        if len(parents) > 1:
            uses.append(RelaxationUse(
                Relation.VD_PV, Kind.PERMISSIBLE_VALUE, pv_id, pv.ref, pv.label,
                tuple(sorted(parents)),
            ))
    uses.sort(key=lambda u: (u.relation.value, u.label.casefold(), u.entity_id))
    return uses


def fits_strict_iso(snapshot: Snapshot, include_temporary: bool = False) -> bool:
    """True iff a strict one-to-many model could hold this snapshot."""
    return not strict_iso_check(snapshot, include_temporary=include_temporary)
