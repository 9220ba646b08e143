"""Data-dictionary documents: a portable JSON form of the whole model.

A document carries registries (keyed by name), the four catalogued
kinds (keyed by ontology ref), data elements (keyed by registry name
plus storage path) and the three link relations as ref pairs. Entity
ids are deliberately absent: they are store-local, and a document
imported elsewhere gets fresh ones.

Export is canonical: sorted keys, sorted lists, two-space indent, UTF-8
without escapes, trailing newline, optional fields omitted when empty.
Exporting, importing into an empty store and exporting again reproduces
the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    DuplicateName,
    DuplicateOntologyKey,
    DuplicateStoragePath,
    ParseError,
    ReferentialGap,
)
from .model import (
    Datatype,
    Kind,
    LinkSet,
    OntologyRef,
    REF_KINDS,
    Relation,
    Snapshot,
    entity_from_payload,
    range_to_dict,
)

FORMAT_VERSION = 1

_KIND_SECTIONS = {
    Kind.CONCEPTUAL_DOMAIN: "conceptual_domains",
    Kind.DATA_ELEMENT_CONCEPT: "data_element_concepts",
    Kind.VALUE_DOMAIN: "value_domains",
    Kind.PERMISSIBLE_VALUE: "permissible_values",
}


def _ref_dict(ref: OntologyRef) -> dict[str, str]:
    return {"ontology": ref.ontology_name, "ontology_id": ref.ontology_id}


def _ref_from(data: Any, where: str) -> OntologyRef:
    if not isinstance(data, Mapping) or "ontology" not in data or "ontology_id" not in data:
        raise ParseError(f"{where}: expected an object with ontology and ontology_id")
    return OntologyRef(str(data["ontology"]), str(data["ontology_id"]))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _strip_empty(payload: dict[str, Any]) -> dict[str, Any]:
    return {
        key: value
        for key, value in payload.items()
        if value is not None and value != [] and value is not False
    }


def document_from_snapshot(snapshot: Snapshot) -> dict[str, Any]:
    """The document dict for a snapshot; lists in canonical order."""
    doc: dict[str, Any] = {"format_version": FORMAT_VERSION}

    doc["registries"] = [
        _strip_empty({"name": reg.name, "organisation": reg.organisation, "contact": reg.contact})
        for reg in sorted(snapshot.registries.values(), key=lambda r: r.name.casefold())
    ]

    for kind, section in _KIND_SECTIONS.items():
        rows = []
        for entity in sorted(snapshot.collection(kind).values(), key=lambda e: e.ref):
            row: dict[str, Any] = {**_ref_dict(entity.ref), "label": entity.label}
            if kind in (Kind.CONCEPTUAL_DOMAIN, Kind.DATA_ELEMENT_CONCEPT):
                row["definition"] = entity.definition
                row["synonyms"] = sorted(entity.synonyms)
            elif kind is Kind.VALUE_DOMAIN:
                row["datatype"] = entity.datatype.value
                row["format"] = entity.format
                row["range"] = range_to_dict(entity.range)
                row["temporary"] = entity.temporary
            else:
                row["code"] = entity.code
            rows.append(_strip_empty(row))
        doc[section] = rows

    vd_by_id = snapshot.value_domains
    dec_by_id = snapshot.data_element_concepts
    elements = []
    for de in snapshot.data_elements.values():
        reg = snapshot.registries[de.registry_id]
        elements.append({
            "registry": reg.name,
            "storage_path": de.storage_path,
            "expresses": _ref_dict(dec_by_id[de.expresses].ref),
            "value_domain": _ref_dict(vd_by_id[de.value_domain].ref),
        })
    elements.sort(key=lambda row: (row["registry"].casefold(), row["storage_path"]))
    doc["data_elements"] = elements

    ref_of = {
        Kind.CONCEPTUAL_DOMAIN: {e.id: e.ref for e in snapshot.conceptual_domains.values()},
        Kind.DATA_ELEMENT_CONCEPT: {e.id: e.ref for e in snapshot.data_element_concepts.values()},
        Kind.VALUE_DOMAIN: {e.id: e.ref for e in snapshot.value_domains.values()},
        Kind.PERMISSIBLE_VALUE: {e.id: e.ref for e in snapshot.permissible_values.values()},
    }
    links: dict[str, list] = {}
    from .model import RELATION_ENDPOINTS

    for relation, (left_kind, right_kind) in RELATION_ENDPOINTS.items():
        pairs = []
        for left_id, right_id in snapshot.links.pairs(relation):
            pairs.append((ref_of[left_kind][left_id], ref_of[right_kind][right_id]))
        pairs.sort()
        links[relation.value] = [
            [_ref_dict(left), _ref_dict(right)] for left, right in pairs
        ]
    doc["links"] = links
    return doc


def export_document(snapshot: Snapshot) -> str:
    """Canonical text form; byte-stable for a given model state."""
    return json.dumps(document_from_snapshot(snapshot), indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_document(source: str | Path | Mapping[str, Any]) -> dict[str, Any]:
    """Load and structurally check a document; raises ParseError."""
    if isinstance(source, Mapping):
        doc: Any = dict(source)
    else:
        text = Path(source).read_text("utf-8") if isinstance(source, Path) else source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"document is not valid JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}; this build reads {FORMAT_VERSION}")
    for section in ("registries", *_KIND_SECTIONS.values(), "data_elements"):
        rows = doc.get(section, [])
        if not isinstance(rows, list) or any(not isinstance(r, dict) for r in rows):
            raise ParseError(f"section {section!r} must be a list of objects")
    links = doc.get("links", {})
    if not isinstance(links, dict):
        raise ParseError("section 'links' must be an object")
    for relation in Relation:
        for pair in links.get(relation.value, []):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError(f"links.{relation.value}: each entry must be a two-element list")
    return doc


def _payload_from_row(kind: Kind, row: Mapping[str, Any]) -> dict[str, Any]:
    """Document row -> store payload (both use flat ontology keys)."""
    payload = dict(row)
    if kind is Kind.VALUE_DOMAIN and "datatype" not in payload:
        raise ParseError(f"value domain {payload.get('label')!r} is missing its datatype")
    return payload


# ---------------------------------------------------------------------------
# Import
# ---------------------------------------------------------------------------

@dataclass
class ImportReport:
    """Counts of what an import did; ``skipped`` lists kept-as-is keys."""

    created: int = 0
    merged: int = 0
    skipped: int = 0
    links_added: int = 0
    links_existing: int = 0
    skipped_keys: list[str] = field(default_factory=list)

    def as_dict(self) -> dict[str, Any]:
        return {
            "created": self.created,
            "merged": self.merged,
            "skipped": self.skipped,
            "links_added": self.links_added,
            "links_existing": self.links_existing,
            "skipped_keys": list(self.skipped_keys),
        }


def _same_payload(kind: Kind, existing: Any, row: Mapping[str, Any]) -> bool:
    """Compare an existing entity against a document row, field by field."""
    if kind is Kind.REGISTRY:
        return (
            existing.organisation == row.get("organisation")
            and existing.contact == row.get("contact")
        )
    if kind in (Kind.CONCEPTUAL_DOMAIN, Kind.DATA_ELEMENT_CONCEPT):
        return (
            existing.label == str(row.get("label", ""))
            and existing.definition == row.get("definition")
            and existing.synonyms == frozenset(str(s) for s in row.get("synonyms") or [])
        )
    if kind is Kind.VALUE_DOMAIN:
        incoming_range = row.get("range")
        return (
            existing.label == str(row.get("label", ""))
            and existing.datatype.value == row.get("datatype")
            and existing.format == row.get("format")
            and range_to_dict(existing.range) == incoming_range
            and existing.temporary == bool(row.get("temporary", False))
        )
    if kind is Kind.PERMISSIBLE_VALUE:
        return existing.label == str(row.get("label", "")) and existing.code == row.get("code")
    raise TypeError(kind)


def _strict_preflight(snapshot: Snapshot, doc: Mapping[str, Any]) -> None:
    """In strict mode, fail on the first ontology-key collision before
    anything else, then on registry name and storage path collisions."""
    for kind in REF_KINDS:
        existing = {entity.ref for entity in snapshot.collection(kind).values()}
        seen: set[OntologyRef] = set()
        rows = sorted(
            doc.get(_KIND_SECTIONS[kind], []),
            key=lambda row: (str(row.get("ontology", "")), str(row.get("ontology_id", ""))),
        )
        for row in rows:
            ref = _ref_from(row, _KIND_SECTIONS[kind])
            if ref in existing:
                raise DuplicateOntologyKey(
                    f"{kind.value} with ontology key {ref} already exists in the store"
                )
            if ref in seen:
                raise DuplicateOntologyKey(
                    f"document lists ontology key {ref} twice under {_KIND_SECTIONS[kind]}"
                )
            seen.add(ref)
    existing_names = {reg.name.casefold() for reg in snapshot.registries.values()}
    for row in doc.get("registries", []):
        name = str(row.get("name", ""))
        if name.casefold() in existing_names:
            raise DuplicateName(f"registry named {name!r} already exists in the store")
    existing_paths = set()
    for de in snapshot.data_elements.values():
        reg = snapshot.registries[de.registry_id]
        existing_paths.add((reg.name.casefold(), de.storage_path))
    for row in doc.get("data_elements", []):
        key = (str(row.get("registry", "")).casefold(), str(row.get("storage_path", "")))
        if key in existing_paths:
            raise DuplicateStoragePath(
                f"storage path {key[1]!r} already exists in registry {row.get('registry')!r}"
            )


def import_document(store, source: str | Path | Mapping[str, Any], mode: str = "strict",
                    actor: str = "import") -> ImportReport:
    """Apply a document to a store in one transaction.

    ``strict`` rejects any collision with existing content (ontology key
    collisions are reported first). ``merge`` reuses entities whose
    payload is identical, keeps the existing row when payloads differ
    (counted as skipped) and adds whatever links are missing.
    """
    if mode not in ("strict", "merge"):
        raise ValueError(f"unknown import mode {mode!r}; expected strict or merge")
    doc = parse_document(source)
    snapshot = store.snapshot()
    if mode == "strict":
        _strict_preflight(snapshot, doc)

    report = ImportReport()
    with store.transaction(actor) as txn:
        registry_ids: dict[str, str] = {
            reg.name.casefold(): reg.id for reg in snapshot.registries.values()
        }
        for row in doc.get("registries", []):
            name = str(row.get("name", ""))
            key = name.casefold()
            if key in registry_ids:
                existing = txn.get(Kind.REGISTRY, registry_ids[key])
                if _same_payload(Kind.REGISTRY, existing, row):
                    report.merged += 1
                else:
                    report.skipped += 1
                    report.skipped_keys.append(f"registry:{name}")
            else:
                created = txn.create(Kind.REGISTRY, dict(row))
                registry_ids[key] = created.id
                report.created += 1

        entity_ids: dict[Kind, dict[OntologyRef, str]] = {}
        for kind in REF_KINDS:
            entity_ids[kind] = {e.ref: e.id for e in snapshot.collection(kind).values()}
            for row in doc.get(_KIND_SECTIONS[kind], []):
                ref = _ref_from(row, _KIND_SECTIONS[kind])
                if ref in entity_ids[kind]:
                    existing = txn.get(kind, entity_ids[kind][ref])
                    if _same_payload(kind, existing, row):
                        report.merged += 1
                    else:
                        report.skipped += 1
                        report.skipped_keys.append(f"{kind.value}:{ref}")
                else:
                    created = txn.create(kind, _payload_from_row(kind, row))
                    entity_ids[kind][ref] = created.id
                    report.created += 1

        element_ids: dict[tuple[str, str], str] = {}
        for de in snapshot.data_elements.values():
            reg = snapshot.registries[de.registry_id]
            element_ids[(reg.name.casefold(), de.storage_path)] = de.id
        for row in doc.get("data_elements", []):
            reg_name = str(row.get("registry", ""))
            path = str(row.get("storage_path", ""))
            if reg_name.casefold() not in registry_ids:
                raise ReferentialGap(f"data element {path!r} names unknown registry {reg_name!r}")
            dec_ref = _ref_from(row.get("expresses"), f"data element {path!r} expresses")
            vd_ref = _ref_from(row.get("value_domain"), f"data element {path!r} value_domain")
            if dec_ref not in entity_ids[Kind.DATA_ELEMENT_CONCEPT]:
                raise ReferentialGap(f"data element {path!r} expresses unknown concept {dec_ref}")
            if vd_ref not in entity_ids[Kind.VALUE_DOMAIN]:
                raise ReferentialGap(f"data element {path!r} uses unknown value domain {vd_ref}")
            key = (reg_name.casefold(), path)
            payload = {
                "registry_id": registry_ids[key[0]],
                "storage_path": path,
                "expresses": entity_ids[Kind.DATA_ELEMENT_CONCEPT][dec_ref],
                "value_domain": entity_ids[Kind.VALUE_DOMAIN][vd_ref],
            }
            if key in element_ids:
                existing = txn.get(Kind.DATA_ELEMENT, element_ids[key])
                if (existing.expresses == payload["expresses"]
                        and existing.value_domain == payload["value_domain"]):
                    report.merged += 1
                else:
                    report.skipped += 1
                    report.skipped_keys.append(f"data_element:{reg_name}/{path}")
            else:
                created = txn.create(Kind.DATA_ELEMENT, payload)
                element_ids[key] = created.id
                report.created += 1

        from .model import RELATION_ENDPOINTS

        existing_links = {
            relation: set(snapshot.links.pairs(relation)) for relation in Relation
        }
        for relation in Relation:
            left_kind, right_kind = RELATION_ENDPOINTS[relation]
            for pair in doc.get("links", {}).get(relation.value, []):
                left_ref = _ref_from(pair[0], f"links.{relation.value}")
                right_ref = _ref_from(pair[1], f"links.{relation.value}")
                if left_ref not in entity_ids[left_kind]:
                    raise ReferentialGap(f"links.{relation.value}: unknown {left_kind.value} {left_ref}")
                if right_ref not in entity_ids[right_kind]:
                    raise ReferentialGap(f"links.{relation.value}: unknown {right_kind.value} {right_ref}")
                ids = (entity_ids[left_kind][left_ref], entity_ids[right_kind][right_ref])
                if ids in existing_links[relation]:
                    report.links_existing += 1
                else:
                    txn.link(relation, *ids)
                    existing_links[relation].add(ids)
                    report.links_added += 1
    return report


# ---------------------------------------------------------------------------
# Standalone snapshot construction (validation without a store)
# ---------------------------------------------------------------------------

def snapshot_from_document(source: str | Path | Mapping[str, Any]) -> Snapshot:
    """Build an in-memory snapshot from a document for offline checks.

    Unknown refs in elements or links raise ReferentialGap; model-level
    invariants are left to validate_model on the result.
    """
    doc = parse_document(source)
    registries: dict[str, Any] = {}
    registry_ids: dict[str, str] = {}
    for i, row in enumerate(doc.get("registries", [])):
        entity_id = f"reg{i:04d}"
        registries[entity_id] = entity_from_payload(Kind.REGISTRY, entity_id, dict(row))
        registry_ids[str(row.get("name", "")).casefold()] = entity_id

    collections: dict[Kind, dict[str, Any]] = {kind: {} for kind in REF_KINDS}
    entity_ids: dict[Kind, dict[OntologyRef, str]] = {kind: {} for kind in REF_KINDS}
    prefixes = {
        Kind.CONCEPTUAL_DOMAIN: "cd",
        Kind.DATA_ELEMENT_CONCEPT: "dec",
        Kind.VALUE_DOMAIN: "vd",
        Kind.PERMISSIBLE_VALUE: "pv",
    }
    for kind in REF_KINDS:
        for i, row in enumerate(doc.get(_KIND_SECTIONS[kind], [])):
            entity_id = f"{prefixes[kind]}{i:04d}"
            entity = entity_from_payload(kind, entity_id, _payload_from_row(kind, row))
            collections[kind][entity_id] = entity
            entity_ids[kind].setdefault(entity.ref, entity_id)

    elements: dict[str, Any] = {}
    for i, row in enumerate(doc.get("data_elements", [])):
        path = str(row.get("storage_path", ""))
        reg_key = str(row.get("registry", "")).casefold()
        if reg_key not in registry_ids:
            raise ReferentialGap(f"data element {path!r} names unknown registry {row.get('registry')!r}")
        dec_ref = _ref_from(row.get("expresses"), f"data element {path!r} expresses")
        vd_ref = _ref_from(row.get("value_domain"), f"data element {path!r} value_domain")
        if dec_ref not in entity_ids[Kind.DATA_ELEMENT_CONCEPT]:
            raise ReferentialGap(f"data element {path!r} expresses unknown concept {dec_ref}")
        if vd_ref not in entity_ids[Kind.VALUE_DOMAIN]:
            raise ReferentialGap(f"data element {path!r} uses unknown value domain {vd_ref}")
        entity_id = f"de{i:04d}"
        elements[entity_id] = entity_from_payload(Kind.DATA_ELEMENT, entity_id, {
            "registry_id": registry_ids[reg_key],
            "storage_path": path,
            "expresses": entity_ids[Kind.DATA_ELEMENT_CONCEPT][dec_ref],
            "value_domain": entity_ids[Kind.VALUE_DOMAIN][vd_ref],
        })

    from .model import RELATION_ENDPOINTS

    link_sets: dict[Relation, set[tuple[str, str]]] = {rel: set() for rel in Relation}
    for relation in Relation:
        left_kind, right_kind = RELATION_ENDPOINTS[relation]
        for pair in doc.get("links", {}).get(relation.value, []):
            left_ref = _ref_from(pair[0], f"links.{relation.value}")
            right_ref = _ref_from(pair[1], f"links.{relation.value}")
            if left_ref not in entity_ids[left_kind]:
                raise ReferentialGap(f"links.{relation.value}: unknown {left_kind.value} {left_ref}")
            if right_ref not in entity_ids[right_kind]:
                raise ReferentialGap(f"links.{relation.value}: unknown {right_kind.value} {right_ref}")
            link_sets[relation].add((entity_ids[left_kind][left_ref], entity_ids[right_kind][right_ref]))

    return Snapshot(
        version=0,
        registries=registries,
        conceptual_domains=collections[Kind.CONCEPTUAL_DOMAIN],
        data_element_concepts=collections[Kind.DATA_ELEMENT_CONCEPT],
        value_domains=collections[Kind.VALUE_DOMAIN],
        permissible_values=collections[Kind.PERMISSIBLE_VALUE],
        data_elements=elements,
        links=LinkSet(
            cd_dec=frozenset(link_sets[Relation.CD_DEC]),
            cd_vd=frozenset(link_sets[Relation.CD_VD]),
            vd_pv=frozenset(link_sets[Relation.VD_PV]),
        ),
    )
