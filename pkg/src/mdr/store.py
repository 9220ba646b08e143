"""Embedded transactional store for the metadata model.

State lives in memory as an immutable :class:`~mdr.model.Snapshot` and is
made durable through two files in the data directory:

* ``store.json``, a checkpoint of the last compacted snapshot, and
* ``store.journal``, a JSONL write-ahead journal of committed
  transactions since that checkpoint. Each line carries a CRC so a torn
  tail (crash mid-write) is detected and discarded on open.

Concurrency follows a single-writer, multi-reader discipline: writers
serialize on an internal lock and readers get the last published
snapshot without locking. Publication is an atomic reference swap, so a
reader never observes a half-applied transaction.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
import zlib
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterator

from . import model
from .errors import (
    DuplicateLink,
    DuplicateName,
    DuplicateOntologyKey,
    DuplicateStoragePath,
    HasReferences,
    NotFound,
    ParseError,
    UnknownEntity,
    ValidationFailed,
)
from .model import (
    Entity,
    Kind,
    LinkSet,
    Relation,
    RELATION_ENDPOINTS,
    REF_KINDS,
    Snapshot,
)

CHECKPOINT_FILE = "store.json"
JOURNAL_FILE = "store.journal"


def new_id() -> str:
    """128-bit random entity id, hex encoded."""
    return uuid.uuid4().hex


@dataclass(frozen=True)
class ChangeRecord:
    """Audit trail entry for one entity affected by a committed transaction."""

    version: int
    kind: str
    entity_id: str
    operation: str
    actor: str
    timestamp: float


def _freeze(snapshot_dicts: dict[Kind, dict[str, Any]], links: LinkSet, version: int) -> Snapshot:
    return Snapshot(
        version=version,
        registries=MappingProxyType(dict(snapshot_dicts[Kind.REGISTRY])),
        conceptual_domains=MappingProxyType(dict(snapshot_dicts[Kind.CONCEPTUAL_DOMAIN])),
        data_element_concepts=MappingProxyType(dict(snapshot_dicts[Kind.DATA_ELEMENT_CONCEPT])),
        value_domains=MappingProxyType(dict(snapshot_dicts[Kind.VALUE_DOMAIN])),
        permissible_values=MappingProxyType(dict(snapshot_dicts[Kind.PERMISSIBLE_VALUE])),
        data_elements=MappingProxyType(dict(snapshot_dicts[Kind.DATA_ELEMENT])),
        links=links,
    )


class Transaction:
    """Mutable working copy of the model, applied atomically on commit.

    Obtained from :meth:`MetadataStore.transaction`; individual
    operations raise eagerly on conflicts visible at call time, and the
    commit re-validates the whole model so interleaved preparation can
    never publish a corrupt snapshot.
    """

    def __init__(self, store: "MetadataStore", actor: str):
        self._store = store
        self.actor = actor
        base = store.snapshot()
        self._base_version = base.version
        self._entities: dict[Kind, dict[str, Any]] = {
            kind: dict(base.collection(kind)) for kind in Kind
        }
        self._links: dict[Relation, set[tuple[str, str]]] = {
            rel: set(base.links.pairs(rel)) for rel in Relation
        }
        self._ops: list[dict[str, Any]] = []
        self._changed: list[tuple[str, str, str]] = []

    # -- reads against the working copy ------------------------------------

    def get(self, kind: Kind, entity_id: str) -> Entity:
        try:
            return self._entities[kind][entity_id]
        except KeyError:
            raise NotFound(f"no {kind.value} with id {entity_id!r}") from None

    def find_by_ref(self, kind: Kind, ref: model.OntologyRef) -> Entity | None:
        for entity in self._entities[kind].values():
            if entity.ref == ref:
                return entity
        return None

    # -- guards -------------------------------------------------------------

    def _guard_ref_unique(self, kind: Kind, ref: model.OntologyRef, skip_id: str | None = None) -> None:
        for entity_id, entity in self._entities[kind].items():
            if entity_id != skip_id and entity.ref == ref:
                raise DuplicateOntologyKey(
                    f"{kind.value} with ontology key {ref} already exists (id {entity_id})"
                )

    def _guard_entity(self, kind: Kind, entity: Entity, skip_id: str | None = None) -> None:
        problems = model.validate_entity(entity)
        if problems:
            raise ValidationFailed(f"{kind.value}: " + "; ".join(problems))
        if kind in REF_KINDS:
            self._guard_ref_unique(kind, entity.ref, skip_id)
        elif kind is Kind.REGISTRY:
            folded = entity.name.casefold()
            for reg_id, reg in self._entities[Kind.REGISTRY].items():
                if reg_id != skip_id and reg.name.casefold() == folded:
                    raise DuplicateName(f"registry named {entity.name!r} already exists (id {reg_id})")
        elif kind is Kind.DATA_ELEMENT:
            if entity.registry_id not in self._entities[Kind.REGISTRY]:
                raise UnknownEntity(f"registry {entity.registry_id!r} does not exist")
            if entity.expresses not in self._entities[Kind.DATA_ELEMENT_CONCEPT]:
                raise UnknownEntity(f"data element concept {entity.expresses!r} does not exist")
            if entity.value_domain not in self._entities[Kind.VALUE_DOMAIN]:
                raise UnknownEntity(f"value domain {entity.value_domain!r} does not exist")
            for de_id, de in self._entities[Kind.DATA_ELEMENT].items():
                if (
                    de_id != skip_id
                    and de.registry_id == entity.registry_id
                    and de.storage_path == entity.storage_path
                ):
                    raise DuplicateStoragePath(
                        f"storage path {entity.storage_path!r} already exists in registry "
                        f"{entity.registry_id} (id {de_id})"
                    )

    # -- mutations ----------------------------------------------------------

    def create(self, kind: Kind, payload: dict[str, Any], entity_id: str | None = None) -> Entity:
        entity_id = entity_id or new_id()
        if any(entity_id in coll for coll in self._entities.values()):
            raise ValidationFailed(f"entity id {entity_id!r} already in use")
        entity = model.entity_from_payload(kind, entity_id, payload)
        self._guard_entity(kind, entity)
        self._entities[kind][entity_id] = entity
        self._ops.append({"op": "create", "kind": kind.value, "id": entity_id,
                          "payload": model.entity_to_payload(entity)})
        self._changed.append((kind.value, entity_id, "create"))
        return entity

    def update(self, kind: Kind, entity_id: str, payload: dict[str, Any]) -> Entity:
        self.get(kind, entity_id)
        entity = model.entity_from_payload(kind, entity_id, payload)
        self._guard_entity(kind, entity, skip_id=entity_id)
        self._entities[kind][entity_id] = entity
        self._ops.append({"op": "update", "kind": kind.value, "id": entity_id,
                          "payload": model.entity_to_payload(entity)})
        self._changed.append((kind.value, entity_id, "update"))
        return entity

    def _references_of(self, kind: Kind, entity_id: str) -> list[str]:
        """Descriptions of rows that still reference the entity."""
        refs: list[str] = []
        if kind is Kind.REGISTRY:
            for de in self._entities[Kind.DATA_ELEMENT].values():
                if de.registry_id == entity_id:
                    refs.append(f"data_element {de.id} ({de.storage_path})")
        elif kind is Kind.DATA_ELEMENT_CONCEPT:
            for de in self._entities[Kind.DATA_ELEMENT].values():
                if de.expresses == entity_id:
                    refs.append(f"data_element {de.id} ({de.storage_path})")
        elif kind is Kind.VALUE_DOMAIN:
            for de in self._entities[Kind.DATA_ELEMENT].values():
                if de.value_domain == entity_id:
                    refs.append(f"data_element {de.id} ({de.storage_path})")
        return refs

    def delete(self, kind: Kind, entity_id: str, cascade: bool = False) -> None:
        """Remove an entity.

        Link pairs touching it are removed when ``cascade`` is set;
        rows that *reference* it (data elements, for domains and
        concepts) always block deletion, cascade or not.
        """
        self.get(kind, entity_id)
        refs = self._references_of(kind, entity_id)
        if refs:
            raise HasReferences(
                f"{kind.value} {entity_id} is still referenced by: " + ", ".join(sorted(refs))
            )
        touching: list[tuple[Relation, tuple[str, str]]] = []
        for rel in Relation:
            for pair in self._links[rel]:
                if entity_id in pair:
                    touching.append((rel, pair))
        if touching and not cascade:
            raise HasReferences(
                f"{kind.value} {entity_id} participates in {len(touching)} link(s); "
                "pass cascade=true to remove them"
            )
        for rel, pair in touching:
            self._links[rel].discard(pair)
            self._ops.append({"op": "unlink", "relation": rel.value, "left": pair[0], "right": pair[1]})
        del self._entities[kind][entity_id]
        self._ops.append({"op": "delete", "kind": kind.value, "id": entity_id})
        self._changed.append((kind.value, entity_id, "delete"))

    def link(self, relation: Relation, left_id: str, right_id: str) -> None:
        left_kind, right_kind = RELATION_ENDPOINTS[relation]
        if left_id not in self._entities[left_kind]:
            raise UnknownEntity(f"no {left_kind.value} with id {left_id!r}")
        if right_id not in self._entities[right_kind]:
            raise UnknownEntity(f"no {right_kind.value} with id {right_id!r}")
        if (left_id, right_id) in self._links[relation]:
            raise DuplicateLink(f"{relation.value} pair ({left_id}, {right_id}) already exists")
        self._links[relation].add((left_id, right_id))
        self._ops.append({"op": "link", "relation": relation.value, "left": left_id, "right": right_id})
        self._changed.append((relation.value, f"{left_id}:{right_id}", "link"))

    def unlink(self, relation: Relation, left_id: str, right_id: str) -> None:
        if (left_id, right_id) not in self._links[relation]:
            raise NotFound(f"{relation.value} pair ({left_id}, {right_id}) does not exist")
        self._links[relation].discard((left_id, right_id))
        self._ops.append({"op": "unlink", "relation": relation.value, "left": left_id, "right": right_id})
        self._changed.append((relation.value, f"{left_id}:{right_id}", "unlink"))

    # -- commit -------------------------------------------------------------

    def _build_snapshot(self, version: int) -> Snapshot:
        links = LinkSet(
            cd_dec=frozenset(self._links[Relation.CD_DEC]),
            cd_vd=frozenset(self._links[Relation.CD_VD]),
            vd_pv=frozenset(self._links[Relation.VD_PV]),
        )
        return _freeze(self._entities, links, version)


class MetadataStore:
    """Durable, transactional home of one metadata model.

    Open with a data directory; ``fsync=False`` trades durability for
    speed in tests. All public methods are thread-safe.
    """

    def __init__(self, data_dir: str | os.PathLike[str], fsync: bool = True):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._fsync = fsync
        self._write_lock = threading.RLock()
        self._snapshot = Snapshot()
        self._changes: list[ChangeRecord] = []
        self._journal_fh = None
        self._load()

    # -- durability ---------------------------------------------------------

    @property
    def _checkpoint_path(self) -> Path:
        return self.data_dir / CHECKPOINT_FILE

    @property
    def _journal_path(self) -> Path:
        return self.data_dir / JOURNAL_FILE

    def _load(self) -> None:
        state: dict[Kind, dict[str, Any]] = {kind: {} for kind in Kind}
        links: dict[Relation, set[tuple[str, str]]] = {rel: set() for rel in Relation}
        version = 0
        if self._checkpoint_path.exists():
            try:
                doc = json.loads(self._checkpoint_path.read_text("utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ParseError(f"checkpoint unreadable: {exc}") from exc
            version = int(doc.get("version", 0))
            for kind in Kind:
                for entity_id, payload in doc.get("entities", {}).get(kind.value, {}).items():
                    state[kind][entity_id] = model.entity_from_payload(kind, entity_id, payload)
            for rel in Relation:
                for left, right in doc.get("links", {}).get(rel.value, []):
                    links[rel].add((str(left), str(right)))
        version = self._replay_journal(state, links, version)
        self._snapshot = _freeze(state, LinkSet(
            cd_dec=frozenset(links[Relation.CD_DEC]),
            cd_vd=frozenset(links[Relation.CD_VD]),
            vd_pv=frozenset(links[Relation.VD_PV]),
        ), version)
        self._journal_fh = open(self._journal_path, "a", encoding="utf-8")

    def _replay_journal(
        self,
        state: dict[Kind, dict[str, Any]],
        links: dict[Relation, set[tuple[str, str]]],
        version: int,
    ) -> int:
        if not self._journal_path.exists():
            return version
        with open(self._journal_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = self._decode_journal_line(line)
                if entry is None:
                    break  # torn tail: ignore this and everything after
                if entry.get("version", 0) <= version:
                    continue  # already folded into the checkpoint
                self._apply_ops(state, links, entry.get("ops", []))
                version = int(entry["version"])
        return version

    @staticmethod
    def _decode_journal_line(line: str) -> dict[str, Any] | None:
        body, sep, crc_text = line.rpartition("#")
        if not sep:
            return None
        try:
            if int(crc_text, 16) != zlib.crc32(body.encode("utf-8")):
                return None
            entry = json.loads(body)
        except (ValueError, json.JSONDecodeError):
            return None
        return entry if isinstance(entry, dict) else None

    @staticmethod
    def _apply_ops(
        state: dict[Kind, dict[str, Any]],
        links: dict[Relation, set[tuple[str, str]]],
        ops: list[dict[str, Any]],
    ) -> None:
        for op in ops:
            name = op.get("op")
            if name in ("create", "update"):
                kind = Kind(op["kind"])
                state[kind][op["id"]] = model.entity_from_payload(kind, op["id"], op["payload"])
            elif name == "delete":
                state[Kind(op["kind"])].pop(op["id"], None)
            elif name == "link":
                links[Relation(op["relation"])].add((op["left"], op["right"]))
            elif name == "unlink":
                links[Relation(op["relation"])].discard((op["left"], op["right"]))

    def _append_journal(self, entry: dict[str, Any]) -> None:
        body = json.dumps(entry, separators=(",", ":"), sort_keys=True, ensure_ascii=False)
        crc = zlib.crc32(body.encode("utf-8"))
        self._journal_fh.write(f"{body}#{crc:08x}\n")
        self._journal_fh.flush()
        if self._fsync:
            os.fsync(self._journal_fh.fileno())

    def checkpoint(self) -> None:
        """Fold the journal into store.json and truncate it."""
        with self._write_lock:
            snap = self._snapshot
            doc = {
                "version": snap.version,
                "entities": {
                    kind.value: {
                        entity_id: model.entity_to_payload(entity)
                        for entity_id, entity in sorted(snap.collection(kind).items())
                    }
                    for kind in Kind
                },
                "links": {
                    rel.value: sorted(list(pair) for pair in snap.links.pairs(rel))
                    for rel in Relation
                },
            }
            tmp = self._checkpoint_path.with_suffix(".json.tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
                fh.write("\n")
                fh.flush()
                if self._fsync:
                    os.fsync(fh.fileno())
            os.replace(tmp, self._checkpoint_path)
            self._journal_fh.close()
            self._journal_fh = open(self._journal_path, "w", encoding="utf-8")

    def close(self) -> None:
        with self._write_lock:
            if self._journal_fh and not self._journal_fh.closed:
                self._journal_fh.close()

    def __enter__(self) -> "MetadataStore":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()

    # -- reads --------------------------------------------------------------

    def snapshot(self) -> Snapshot:
        """The last published snapshot; never blocks on writers."""
        return self._snapshot

    def changes(self, since_version: int = 0) -> list[ChangeRecord]:
        with self._write_lock:
            return [c for c in self._changes if c.version > since_version]

    # -- writes -------------------------------------------------------------

    def transaction(self, actor: str = "system") -> "_TransactionContext":
        return _TransactionContext(self, actor)

    def _commit(self, txn: Transaction) -> Snapshot:
        if not txn._ops:
            return self._snapshot
        with self._write_lock:
            if self._snapshot.version != txn._base_version:
                # Serialized writers: replay the transaction ops on the
                # current state rather than silently dropping concurrent
                # commits. Conflicts surface through the guards below.
                raise ValidationFailed(
                    "transaction base version is stale; retry on the current snapshot"
                )
            version = self._snapshot.version + 1
            candidate = txn._build_snapshot(version)
            report = model.validate_model(candidate)
            if report.has_violations:
                first = report.violations[0]
                raise ValidationFailed(f"commit rejected: [{first.rule}] {first.message}")
            self._append_journal({"version": version, "actor": txn.actor, "ops": txn._ops})
            now = time.time()
            for kind, entity_id, operation in txn._changed:
                self._changes.append(ChangeRecord(version, kind, entity_id, operation, txn.actor, now))
            self._snapshot = candidate
            return candidate

    # -- convenience single-operation wrappers -------------------------------

    def create(self, kind: Kind, payload: dict[str, Any], actor: str = "system",
               entity_id: str | None = None) -> Entity:
        with self._write_lock:
            with self.transaction(actor) as txn:
                entity = txn.create(kind, payload, entity_id=entity_id)
            return entity

    def update(self, kind: Kind, entity_id: str, payload: dict[str, Any],
               actor: str = "system") -> Entity:
        with self._write_lock:
            with self.transaction(actor) as txn:
                entity = txn.update(kind, entity_id, payload)
            return entity

    def delete(self, kind: Kind, entity_id: str, cascade: bool = False,
               actor: str = "system") -> None:
        with self._write_lock:
            with self.transaction(actor) as txn:
                txn.delete(kind, entity_id, cascade=cascade)

    def link(self, relation: Relation, left_id: str, right_id: str,
             actor: str = "system") -> None:
        with self._write_lock:
            with self.transaction(actor) as txn:
                txn.link(relation, left_id, right_id)

    def unlink(self, relation: Relation, left_id: str, right_id: str,
               actor: str = "system") -> None:
        with self._write_lock:
            with self.transaction(actor) as txn:
                txn.unlink(relation, left_id, right_id)

    def get(self, kind: Kind, entity_id: str) -> Entity:
        entity = self._snapshot.collection(kind).get(entity_id)
        if entity is None:
            raise NotFound(f"no {kind.value} with id {entity_id!r}")
        return entity


class _TransactionContext:
    """Context manager pairing a Transaction with commit-on-success.

    Holds the store write lock for its whole body so the base snapshot
    cannot move between begin and commit.
    """

    def __init__(self, store: MetadataStore, actor: str):
        self._store = store
        self._actor = actor
        self._txn: Transaction | None = None

    def __enter__(self) -> Transaction:
        self._store._write_lock.acquire()
        try:
            self._txn = Transaction(self._store, self._actor)
        except BaseException:
            self._store._write_lock.release()
            raise
        return self._txn

    def __exit__(self, exc_type: Any, exc: Any, tb: Any) -> None:
        try:
            if exc_type is None and self._txn is not None:
                self._store._commit(self._txn)
        finally:
            self._store._write_lock.release()
