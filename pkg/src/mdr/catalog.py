"""Local catalog of ontology class descriptions.

The catalog mirrors the slice of external ontologies the repository
cares about: per class a label, synonyms, parent links (a DAG within one
ontology) and cross-ontology mappings. Mappings are treated as synonym
relations between terms, so two catalogued refs connected by mappings
are interchangeable when the compatibility engine compares refs.

Snapshots are line-delimited JSON, one class per line::

    {"ontology": "...", "id": "...", "label": "...", "synonyms": [...],
     "parents": [...], "mappings": [{"ontology": "...", "id": "..."}]}

Loading a snapshot is staged and atomic: a malformed line or a parent
cycle leaves the catalog untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .errors import CycleDetected, ParseError, UnknownRef
from .model import OntologyRef


@dataclass(frozen=True)
class OntologyClass:
    """One catalogued ontology class."""

    ref: OntologyRef
    label: str
    synonyms: tuple[str, ...] = ()
    parents: tuple[str, ...] = ()  # ids within the same ontology
    mappings: tuple[OntologyRef, ...] = ()  # equivalent refs elsewhere

    def to_line_dict(self) -> dict[str, Any]:
        return {
            "ontology": self.ref.ontology_name,
            "id": self.ref.ontology_id,
            "label": self.label,
            "synonyms": sorted(self.synonyms),
            "parents": sorted(self.parents),
            "mappings": [
                {"ontology": m.ontology_name, "id": m.ontology_id}
                for m in sorted(self.mappings)
            ],
        }


def _class_from_line(data: dict[str, Any], line_no: int) -> OntologyClass:
    try:
        ontology = str(data["ontology"])
        ontology_id = str(data["id"])
        label = str(data["label"])
    except KeyError as exc:
        raise ParseError(f"line {line_no}: missing field {exc.args[0]!r}") from None
    if not ontology or not ontology_id:
        raise ParseError(f"line {line_no}: ontology and id must be non-empty")
    synonyms = data.get("synonyms") or []
    parents = data.get("parents") or []
    raw_mappings = data.get("mappings") or []
    if not isinstance(synonyms, list) or not isinstance(parents, list) or not isinstance(raw_mappings, list):
        raise ParseError(f"line {line_no}: synonyms, parents and mappings must be lists")
    mappings = []
    for m in raw_mappings:
        if not isinstance(m, dict) or "ontology" not in m or "id" not in m:
            raise ParseError(f"line {line_no}: malformed mapping entry {m!r}")
        mappings.append(OntologyRef(str(m["ontology"]), str(m["id"])))
    return OntologyClass(
        ref=OntologyRef(ontology, ontology_id),
        label=label,
        synonyms=tuple(sorted(str(s) for s in synonyms)),
        parents=tuple(sorted(str(p) for p in parents)),
        mappings=tuple(sorted(set(mappings))),
    )


def _check_acyclic(classes: dict[OntologyRef, OntologyClass]) -> None:
    """Reject parent cycles inside each ontology; parents referencing
    unknown ids are tolerated (partial catalog slices are normal)."""
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[OntologyRef, int] = {ref: WHITE for ref in classes}
    for start in sorted(classes):
        if color[start] != WHITE:
            continue
        stack: list[tuple[OntologyRef, Iterable[OntologyRef]]] = []

        def parent_refs(ref: OntologyRef) -> list[OntologyRef]:
            out = []
            for pid in classes[ref].parents:
                pref = OntologyRef(ref.ontology_name, pid)
                if pref in classes:
                    out.append(pref)
            return out

        color[start] = GREY
        stack.append((start, iter(parent_refs(start))))
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GREY:
                    raise CycleDetected(
                        f"parent cycle in ontology {node.ontology_name}: "
                        f"{node.ontology_id} -> {nxt.ontology_id} closes a loop"
                    )
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, iter(parent_refs(nxt))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()


class OntologyCatalog:
    """In-memory ontology class catalog with snapshot load/save."""

    def __init__(self) -> None:
        self._classes: dict[OntologyRef, OntologyClass] = {}
        self._closure_adj: dict[OntologyRef, set[OntologyRef]] = {}

    def __len__(self) -> int:
        return len(self._classes)

    def __contains__(self, ref: OntologyRef) -> bool:
        return ref in self._classes

    def get(self, ref: OntologyRef) -> OntologyClass | None:
        return self._classes.get(ref)

    def classes(self) -> list[OntologyClass]:
        return [self._classes[ref] for ref in sorted(self._classes)]

    # -- loading ------------------------------------------------------------

    def load_snapshot(self, source: str | Path | Iterable[str]) -> int:
        """Merge a line-delimited JSON snapshot into the catalog.

        Returns the number of classes new to the catalog. Re-loading the
        same snapshot is a no-op returning 0. Any parse failure or
        parent cycle raises before the catalog is modified.
        """
        if isinstance(source, (str, Path)):
            text = Path(source).read_text("utf-8")
            lines: Iterable[str] = text.splitlines()
        else:
            lines = source

        incoming: dict[OntologyRef, OntologyClass] = {}
        for line_no, raw in enumerate(lines, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_no}: invalid JSON: {exc.msg}") from exc
            if not isinstance(data, dict):
                raise ParseError(f"line {line_no}: expected an object")
            cls = _class_from_line(data, line_no)
            if cls.ref in incoming:
                raise ParseError(f"line {line_no}: duplicate class {cls.ref}")
            incoming[cls.ref] = cls

        merged = dict(self._classes)
        new_count = 0
        for ref, cls in incoming.items():
            existing = merged.get(ref)
            if existing is None:
                new_count += 1
                merged[ref] = cls
            else:
                # Idempotent merge: union synonyms, parents and mappings,
                # keep the existing label when both are non-empty.
                merged[ref] = OntologyClass(
                    ref=ref,
                    label=existing.label or cls.label,
                    synonyms=tuple(sorted(set(existing.synonyms) | set(cls.synonyms))),
                    parents=tuple(sorted(set(existing.parents) | set(cls.parents))),
                    mappings=tuple(sorted(set(existing.mappings) | set(cls.mappings))),
                )
        _check_acyclic(merged)
        self._classes = merged
        self._rebuild_closure()
        return new_count

    def save_snapshot(self, path: str | Path) -> None:
        """Write the whole catalog in canonical snapshot form."""
        with open(path, "w", encoding="utf-8") as fh:
            for cls in self.classes():
                fh.write(json.dumps(cls.to_line_dict(), sort_keys=True, ensure_ascii=False))
                fh.write("\n")

    # -- synonym closure ----------------------------------------------------

    def _rebuild_closure(self) -> None:
        adj: dict[OntologyRef, set[OntologyRef]] = {}
        for ref, cls in self._classes.items():
            adj.setdefault(ref, set())
            for mapped in cls.mappings:
                # Mappings are symmetric even if only declared on one side,
                # and may point at refs the catalog has no class for.
                adj.setdefault(mapped, set())
                adj[ref].add(mapped)
                adj[mapped].add(ref)
        self._closure_adj = adj

    def synonym_closure(self, ref: OntologyRef) -> list[OntologyRef]:
        """All refs reachable from ``ref`` over mapping edges, ``ref``
        included, sorted. Unknown refs raise UnknownRef."""
        if ref not in self._classes and ref not in self._closure_adj:
            raise UnknownRef(f"ref {ref} is not in the catalog")
        seen = {ref}
        frontier = [ref]
        while frontier:
            node = frontier.pop()
            for nxt in self._closure_adj.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return sorted(seen)

    def canonical_ref(self, ref: OntologyRef) -> OntologyRef:
        """Stable representative of a ref's synonym class.

        Refs absent from the catalog are their own representative, so
        callers can canonicalize without checking membership first.
        """
        if ref not in self._classes and ref not in self._closure_adj:
            return ref
        return self.synonym_closure(ref)[0]

    def same_term(self, a: OntologyRef, b: OntologyRef) -> bool:
        """True when two refs are equal or mapped to each other."""
        return a == b or self.canonical_ref(a) == self.canonical_ref(b)

    def label_of(self, ref: OntologyRef, default: str = "") -> str:
        cls = self._classes.get(ref)
        return cls.label if cls else default
