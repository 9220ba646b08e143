"""Ranked term suggestions for curation forms.

Candidates come from three sources, in strictly decreasing priority:

1. repository: items of the requested kind already stored, so curators
   reuse before they re-create;
2. local_catalog: ontology classes known to the catalog;
3. external_portal: live or replayed portal search hits.

Within one source, exact label matches outrank prefix matches, which
outrank substring matches, which outrank synonym-only matches; ties
break on score (matched share of the matched text), then case-folded
label, then ref. One ref appears at most once, kept at its best source.

The portal is best-effort: when it cannot be reached the response still
carries repository and catalog hits, flagged with portal_reached=False.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .catalog import OntologyCatalog
from .errors import PortalUnavailable, QueryTooShort
from .model import Kind, OntologyRef, REF_KINDS, Snapshot
from .portal import PortalClient, canonicalize_query

MIN_QUERY_LENGTH = 2
DEFAULT_LIMIT = 20


class Source(str, enum.Enum):
    REPOSITORY = "repository"
    LOCAL_CATALOG = "local_catalog"
    EXTERNAL_PORTAL = "external_portal"


_SOURCE_RANK = {Source.REPOSITORY: 0, Source.LOCAL_CATALOG: 1, Source.EXTERNAL_PORTAL: 2}


class MatchKind(str, enum.Enum):
    EXACT = "exact"
    PREFIX = "prefix"
    SUBSTRING = "substring"
    SYNONYM = "synonym"


_MATCH_RANK = {MatchKind.EXACT: 0, MatchKind.PREFIX: 1, MatchKind.SUBSTRING: 2, MatchKind.SYNONYM: 3}


@dataclass(frozen=True)
class Suggestion:
    ref: OntologyRef
    label: str
    source: Source
    match_kind: MatchKind
    score: float


@dataclass(frozen=True)
class SuggestResponse:
    suggestions: tuple[Suggestion, ...]
    portal_reached: bool


def _match_text(query: str, text: str) -> tuple[MatchKind | None, float]:
    """Match kind and score of ``query`` against one candidate text.

    Score is the matched share of the text, so an exact match scores 1.0
    and longer labels dilute shorter hits.
    """
    canon = canonicalize_query(text)
    if not canon or query not in canon:
        return None, 0.0
    score = len(query) / len(canon)
    if canon == query:
        return MatchKind.EXACT, score
    if canon.startswith(query):
        return MatchKind.PREFIX, score
    return MatchKind.SUBSTRING, score


def _match_entry(query: str, label: str, synonyms: tuple[str, ...] | frozenset[str]) -> tuple[MatchKind | None, float]:
    kind, score = _match_text(query, label)
    if kind is not None:
        return kind, score
    best_score = 0.0
    hit = False
    for syn in synonyms:
        syn_kind, syn_score = _match_text(query, syn)
        if syn_kind is not None:
            hit = True
            best_score = max(best_score, syn_score)
    if hit:
        return MatchKind.SYNONYM, best_score
    return None, 0.0


def _sort_key(s: Suggestion) -> tuple:
    return (
        _SOURCE_RANK[s.source],
        _MATCH_RANK[s.match_kind],
        -s.score,
        s.label.casefold(),
        s.ref.ontology_name,
        s.ref.ontology_id,
    )


def suggest(
    snapshot: Snapshot,
    catalog: OntologyCatalog,
    portal: PortalClient | None,
    query: str,
    kind: Kind | None = None,
    limit: int = DEFAULT_LIMIT,
) -> SuggestResponse:
    """Ranked, deduplicated suggestions for ``query``.

    ``kind`` narrows the repository source to one metadata class;
    catalog and portal hits are kind-agnostic since an ontology class
    can be adopted as any of the four catalogued kinds. Deterministic
    for fixed inputs. Queries shorter than two characters (after
    whitespace collapsing) raise QueryTooShort.
    """
    canon = canonicalize_query(query)
    if len(canon) < MIN_QUERY_LENGTH:
        raise QueryTooShort(
            f"query {query!r} is shorter than {MIN_QUERY_LENGTH} characters"
        )

    candidates: list[Suggestion] = []

    repo_kinds = [kind] if kind in REF_KINDS else list(REF_KINDS)
    for repo_kind in repo_kinds:
        for entity in snapshot.collection(repo_kind).values():
            synonyms = getattr(entity, "synonyms", frozenset())
            match, score = _match_entry(canon, entity.label, synonyms)
            if match is not None:
                candidates.append(Suggestion(entity.ref, entity.label, Source.REPOSITORY, match, score))

    for cls in catalog.classes():
        match, score = _match_entry(canon, cls.label, cls.synonyms)
        if match is not None:
            candidates.append(Suggestion(cls.ref, cls.label, Source.LOCAL_CATALOG, match, score))

    portal_reached = False
    if portal is not None:
        try:
            hits = portal.search(canon)
        except PortalUnavailable:
            hits = []
        else:
            portal_reached = True
        for hit in hits:
            match, score = _match_text(canon, hit.label)
            if match is None:
                # The portal matched on data we cannot see (its own
                # synonym index); keep the hit, ranked last.
                match, score = MatchKind.SYNONYM, 0.0
            candidates.append(Suggestion(hit.ref, hit.label, Source.EXTERNAL_PORTAL, match, score))

    candidates.sort(key=_sort_key)
    seen: set[OntologyRef] = set()
    unique: list[Suggestion] = []
    for cand in candidates:
        if cand.ref in seen:
            continue
        seen.add(cand.ref)
        unique.append(cand)
        if len(unique) >= limit:
            break
    return SuggestResponse(suggestions=tuple(unique), portal_reached=portal_reached)
