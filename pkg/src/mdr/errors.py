"""Exception hierarchy shared across the repository modules.

Every error carries a stable machine-readable ``code`` so the HTTP layer
and the CLI can map failures without string matching.
"""

from __future__ import annotations


class MdrError(Exception):
    """Base class for all repository errors."""

    code = "mdr_error"


class ValidationFailed(MdrError):
    """A payload or resulting model state breaks a hard invariant."""

    code = "validation_failed"


class DuplicateOntologyKey(MdrError):
    """The (ontology name, ontology id) pair already exists for this kind."""

    code = "duplicate_ontology_key"


class DuplicateName(MdrError):
    """A registry with the same name (case-insensitive) already exists."""

    code = "duplicate_name"


class DuplicateStoragePath(MdrError):
    """A data element with the same (registry, storage path) already exists."""

    code = "duplicate_storage_path"


class DuplicateLink(MdrError):
    """The link pair is already present in the relation."""

    code = "duplicate_link"


class NotFound(MdrError):
    """The addressed item does not exist."""

    code = "not_found"


class UnknownEntity(MdrError):
    """An operation referenced an entity id that does not exist."""

    code = "unknown_entity"


class HasReferences(MdrError):
    """Delete refused: other items still link to or reference the target."""

    code = "has_references"


class QueryTooShort(MdrError):
    """Suggestion queries need at least two characters after trimming."""

    code = "query_too_short"


class UnknownRef(MdrError):
    """The ontology reference is not known to the catalog."""

    code = "unknown_ref"


class CycleDetected(MdrError):
    """Parent edges of an ontology snapshot would form a cycle."""

    code = "cycle_detected"


class ParseError(MdrError):
    """An input file does not parse under its declared format."""

    code = "parse_error"


class ReferentialGap(MdrError):
    """A document link endpoint cannot be resolved."""

    code = "referential_gap"


class PortalUnavailable(MdrError):
    """The external ontology portal cannot be reached or is not configured."""

    code = "portal_unavailable"


class MalformedPortalResponse(MdrError):
    """The portal answered with data that does not match the expected shape."""

    code = "malformed_portal_response"


class NotPartiallyCompatible(MdrError):
    """Common-domain construction requires a partially compatible enumerated pair."""

    code = "not_partially_compatible"


class EmptyIntersection(MdrError):
    """Defensive: the value intersection of a partially compatible pair was empty."""

    code = "empty_intersection"


class NeedTwoRegistries(MdrError):
    """Feature discovery needs at least two registries."""

    code = "need_two_registries"
