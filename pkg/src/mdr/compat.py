"""Cross-registry compatibility analysis of data elements.

Two data elements are comparable when they express the same clinical
concept; concept identity is checked up to the catalog's synonym
closure, so a concept coded in HPO in one registry and in SNOMED CT in
another still lines up. For comparable elements the verdict is decided
by their value domains:

* fully_compatible: the domains are the same entity or equal
  (enumerated: same permitted value set up to synonym closure; numeric:
  same unit and range; other datatypes: same format);
* partially_compatible: enumerated domains sharing at least one
  permitted value, or numeric domains with the same unit and
  overlapping ranges. A joint analysis is possible on the shared
  subset, which can be materialised as a temporary common value domain;
* incompatible: same concept, but no shared representation;
* not_comparable: different concepts.

All functions here are pure; they read a snapshot and never mutate it.
Only :func:`make_temporary_common_domain` with ``persist=True`` writes,
and it goes through the store like any other curation.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

from .catalog import OntologyCatalog
from .errors import (
    EmptyIntersection,
    NeedTwoRegistries,
    NotFound,
    NotPartiallyCompatible,
)
from .model import (
    DataElement,
    Datatype,
    Kind,
    LOCAL_ONTOLOGY,
    NumericRange,
    NUMERIC_DATATYPES,
    OntologyRef,
    Relation,
    Snapshot,
    ValueDomain,
)


class Verdict(str, enum.Enum):
    FULLY_COMPATIBLE = "fully_compatible"
    PARTIALLY_COMPATIBLE = "partially_compatible"
    INCOMPATIBLE = "incompatible"
    NOT_COMPARABLE = "not_comparable"


#: Strength ordering for comparable verdicts (not_comparable is outside it).
LEVEL_OF = {
    Verdict.INCOMPATIBLE: 0,
    Verdict.PARTIALLY_COMPATIBLE: 1,
    Verdict.FULLY_COMPATIBLE: 2,
}

_LEVEL_ALIASES = {
    "partial": Verdict.PARTIALLY_COMPATIBLE,
    "full": Verdict.FULLY_COMPATIBLE,
    "incompatible": Verdict.INCOMPATIBLE,
}


def parse_level(value: str | Verdict) -> Verdict:
    """Parse a compatibility level name ("partial", "full" or a verdict
    value). Used by the API and CLI."""
    if isinstance(value, Verdict):
        return value
    try:
        return _LEVEL_ALIASES.get(value) or Verdict(value)
    except ValueError:
        raise ValueError(
            f"unknown compatibility level {value!r}; expected partial, full "
            "or a verdict name"
        ) from None


@dataclass(frozen=True)
class CompatibilityReport:
    """Outcome of comparing two data elements."""

    left_element: str
    right_element: str
    left_concept: OntologyRef
    right_concept: OntologyRef
    verdict: Verdict
    detail: str
    shared_values: frozenset[OntologyRef] = frozenset()


def _canon(catalog: OntologyCatalog | None, ref: OntologyRef) -> OntologyRef:
    return catalog.canonical_ref(ref) if catalog is not None else ref


def _canonical_value_refs(
    snapshot: Snapshot, vd_id: str, catalog: OntologyCatalog | None
) -> dict[OntologyRef, set[OntologyRef]]:
    """Linked permissible values grouped by canonical ref.

    Maps canonical ref -> the actual refs behind it, so shared-value
    reporting can list what each side really stores.
    """
    grouped: dict[OntologyRef, set[OntologyRef]] = {}
    for ref in snapshot.value_refs_of(vd_id):
        grouped.setdefault(_canon(catalog, ref), set()).add(ref)
    return grouped


def _ranges_equal(a: NumericRange | None, b: NumericRange | None) -> bool:
    return a == b


def _range_is_empty(rng: NumericRange | None) -> bool:
    if rng is None:
        return False
    return rng.lo > rng.hi or (rng.lo == rng.hi and not (rng.lo_closed and rng.hi_closed))


def _ranges_overlap(a: NumericRange | None, b: NumericRange | None) -> bool:
    """Interval overlap; a missing range is unbounded and overlaps all
    except a degenerate empty interval, which overlaps nothing."""
    if _range_is_empty(a) or _range_is_empty(b):
        return False
    if a is None or b is None:
        return True
    if a.lo > b.hi or b.lo > a.hi:
        return False
    if a.lo == b.hi and not (a.lo_closed and b.hi_closed):
        return False
    if b.lo == a.hi and not (b.lo_closed and a.hi_closed):
        return False
    return True


def _intersect_ranges(a: NumericRange | None, b: NumericRange | None) -> NumericRange | None:
    if a is None:
        return b
    if b is None:
        return a
    if a.lo > b.lo or (a.lo == b.lo and not a.lo_closed):
        lo, lo_closed = a.lo, a.lo_closed
    else:
        lo, lo_closed = b.lo, b.lo_closed
    if a.hi < b.hi or (a.hi == b.hi and not a.hi_closed):
        hi, hi_closed = a.hi, a.hi_closed
    else:
        hi, hi_closed = b.hi, b.hi_closed
    return NumericRange(lo=lo, hi=hi, lo_closed=lo_closed, hi_closed=hi_closed)


def value_domains_equal(
    snapshot: Snapshot,
    left_id: str,
    right_id: str,
    catalog: OntologyCatalog | None = None,
) -> bool:
    """Equality of two value domains as representations.

    Enumerated domains are equal when their permitted value sets match
    up to synonym closure; numeric domains when unit and range match;
    other datatypes when the format matches. Labels and refs of the
    domains themselves do not matter.
    """
    left = snapshot.value_domains[left_id]
    right = snapshot.value_domains[right_id]
    if left.datatype is not right.datatype:
        return False
    if left.datatype is Datatype.ENUMERATED:
        left_keys = set(_canonical_value_refs(snapshot, left_id, catalog))
        right_keys = set(_canonical_value_refs(snapshot, right_id, catalog))
        return left_keys == right_keys
    if left.datatype in NUMERIC_DATATYPES:
        return left.format == right.format and _ranges_equal(left.range, right.range)
    return left.format == right.format


def compare_elements(
    snapshot: Snapshot,
    left_id: str,
    right_id: str,
    catalog: OntologyCatalog | None = None,
) -> CompatibilityReport:
    """Compare two data elements and report the verdict with evidence."""
    left = snapshot.data_elements.get(left_id)
    right = snapshot.data_elements.get(right_id)
    if left is None:
        raise NotFound(f"no data_element with id {left_id!r}")
    if right is None:
        raise NotFound(f"no data_element with id {right_id!r}")
    left_dec = snapshot.data_element_concepts[left.expresses]
    right_dec = snapshot.data_element_concepts[right.expresses]

    def report(verdict: Verdict, detail: str,
               shared: frozenset[OntologyRef] = frozenset()) -> CompatibilityReport:
        return CompatibilityReport(
            left_element=left_id,
            right_element=right_id,
            left_concept=left_dec.ref,
            right_concept=right_dec.ref,
            verdict=verdict,
            detail=detail,
            shared_values=shared,
        )

    if _canon(catalog, left_dec.ref) != _canon(catalog, right_dec.ref):
        return report(Verdict.NOT_COMPARABLE, "different_concept")

    if left.value_domain == right.value_domain:
        return report(Verdict.FULLY_COMPATIBLE, "identical_value_domain")

    left_vd = snapshot.value_domains[left.value_domain]
    right_vd = snapshot.value_domains[right.value_domain]

    if left_vd.datatype is not right_vd.datatype:
        return report(Verdict.INCOMPATIBLE, "datatype_mismatch")

    if left_vd.datatype is Datatype.ENUMERATED:
        left_groups = _canonical_value_refs(snapshot, left.value_domain, catalog)
        right_groups = _canonical_value_refs(snapshot, right.value_domain, catalog)
        common = set(left_groups) & set(right_groups)
        if set(left_groups) == set(right_groups):
            return report(Verdict.FULLY_COMPATIBLE, "equal_value_domain")
        if common:
            shared: set[OntologyRef] = set()
            for key in common:
                shared |= left_groups[key]
                shared |= right_groups[key]
            return report(Verdict.PARTIALLY_COMPATIBLE, "shared_permissible_values",
                          frozenset(shared))
        return report(Verdict.INCOMPATIBLE, "disjoint_value_sets")

    if left_vd.datatype in NUMERIC_DATATYPES:
        if left_vd.format != right_vd.format:
            return report(Verdict.INCOMPATIBLE, "unit_mismatch")
        if _ranges_equal(left_vd.range, right_vd.range):
            return report(Verdict.FULLY_COMPATIBLE, "equal_value_domain")
        if _ranges_overlap(left_vd.range, right_vd.range):
            return report(Verdict.PARTIALLY_COMPATIBLE, "overlapping_range")
        return report(Verdict.INCOMPATIBLE, "disjoint_ranges")

    if left_vd.format == right_vd.format:
        return report(Verdict.FULLY_COMPATIBLE, "equal_value_domain")
    return report(Verdict.INCOMPATIBLE, "format_mismatch")


# ---------------------------------------------------------------------------
# Temporary common value domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommonDomainResult:
    """A common value domain derived from two partially compatible elements."""

    domain: ValueDomain
    value_ids: tuple[str, ...]
    persisted: bool


def make_temporary_common_domain(
    snapshot: Snapshot,
    left_id: str,
    right_id: str,
    catalog: OntologyCatalog | None = None,
    store=None,
    actor: str = "system",
    label: str | None = None,
):
    """Build the common value domain of two partially compatible elements.

    For enumerated domains the result holds exactly the shared permitted
    values (one permissible value entity per shared concept, preferring
    the left element's row); for numeric domains it carries the
    intersected range. With ``store`` given the domain is persisted as a
    temporary LOCAL value domain with vd_pv links; otherwise the result
    is ephemeral.

    Raises NotPartiallyCompatible unless the pair's verdict is
    partially_compatible, and EmptyIntersection if there is nothing to
    share (cannot happen when the verdict check passes).
    """
    outcome = compare_elements(snapshot, left_id, right_id, catalog)
    if outcome.verdict is not Verdict.PARTIALLY_COMPATIBLE:
        raise NotPartiallyCompatible(
            f"elements are {outcome.verdict.value} ({outcome.detail}); a common "
            "domain exists only for partially compatible pairs"
        )
    left = snapshot.data_elements[left_id]
    right = snapshot.data_elements[right_id]
    left_vd = snapshot.value_domains[left.value_domain]
    right_vd = snapshot.value_domains[right.value_domain]
    domain_label = label or f"Common domain of {left_vd.label} and {right_vd.label}"

    value_ids: list[str] = []
    rng: NumericRange | None = None
    if left_vd.datatype is Datatype.ENUMERATED:
        chosen: dict[OntologyRef, str] = {}
        for vd_id in (left.value_domain, right.value_domain):
            for pv_id in sorted(snapshot.links.children_of(Relation.VD_PV, vd_id)):
                pv = snapshot.permissible_values[pv_id]
                chosen.setdefault(_canon(catalog, pv.ref), pv_id)
        shared_canon = {_canon(catalog, ref) for ref in outcome.shared_values}
        value_ids = [chosen[key] for key in sorted(shared_canon)]
        if not value_ids:
            raise EmptyIntersection("the value sets share no permitted value")
    else:
        rng = _intersect_ranges(left_vd.range, right_vd.range)

    from .store import new_id  # local import to keep this module store-free

    payload = {
        "ontology": LOCAL_ONTOLOGY,
        "ontology_id": new_id(),
        "label": domain_label,
        "datatype": left_vd.datatype.value,
        "format": left_vd.format,
        "range": None if rng is None else {
            "lo": rng.lo, "hi": rng.hi, "lo_closed": rng.lo_closed, "hi_closed": rng.hi_closed,
        },
        "temporary": True,
    }
    if store is None:
        from .model import entity_from_payload

        domain = entity_from_payload(Kind.VALUE_DOMAIN, new_id(), payload)
        return CommonDomainResult(domain=domain, value_ids=tuple(value_ids), persisted=False)

    with store.transaction(actor) as txn:
        domain = txn.create(Kind.VALUE_DOMAIN, payload)
        for pv_id in value_ids:
            txn.link(Relation.VD_PV, domain.id, pv_id)
    return CommonDomainResult(domain=domain, value_ids=tuple(value_ids), persisted=True)


# ---------------------------------------------------------------------------
# Registry-level summaries and discovery
# ---------------------------------------------------------------------------

def _concept_groups(
    snapshot: Snapshot,
    element_ids: Iterable[str],
    catalog: OntologyCatalog | None,
) -> dict[OntologyRef, list[str]]:
    """Group element ids by the canonical ref of the concept they express."""
    groups: dict[OntologyRef, list[str]] = {}
    for de_id in sorted(element_ids):
        de = snapshot.data_elements[de_id]
        dec = snapshot.data_element_concepts[de.expresses]
        groups.setdefault(_canon(catalog, dec.ref), []).append(de_id)
    return groups


def _representative(
    snapshot: Snapshot, canon_key: OntologyRef, element_ids: Iterable[str]
) -> tuple[OntologyRef, str]:
    """Display ref and label of a concept group: the smallest actual DEC
    ref among the grouped elements, deterministic for the oracle."""
    refs = []
    for de_id in element_ids:
        dec = snapshot.data_element_concepts[snapshot.data_elements[de_id].expresses]
        refs.append((dec.ref, dec.label))
    refs.sort()
    return refs[0]


@dataclass(frozen=True)
class ConceptOverlap:
    """One concept expressed by both registries of a pair summary."""

    concept: OntologyRef
    label: str
    left_elements: tuple[str, ...]
    right_elements: tuple[str, ...]
    best_verdict: Verdict


@dataclass(frozen=True)
class RegistryPairSummary:
    left_registry: str
    right_registry: str
    left_elements: int
    right_elements: int
    shared_concepts: int
    fully_compatible_pairs: int
    partially_compatible_pairs: int
    incompatible_pairs: int
    overlaps: tuple[ConceptOverlap, ...] = ()

    @property
    def comparable_pairs(self) -> int:
        return (
            self.fully_compatible_pairs
            + self.partially_compatible_pairs
            + self.incompatible_pairs
        )


def registry_pair_summary(
    snapshot: Snapshot,
    left_registry: str,
    right_registry: str,
    catalog: OntologyCatalog | None = None,
) -> RegistryPairSummary:
    """Tally element-pair verdicts between two registries.

    Every cross-registry element pair expressing the same concept (up to
    synonym closure) is compared and counted under its verdict; pairs
    with different concepts are not counted. ``shared_concepts`` is the
    number of concept classes present on both sides.
    """
    for reg_id in (left_registry, right_registry):
        if reg_id not in snapshot.registries:
            raise NotFound(f"no registry with id {reg_id!r}")
    if left_registry == right_registry:
        raise NeedTwoRegistries("a pair summary needs two distinct registries")

    left_ids = [de.id for de in snapshot.elements_of(left_registry)]
    right_ids = [de.id for de in snapshot.elements_of(right_registry)]
    left_groups = _concept_groups(snapshot, left_ids, catalog)
    right_groups = _concept_groups(snapshot, right_ids, catalog)

    tallies = {Verdict.FULLY_COMPATIBLE: 0, Verdict.PARTIALLY_COMPATIBLE: 0,
               Verdict.INCOMPATIBLE: 0}
    overlaps: list[ConceptOverlap] = []
    for key in set(left_groups) & set(right_groups):
        best = -1
        for a, b in itertools.product(left_groups[key], right_groups[key]):
            outcome = compare_elements(snapshot, a, b, catalog)
            tallies[outcome.verdict] += 1
            best = max(best, LEVEL_OF[outcome.verdict])
        ref, label = _representative(snapshot, key, left_groups[key] + right_groups[key])
        best_verdict = next(v for v, lvl in LEVEL_OF.items() if lvl == best)
        overlaps.append(ConceptOverlap(
            concept=ref,
            label=label,
            left_elements=tuple(left_groups[key]),
            right_elements=tuple(right_groups[key]),
            best_verdict=best_verdict,
        ))
    overlaps.sort(key=lambda o: (o.label.casefold(), o.concept))
    return RegistryPairSummary(
        left_registry=left_registry,
        right_registry=right_registry,
        left_elements=len(left_ids),
        right_elements=len(right_ids),
        shared_concepts=len(overlaps),
        fully_compatible_pairs=tallies[Verdict.FULLY_COMPATIBLE],
        partially_compatible_pairs=tallies[Verdict.PARTIALLY_COMPATIBLE],
        incompatible_pairs=tallies[Verdict.INCOMPATIBLE],
        overlaps=tuple(overlaps),
    )


@dataclass(frozen=True)
class DiscoveredFeature:
    """A concept expressed in several registries at some compatibility level.

    ``level`` is the weakest best-pair verdict over all registry pairs
    that share the concept: every pair of listed registries can reach at
    least this level with some element pair.
    """

    concept: OntologyRef
    label: str
    elements: Mapping[str, tuple[str, ...]]  # registry id -> element ids
    level: Verdict


def discover_features(
    snapshot: Snapshot,
    registry_ids: Iterable[str],
    min_level: Verdict | str = Verdict.PARTIALLY_COMPATIBLE,
    catalog: OntologyCatalog | None = None,
) -> list[DiscoveredFeature]:
    """Concepts usable for a joint analysis across the given registries.

    A concept qualifies when at least two of the requested registries
    express it and every pair of those registries reaches ``min_level``
    with at least one element pair. Results are sorted by case-folded
    label, then ref.
    """
    min_level = parse_level(min_level)
    if min_level not in LEVEL_OF:
        raise ValueError(f"min_level must be a comparable verdict, not {min_level.value}")
    ids = sorted(set(registry_ids))
    for reg_id in ids:
        if reg_id not in snapshot.registries:
            raise NotFound(f"no registry with id {reg_id!r}")
    if len(ids) < 2:
        raise NeedTwoRegistries("feature discovery needs at least two registries")

    per_registry: dict[str, dict[OntologyRef, list[str]]] = {
        reg_id: _concept_groups(snapshot, (de.id for de in snapshot.elements_of(reg_id)), catalog)
        for reg_id in ids
    }
    all_keys = set()
    for groups in per_registry.values():
        all_keys |= set(groups)

    features: list[DiscoveredFeature] = []
    for key in all_keys:
        holders = [reg_id for reg_id in ids if key in per_registry[reg_id]]
        if len(holders) < 2:
            continue
        level = min(
            max(
                LEVEL_OF[compare_elements(snapshot, a, b, catalog).verdict]
                for a in per_registry[reg_a][key]
                for b in per_registry[reg_b][key]
            )
            for reg_a, reg_b in itertools.combinations(holders, 2)
        )
        if level < LEVEL_OF[min_level]:
            continue
        grouped_elements = [de_id for reg_id in holders for de_id in per_registry[reg_id][key]]
        ref, label = _representative(snapshot, key, grouped_elements)
        features.append(DiscoveredFeature(
            concept=ref,
            label=label,
            elements={reg_id: tuple(per_registry[reg_id][key]) for reg_id in holders},
            level=next(v for v, lvl in LEVEL_OF.items() if lvl == level),
        ))
    features.sort(key=lambda f: (f.label.casefold(), f.concept))
    return features
