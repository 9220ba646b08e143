"""Metadata repository for clinical data dictionaries.

Curates registries, clinical concepts and value domains with ontology-
backed identity, and analyses cross-registry data element compatibility.
"""

from .catalog import OntologyCatalog, OntologyClass
from .compat import (
    CompatibilityReport,
    DiscoveredFeature,
    RegistryPairSummary,
    Verdict,
    compare_elements,
    discover_features,
    make_temporary_common_domain,
    registry_pair_summary,
)
from .document import export_document, import_document, snapshot_from_document
from .errors import MdrError
from .model import (
    Datatype,
    Kind,
    OntologyRef,
    Relation,
    Snapshot,
    fits_strict_iso,
    strict_iso_check,
    validate_model,
)
from .store import MetadataStore
from .suggest import suggest

__all__ = [
    "CompatibilityReport",
    "Datatype",
    "DiscoveredFeature",
    "Kind",
    "MdrError",
    "MetadataStore",
    "OntologyCatalog",
    "OntologyClass",
    "OntologyRef",
    "RegistryPairSummary",
    "Relation",
    "Snapshot",
    "Verdict",
    "compare_elements",
    "discover_features",
    "export_document",
    "fits_strict_iso",
    "import_document",
    "make_temporary_common_domain",
    "registry_pair_summary",
    "snapshot_from_document",
    "strict_iso_check",
    "suggest",
    "validate_model",
]

__version__ = "0.1.0"
