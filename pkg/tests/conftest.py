from __future__ import annotations

import importlib.resources

import pytest

from mdr import import_document
from mdr.catalog import OntologyCatalog
from mdr.store import MetadataStore

FIXTURES = importlib.resources.files("mdr") / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def store(tmp_path):
    store = MetadataStore(tmp_path / "data", fsync=False)
    yield store
    store.close()


@pytest.fixture
def demo_store(tmp_path):
    store = MetadataStore(tmp_path / "demo-data", fsync=False)
    import_document(store, (FIXTURES / "demo_dictionary.json").read_text())
    yield store
    store.close()


@pytest.fixture
def demo_catalog():
    catalog = OntologyCatalog()
    catalog.load_snapshot((FIXTURES / "ontology_snapshot.jsonl").read_text().splitlines())
    return catalog
