"""Record API payloads used by the frontend test suite.

Spins up the backend in-process and snapshots the HTTP responses the
UI consumes, so frontend tests run against real payload shapes without
a live server. Rerun after backend payload changes:

    python3 frontend/scripts/capture_fixtures.py
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

HERE = Path(__file__).resolve().parent
PKG_ROOT = HERE.parent.parent
sys.path.insert(0, str(PKG_ROOT / "tests"))

from conftest import FIXTURES  # noqa: E402

from mdr.api import create_app  # noqa: E402
from mdr.auth import hash_password  # noqa: E402
from mdr.catalog import OntologyCatalog  # noqa: E402
from mdr.config import Config  # noqa: E402
from mdr.document import import_document  # noqa: E402
from mdr.portal import FixturePortalClient  # noqa: E402
from mdr.store import MetadataStore  # noqa: E402

OUT = HERE.parent / "tests" / "fixtures"
SECRET = "capture-secret"
USERS = {
    "admin": {"password": hash_password("admin-demo"), "roles": ["admin"]},
    "reader": {"password": hash_password("reader-demo"), "roles": ["reader"]},
}


def build_client(tmp: Path, doc_path=None, doc=None, with_catalog=True) -> TestClient:
    store = MetadataStore(tmp, fsync=False)
    if doc_path or doc:
        import_document(store, doc_path or doc)
    catalog = OntologyCatalog()
    if with_catalog:
        catalog.load_snapshot(FIXTURES / "ontology_snapshot.jsonl")
    app = create_app(
        config=Config(token_secret=SECRET, token_ttl_seconds=3600),
        store=store,
        catalog=catalog,
        portal=FixturePortalClient(FIXTURES / "portal_fixture.json"),
        users=USERS,
    )
    return TestClient(app)


def save(name: str, payload) -> None:
    OUT.joinpath(name).write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        "utf-8",
    )
    print(f"wrote {name}")


def token(client: TestClient, username: str, password: str) -> str:
    response = client.post("/api/auth/token",
                           json={"username": username, "password": password})
    response.raise_for_status()
    return response.json()["token"]


def capture_demo(tmp: Path) -> None:
    client = build_client(tmp / "demo", doc_path=FIXTURES / "demo_dictionary.json")
    auth = {"Authorization": f"Bearer {token(client, 'admin', 'admin-demo')}"}
    reader = {"Authorization": f"Bearer {token(client, 'reader', 'reader-demo')}"}

    save("token.json", client.post(
        "/api/auth/token",
        json={"username": "admin", "password": "admin-demo"}).json())
    save("summary.json", client.get("/api/summary", headers=auth).json())
    save("registries.json", client.get("/api/registries", headers=auth).json())

    regs = {row["name"]: row["id"]
            for row in client.get("/api/registries", headers=auth).json()["items"]}
    charite = regs["Charité – Universitätsmedizin Berlin"]
    save("registry_summary_charite.json",
         client.get(f"/api/registries/{charite}/summary", headers=auth).json())

    save("suggest_gauch.json",
         client.get("/api/suggest", params={"q": "Gauch"}, headers=auth).json())

    denied = client.post("/api/conceptual-domains", headers=reader,
                         json={"ontology": "NCIT", "ontology_id": "X", "label": "x"})
    assert denied.status_code == 403
    save("forbidden_403.json", denied.json())

    anonymous = client.get("/api/summary")
    assert anonymous.status_code == 401
    save("unauthorized_401.json", anonymous.json())


def capture_editor(tmp: Path) -> None:
    client = build_client(tmp / "editor")
    auth = {"Authorization": f"Bearer {token(client, 'admin', 'admin-demo')}"}
    body = {"ontology": "NCIT", "ontology_id": "C2907", "label": "Gaucher's Disease"}

    created = client.post("/api/data-element-concepts", headers=auth, json=body)
    assert created.status_code == 201
    save("create_dec.json", created.json())

    conflict = client.post("/api/data-element-concepts", headers=auth, json=body)
    assert conflict.status_code == 409
    save("conflict_409.json", conflict.json())

    save("decs_list.json",
         client.get("/api/data-element-concepts", headers=auth).json())


def capture_polydactyly(tmp: Path) -> None:
    doc = json.loads((FIXTURES / "relaxation_vd_pv.json").read_text("utf-8"))
    doc["registries"] = [{"name": "West Clinic"}, {"name": "East Clinic"}]
    doc["data_element_concepts"] = [
        {"ontology": "HPO", "ontology_id": "HP:0010442", "label": "Polydactyly"},
        {"ontology": "SNOMEDCT", "ontology_id": "362164007",
         "label": "Polydactyly (disorder)"},
    ]
    doc["data_elements"] = [
        {"registry": "West Clinic", "storage_path": "phenotype/polydactyly",
         "expresses": {"ontology": "HPO", "ontology_id": "HP:0010442"},
         "value_domain": {"ontology": "HPO", "ontology_id": "HP:0010442"}},
        {"registry": "East Clinic", "storage_path": "findings/polydactyly",
         "expresses": {"ontology": "SNOMEDCT", "ontology_id": "362164007"},
         "value_domain": {"ontology": "SNOMEDCT", "ontology_id": "362164007"}},
    ]
    client = build_client(tmp / "poly", doc=doc)
    auth = {"Authorization": f"Bearer {token(client, 'admin', 'admin-demo')}"}

    regs = {row["name"]: row["id"]
            for row in client.get("/api/registries", headers=auth).json()["items"]}
    pair = f"{regs['West Clinic']},{regs['East Clinic']}"
    for level in ("full", "partial"):
        response = client.get("/api/discover", headers=auth,
                              params={"registries": pair, "min_level": level})
        response.raise_for_status()
        save(f"discover_poly_{level}.json", response.json())

    elems = {row["storage_path"]: row["id"]
             for row in client.get("/api/data-elements", headers=auth).json()["items"]}
    common = client.post("/api/compat/common-domain", headers=auth,
                         json={"left": elems["phenotype/polydactyly"],
                               "right": elems["findings/polydactyly"],
                               "persist": False})
    common.raise_for_status()
    save("common_domain_poly.json", common.json())

    compare = client.get("/api/compat/elements", headers=auth,
                         params={"left": elems["phenotype/polydactyly"],
                                 "right": elems["findings/polydactyly"]})
    compare.raise_for_status()
    save("compare_poly.json", compare.json())


def main() -> None:
    import tempfile

    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        capture_demo(root)
        capture_editor(root)
        capture_polydactyly(root)


if __name__ == "__main__":
    main()
