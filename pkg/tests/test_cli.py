from __future__ import annotations

import json
from pathlib import Path

import httpx
import pytest
from click.testing import CliRunner

from mdr.cli import main
from mdr.document import FORMAT_VERSION, export_document
from mdr.store import MetadataStore

from conftest import FIXTURES


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def demo_file(tmp_path):
    path = tmp_path / "demo.json"
    path.write_text((FIXTURES / "demo_dictionary.json").read_text(), "utf-8")
    return str(path)


@pytest.fixture
def populated(runner, demo_file, tmp_path):
    store_dir = str(tmp_path / "store")
    result = runner.invoke(main, ["import", demo_file, "--store", store_dir])
    assert result.exit_code == 0, result.output
    return store_dir


# ---------------------------------------------------------------------------
# import / export
# ---------------------------------------------------------------------------

def test_import_reports_counts(runner, demo_file, tmp_path):
    result = runner.invoke(main, ["import", demo_file, "--store", str(tmp_path / "s")])
    assert result.exit_code == 0
    assert "created 30, merged 0, skipped 0, links added 25, links existing 0" in result.stdout


def test_strict_reimport_fails_merge_reimport_succeeds(runner, demo_file, populated):
    strict = runner.invoke(main, ["import", demo_file, "--store", populated])
    assert strict.exit_code == 1
    assert "error: [duplicate_ontology_key]" in strict.stderr

    merge = runner.invoke(main, ["import", demo_file, "--store", populated,
                                 "--mode", "merge"])
    assert merge.exit_code == 0
    assert "created 0, merged 30, skipped 0, links added 0, links existing 25" in merge.stdout


def test_merge_lists_kept_keys(runner, populated, tmp_path):
    divergent = {
        "format_version": FORMAT_VERSION,
        "permissible_values": [
            {"ontology": "HPO", "ontology_id": "HP:0001161", "label": "Renamed value"},
        ],
    }
    path = tmp_path / "divergent.json"
    path.write_text(json.dumps(divergent), "utf-8")
    result = runner.invoke(main, ["import", str(path), "--store", populated,
                                  "--mode", "merge"])
    assert result.exit_code == 0
    assert "skipped 1" in result.stdout
    assert "kept existing: permissible_value:HPO:HP:0001161" in result.stdout


def test_export_to_stdout_and_file(runner, populated, tmp_path):
    with MetadataStore(populated, fsync=False) as store:
        expected = export_document(store.snapshot())

    to_stdout = runner.invoke(main, ["export", "--store", populated])
    assert to_stdout.exit_code == 0
    assert to_stdout.stdout == expected

    out_file = tmp_path / "dump.json"
    to_file = runner.invoke(main, ["export", "--store", populated, "-o", str(out_file)])
    assert to_file.exit_code == 0
    assert f"wrote {out_file}" in to_file.stdout
    assert out_file.read_text("utf-8") == expected


def test_import_missing_file_is_a_usage_error(runner, tmp_path):
    result = runner.invoke(main, ["import", str(tmp_path / "nope.json"),
                                  "--store", str(tmp_path / "s")])
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def write_doc(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc), "utf-8")
    return str(path)


def test_validate_clean_document_exits_zero(runner, demo_file):
    result = runner.invoke(main, ["validate", demo_file])
    assert result.exit_code == 0
    assert result.stdout.strip() == "valid"


def test_validate_clean_store_exits_zero(runner, populated):
    result = runner.invoke(main, ["validate", "--store", populated])
    assert result.exit_code == 0
    assert result.stdout.strip() == "valid"


def test_validate_warnings_exit_one(runner, tmp_path):
    doc = {
        "format_version": FORMAT_VERSION,
        "registries": [],
        "data_element_concepts": [
            {"ontology": "T", "ontology_id": "C1", "label": "Unparented"}],
        "value_domains": [
            {"ontology": "T", "ontology_id": "D1", "label": "Empty enum",
             "datatype": "enumerated"}],
        "permissible_values": [],
        "data_elements": [],
        "links": {},
    }
    result = runner.invoke(main, ["validate", write_doc(tmp_path, "warn.json", doc)])
    assert result.exit_code == 1
    assert "warning: [orphan_data_element_concept]" in result.stdout
    assert "warning: [enumerated_domain_without_values]" in result.stdout
    assert "valid with 2 warning(s)" in result.stdout


def test_validate_violations_exit_two(runner, tmp_path):
    doc = {
        "format_version": FORMAT_VERSION,
        "value_domains": [
            {"ontology": "T", "ontology_id": "D1", "label": "Freeform",
             "datatype": "string"}],
        "permissible_values": [
            {"ontology": "T", "ontology_id": "V1", "label": "Stray"}],
        "links": {"vd_pv": [[{"ontology": "T", "ontology_id": "D1"},
                             {"ontology": "T", "ontology_id": "V1"}]]},
    }
    result = runner.invoke(main, ["validate", write_doc(tmp_path, "bad.json", doc)])
    assert result.exit_code == 2
    assert "violation: [values_on_non_enumerated_domain]" in result.stdout
    assert "invalid: 1 violation(s)" in result.stdout


def test_validate_unreadable_input_exits_two(runner, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", "utf-8")
    result = runner.invoke(main, ["validate", str(path)])
    assert result.exit_code == 2
    assert "error: [parse_error]" in result.stderr


def test_validate_requires_exactly_one_source(runner, demo_file, populated):
    neither = runner.invoke(main, ["validate"])
    assert neither.exit_code == 2
    assert "exactly one" in neither.stderr
    both = runner.invoke(main, ["validate", demo_file, "--store", populated])
    assert both.exit_code == 2
    assert "exactly one" in both.stderr


def test_validate_strict_model_lists_relaxations(runner, demo_file):
    result = runner.invoke(main, ["validate", demo_file, "--strict-model"])
    assert result.exit_code == 0
    notes = [line for line in result.stdout.splitlines()
             if line.startswith("note: [needs_many_to_many]")]
    assert len(notes) == 8
    assert any("Hand Polydactyly" in line for line in notes)
    assert result.stdout.splitlines()[-1] == "valid"


def test_validate_strict_model_flags_each_golden_case(runner):
    for name, needle in [("relaxation_cd_dec.json", "data_element_concept"),
                         ("relaxation_vd_pv.json", "permissible_value"),
                         ("relaxation_cd_vd.json", "value_domain")]:
        result = runner.invoke(main, ["validate", str(FIXTURES / name), "--strict-model"])
        notes = [line for line in result.stdout.splitlines() if "needs_many_to_many" in line]
        assert len(notes) == 1, (name, result.stdout)
        assert needle in notes[0]


# ---------------------------------------------------------------------------
# load-ontology
# ---------------------------------------------------------------------------

def test_load_ontology_merges_and_persists(runner, populated, tmp_path):
    snapshot = tmp_path / "onto.jsonl"
    snapshot.write_text((FIXTURES / "ontology_snapshot.jsonl").read_text(), "utf-8")

    first = runner.invoke(main, ["load-ontology", str(snapshot), "--store", populated])
    assert first.exit_code == 0
    assert "10 new class(es), catalog now holds 10" in first.stdout
    assert (Path(populated) / "catalog.jsonl").exists()

    again = runner.invoke(main, ["load-ontology", str(snapshot), "--store", populated])
    assert again.exit_code == 0
    assert "0 new class(es), catalog now holds 10" in again.stdout


def test_load_ontology_rejects_cyclic_snapshot(runner, tmp_path):
    lines = [
        json.dumps({"ontology": "T", "id": "A", "label": "A", "parents": ["B"]}),
        json.dumps({"ontology": "T", "id": "B", "label": "B", "parents": ["A"]}),
    ]
    snapshot = tmp_path / "cyclic.jsonl"
    snapshot.write_text("\n".join(lines) + "\n", "utf-8")
    result = runner.invoke(main, ["load-ontology", str(snapshot),
                                  "--store", str(tmp_path / "s")])
    assert result.exit_code == 1
    assert "error: [cycle_detected]" in result.stderr


# ---------------------------------------------------------------------------
# report (local)
# ---------------------------------------------------------------------------

def load_catalog(runner, store_dir):
    snapshot = FIXTURES / "ontology_snapshot.jsonl"
    result = runner.invoke(main, ["load-ontology", str(snapshot), "--store", store_dir])
    assert result.exit_code == 0


def test_report_summary_table(runner, populated, tmp_path):
    load_catalog(runner, populated)
    result = runner.invoke(main, ["report", "--store", populated])
    assert result.exit_code == 0, result.output
    assert "Charité – Universitätsmedizin Berlin: 2 element(s)" in result.stdout
    assert ("Charité – Universitätsmedizin Berlin / Rigshospitalet Copenhagen: "
            "2 shared concept(s), 1 full, 1 partial, 0 incompatible") in result.stdout


def test_report_summary_json(runner, populated):
    load_catalog(runner, populated)
    result = runner.invoke(main, ["report", "--store", populated, "--format", "json"])
    payload = json.loads(result.stdout)
    assert len(payload["registries"]) == 3
    assert len(payload["registry_pairs"]) == 3
    totals = sum(row["fully_compatible_pairs"] for row in payload["registry_pairs"])
    assert totals == 3


def test_report_discovery_by_name_and_level(runner, populated):
    load_catalog(runner, populated)
    names = "Charité – Universitätsmedizin Berlin,Rigshospitalet Copenhagen"
    partial = runner.invoke(main, ["report", "--store", populated, "--registries", names])
    assert partial.exit_code == 0
    assert "Polydactyly" in partial.stdout
    assert "SARS-CoV-2 RNA NAAT" in partial.stdout

    full = runner.invoke(main, ["report", "--store", populated, "--registries", names,
                                "--min", "full"])
    assert "SARS-CoV-2 RNA NAAT" in full.stdout
    assert "Polydactyly (" not in full.stdout


def test_report_discovery_without_catalog_misses_cross_codings(runner, populated):
    # without the ontology catalog the two polydactyly codings stay apart
    names = "Charité – Universitätsmedizin Berlin,Rigshospitalet Copenhagen"
    result = runner.invoke(main, ["report", "--store", populated, "--registries", names])
    assert result.exit_code == 0
    assert "Polydactyly (" not in result.stdout
    assert "SARS-CoV-2 RNA NAAT" in result.stdout


def test_report_unknown_registry_name_fails(runner, populated):
    result = runner.invoke(main, ["report", "--store", populated,
                                  "--registries", "Nowhere General"])
    assert result.exit_code == 1
    assert "error:" in result.stderr


def test_report_requires_exactly_one_target(runner, populated):
    neither = runner.invoke(main, ["report"])
    assert neither.exit_code == 1
    assert "exactly one" in neither.stderr
    both = runner.invoke(main, ["report", "--store", populated,
                                "--remote", "http://localhost:1"])
    assert both.exit_code == 1


# ---------------------------------------------------------------------------
# report (remote)
# ---------------------------------------------------------------------------

class FakeResponse:
    def __init__(self, payload, status_code=200):
        self._payload = payload
        self.status_code = status_code
        self.text = json.dumps(payload)

    def json(self):
        return self._payload


def test_report_remote_summary(runner, monkeypatch):
    seen = {}

    def fake_get(url, params=None, headers=None, timeout=None):
        seen["url"] = url
        seen["headers"] = headers
        return FakeResponse({
            "registries": [{"name": "Left", "elements": 2, "id": "x"}],
            "compatibility": {"registry_pairs": [{
                "left_name": "Left", "right_name": "Right", "shared_concepts": 1,
                "fully_compatible_pairs": 1, "partially_compatible_pairs": 0,
                "incompatible_pairs": 0, "left": "x", "right": "y",
                "left_elements": 2, "right_elements": 2,
            }]},
        })

    monkeypatch.setattr(httpx, "get", fake_get)
    monkeypatch.setenv("MDR_TOKEN", "sesame")
    result = runner.invoke(main, ["report", "--remote", "http://mdr.example:8402/"])
    assert result.exit_code == 0, result.output
    assert seen["url"] == "http://mdr.example:8402/api/summary"
    assert seen["headers"] == {"Authorization": "Bearer sesame"}
    assert "Left: 2 element(s)" in result.stdout
    assert "Left / Right: 1 shared concept(s), 1 full, 0 partial, 0 incompatible" in result.stdout


def test_report_remote_discovery_and_failure(runner, monkeypatch):
    def fake_get(url, params=None, headers=None, timeout=None):
        if params.get("min_level") == "full":
            return FakeResponse({"error": "forbidden", "message": "no"}, status_code=403)
        return FakeResponse({
            "min_level": "partially_compatible",
            "features": [{
                "concept": {"ontology": "HPO", "ontology_id": "HP:0010442"},
                "label": "Polydactyly", "level": "partially_compatible",
                "elements": [
                    {"registry_id": "a", "registry_name": "Left",
                     "elements": [{"id": "e1", "storage_path": "pheno/poly"}]},
                    {"registry_id": "b", "registry_name": "Right",
                     "elements": [{"id": "e2", "storage_path": "find/poly"}]},
                ],
            }],
        })

    monkeypatch.setattr(httpx, "get", fake_get)
    monkeypatch.delenv("MDR_TOKEN", raising=False)
    ok = runner.invoke(main, ["report", "--remote", "http://mdr.example",
                              "--registries", "Left,Right"])
    assert ok.exit_code == 0, ok.output
    assert "Polydactyly (HPO:HP:0010442) [partially_compatible]" in ok.stdout
    assert "Left: pheno/poly" in ok.stdout

    denied = runner.invoke(main, ["report", "--remote", "http://mdr.example",
                                  "--registries", "Left,Right", "--min", "full"])
    assert denied.exit_code == 1
    assert "HTTP 403" in denied.stderr


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def test_serve_help_mentions_config(runner):
    result = runner.invoke(main, ["serve", "--help"])
    assert result.exit_code == 0
    assert "--config" in result.stdout
    assert "--store" in result.stdout


def test_serve_wires_config_store_and_catalog(runner, populated, monkeypatch):
    load_catalog(runner, populated)
    captured = {}

    def fake_run(app, host, port, log_level):
        captured["app"] = app
        captured["host"] = host
        captured["port"] = port

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", fake_run)
    result = runner.invoke(main, ["serve", "--store", populated])
    assert result.exit_code == 0, result.output
    assert captured["host"] == "127.0.0.1" and captured["port"] == 8402
    state = captured["app"].state
    assert state.store.snapshot().data_elements
    assert len(state.catalog) == 10
    state.store.close()
