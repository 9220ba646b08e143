"""Command line interface.

Subcommands mirror the operational surface: ``import`` and ``export``
move data-dictionary documents in and out of a store, ``validate``
checks a document or store and encodes the outcome in its exit status
(0 clean, 1 warnings only, 2 violations or unreadable input),
``load-ontology`` merges catalog snapshots, ``report`` prints
compatibility summaries from a local store or a running server, and
``serve`` starts the HTTP API.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import compat, document, model
from .catalog import OntologyCatalog
from .config import Config, load_config
from .errors import MdrError
from .store import MetadataStore

CATALOG_FILE = "catalog.jsonl"


def open_catalog(data_dir: str | Path) -> OntologyCatalog:
    catalog = OntologyCatalog()
    path = Path(data_dir) / CATALOG_FILE
    if path.exists():
        catalog.load_snapshot(path)
    return catalog


def _fail(message: str, code: int = 1) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Metadata repository for clinical data dictionaries."""


@main.command("import")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False),
              help="Store data directory.")
@click.option("--mode", type=click.Choice(["strict", "merge"]), default="strict",
              show_default=True, help="Collision handling.")
def cmd_import(file: str, store_dir: str, mode: str) -> None:
    """Import a data-dictionary document into a store."""
    try:
        with MetadataStore(store_dir) as store:
            report = document.import_document(store, Path(file), mode=mode)
    except MdrError as exc:
        _fail(f"[{exc.code}] {exc}")
    click.echo(
        f"created {report.created}, merged {report.merged}, skipped {report.skipped}, "
        f"links added {report.links_added}, links existing {report.links_existing}"
    )
    for key in report.skipped_keys:
        click.echo(f"  kept existing: {key}")


@main.command("export")
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Write to a file instead of stdout.")
def cmd_export(store_dir: str, output: str | None) -> None:
    """Export a store as a canonical data-dictionary document."""
    try:
        with MetadataStore(store_dir) as store:
            text = document.export_document(store.snapshot())
    except MdrError as exc:
        _fail(f"[{exc.code}] {exc}")
    if output:
        Path(output).write_text(text, "utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


@main.command("validate")
@click.argument("file", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Validate a store instead of a document file.")
@click.option("--strict-model", is_flag=True,
              help="Also list entities needing many-to-many relations.")
def cmd_validate(file: str | None, store_dir: str | None, strict_model: bool) -> None:
    """Check a document or store; exit 0 clean, 1 warnings, 2 violations."""
    if (file is None) == (store_dir is None):
        _fail("pass exactly one of FILE or --store", 2)
    try:
        if file is not None:
            snapshot = document.snapshot_from_document(Path(file))
        else:
            with MetadataStore(store_dir) as store:
                snapshot = store.snapshot()
    except MdrError as exc:
        click.echo(f"error: [{exc.code}] {exc}", err=True)
        sys.exit(2)
    report = model.validate_model(snapshot)
    for finding in report.findings:
        click.echo(f"{finding.severity}: [{finding.rule}] {finding.kind} "
                   f"{finding.entity_id}: {finding.message}")
    if strict_model:
        for use in model.strict_iso_check(snapshot):
            click.echo(f"note: [needs_many_to_many] {use.kind.value} {use.entity_id} "
                       f"({use.ref}, {use.label!r}) has {len(use.parent_ids)} "
                       f"{use.relation.value} parents")
    if report.has_violations:
        click.echo(f"invalid: {len(report.violations)} violation(s), "
                   f"{len(report.warnings)} warning(s)")
        sys.exit(2)
    if report.warnings:
        click.echo(f"valid with {len(report.warnings)} warning(s)")
        sys.exit(1)
    click.echo("valid")


@main.command("load-ontology")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_dir", required=True, type=click.Path(file_okay=False))
def cmd_load_ontology(file: str, store_dir: str) -> None:
    """Merge an ontology snapshot (line-delimited JSON) into the catalog."""
    Path(store_dir).mkdir(parents=True, exist_ok=True)
    try:
        catalog = open_catalog(store_dir)
        added = catalog.load_snapshot(Path(file))
        catalog.save_snapshot(Path(store_dir) / CATALOG_FILE)
    except MdrError as exc:
        _fail(f"[{exc.code}] {exc}")
    click.echo(f"{added} new class(es), catalog now holds {len(catalog)}")


def _summary_payload_local(store_dir: str) -> dict:
    with MetadataStore(store_dir) as store:
        snapshot = store.snapshot()
        catalog = open_catalog(store_dir)
        regs = sorted(snapshot.registries.values(), key=lambda r: r.name.casefold())
        rows = []
        for i, left in enumerate(regs):
            for right in regs[i + 1:]:
                summary = compat.registry_pair_summary(snapshot, left.id, right.id, catalog)
                rows.append({
                    "left_name": left.name,
                    "right_name": right.name,
                    "shared_concepts": summary.shared_concepts,
                    "fully_compatible_pairs": summary.fully_compatible_pairs,
                    "partially_compatible_pairs": summary.partially_compatible_pairs,
                    "incompatible_pairs": summary.incompatible_pairs,
                })
        return {
            "registries": [{"name": r.name, "elements": len(snapshot.elements_of(r.id))}
                           for r in regs],
            "registry_pairs": rows,
        }


def _discover_payload_local(store_dir: str, names: list[str], min_level: str) -> dict:
    with MetadataStore(store_dir) as store:
        snapshot = store.snapshot()
        catalog = open_catalog(store_dir)
        by_name = {reg.name: reg.id for reg in snapshot.registries.values()}
        ids = []
        for name in names:
            if name in by_name:
                ids.append(by_name[name])
            elif name in snapshot.registries:
                ids.append(name)
            else:
                raise MdrError(f"no registry named or identified by {name!r}")
        features = compat.discover_features(snapshot, ids, min_level, catalog)
        reg_names = {reg_id: reg.name for reg_id, reg in snapshot.registries.items()}
        return {
            "min_level": compat.parse_level(min_level).value,
            "features": [
                {
                    "concept": f"{f.concept.ontology_name}:{f.concept.ontology_id}",
                    "label": f.label,
                    "level": f.level.value,
                    "registries": {
                        reg_names[reg_id]: [
                            snapshot.data_elements[de_id].storage_path
                            for de_id in f.elements[reg_id]
                        ]
                        for reg_id in sorted(f.elements, key=lambda r: reg_names[r])
                    },
                }
                for f in features
            ],
        }


def _remote_get(base: str, path: str, params: dict) -> dict:
    import httpx

    headers = {}
    token = os.environ.get("MDR_TOKEN")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    response = httpx.get(base.rstrip("/") + path, params=params, headers=headers, timeout=10.0)
    if response.status_code != 200:
        raise MdrError(f"server returned HTTP {response.status_code}: {response.text}")
    return response.json()


@main.command("report")
@click.option("--store", "store_dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Local store to analyse.")
@click.option("--remote", default=None, help="Base URL of a running server "
              "(token from the MDR_TOKEN environment variable).")
@click.option("--registries", default=None,
              help="Comma-separated registry names or ids; switches to feature discovery.")
@click.option("--min", "min_level", type=click.Choice(["partial", "full"]), default="partial",
              show_default=True, help="Minimum compatibility level for discovery.")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table",
              show_default=True)
def cmd_report(store_dir: str | None, remote: str | None, registries: str | None,
               min_level: str, fmt: str) -> None:
    """Cross-registry compatibility summary or feature discovery."""
    if (store_dir is None) == (remote is None):
        _fail("pass exactly one of --store or --remote")
    try:
        if registries is None:
            if remote:
                raw = _remote_get(remote, "/api/summary", {})
                payload = {
                    "registries": [{"name": r["name"], "elements": r["elements"]}
                                   for r in raw["registries"]],
                    "registry_pairs": [
                        {key: row[key] for key in (
                            "left_name", "right_name", "shared_concepts",
                            "fully_compatible_pairs", "partially_compatible_pairs",
                            "incompatible_pairs")}
                        for row in raw["compatibility"]["registry_pairs"]
                    ],
                }
            else:
                payload = _summary_payload_local(store_dir)
            if fmt == "json":
                click.echo(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
                return
            click.echo("registries:")
            for row in payload["registries"]:
                click.echo(f"  {row['name']}: {row['elements']} element(s)")
            click.echo("pairs:")
            for row in payload["registry_pairs"]:
                click.echo(
                    f"  {row['left_name']} / {row['right_name']}: "
                    f"{row['shared_concepts']} shared concept(s), "
                    f"{row['fully_compatible_pairs']} full, "
                    f"{row['partially_compatible_pairs']} partial, "
                    f"{row['incompatible_pairs']} incompatible"
                )
            return
        names = [part.strip() for part in registries.split(",") if part.strip()]
        if remote:
            raw = _remote_get(remote, "/api/discover",
                              {"registries": ",".join(names), "min_level": min_level})
            payload = {
                "min_level": raw["min_level"],
                "features": [
                    {
                        "concept": f"{f['concept']['ontology']}:{f['concept']['ontology_id']}",
                        "label": f["label"],
                        "level": f["level"],
                        "registries": {
                            group["registry_name"]: [e["storage_path"] for e in group["elements"]]
                            for group in f["elements"]
                        },
                    }
                    for f in raw["features"]
                ],
            }
        else:
            payload = _discover_payload_local(store_dir, names, min_level)
        if fmt == "json":
            click.echo(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
            return
        if not payload["features"]:
            click.echo(f"no shared features at level {payload['min_level']}")
            return
        for feature in payload["features"]:
            click.echo(f"{feature['label']} ({feature['concept']}) [{feature['level']}]")
            for reg_name, paths in feature["registries"].items():
                click.echo(f"  {reg_name}: {', '.join(paths)}")
    except MdrError as exc:
        _fail(f"[{exc.code}] {exc}")


@main.command("serve")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Config file (key = value lines); environment overrides apply on top.")
@click.option("--store", "store_dir", default=None, type=click.Path(file_okay=False),
              help="Shortcut for data_dir without a config file.")
def cmd_serve(config_path: str | None, store_dir: str | None) -> None:
    """Run the HTTP API with uvicorn."""
    import uvicorn

    from .api import create_app

    try:
        config = load_config(config_path) if config_path else load_config(None)
        if store_dir:
            config.data_dir = store_dir
        store = MetadataStore(config.data_dir)
        catalog = open_catalog(config.data_dir)
        app = create_app(config=config, store=store, catalog=catalog)
    except MdrError as exc:
        _fail(f"[{exc.code}] {exc}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


if __name__ == "__main__":
    main()
