"""HTTP interface of the repository.

A FastAPI application factory wiring the store, ontology catalog,
portal client and token auth together. Everything lives under ``/api``;
all routes except ``/api/health`` and ``/api/auth/token`` deny access by
default and require a bearer token. GET routes need the reader role,
mutations need curator, bulk export/import needs admin; roles are
monotone (admin can do everything a curator can, and so on).

Error bodies are flat ``{"error": <code>, "message": <text>}`` objects;
the code is the stable machine-readable name from :mod:`mdr.errors`.
"""

from __future__ import annotations

import json
from typing import Any

from fastapi import Depends, FastAPI, Query, Request, Response
from fastapi.exceptions import HTTPException, RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import auth as auth_mod
from . import compat, document, model
from .catalog import OntologyCatalog
from .config import Config
from .errors import (
    CycleDetected,
    DuplicateLink,
    DuplicateName,
    DuplicateOntologyKey,
    DuplicateStoragePath,
    EmptyIntersection,
    HasReferences,
    MalformedPortalResponse,
    MdrError,
    NeedTwoRegistries,
    NotFound,
    NotPartiallyCompatible,
    ParseError,
    PortalUnavailable,
    QueryTooShort,
    ReferentialGap,
    UnknownEntity,
    UnknownRef,
    ValidationFailed,
)
from .model import Kind, OntologyRef, Relation
from .portal import PortalClient, make_portal_client
from .store import MetadataStore
from .suggest import DEFAULT_LIMIT as SUGGEST_DEFAULT_LIMIT, suggest as run_suggest

_STATUS_OF = {
    DuplicateOntologyKey: 409,
    DuplicateName: 409,
    DuplicateStoragePath: 409,
    DuplicateLink: 409,
    HasReferences: 409,
    NotFound: 404,
    UnknownEntity: 404,
    UnknownRef: 404,
    ValidationFailed: 400,
    QueryTooShort: 400,
    ParseError: 400,
    ReferentialGap: 422,
    NotPartiallyCompatible: 422,
    EmptyIntersection: 422,
    NeedTwoRegistries: 422,
    CycleDetected: 422,
    PortalUnavailable: 503,
    MalformedPortalResponse: 502,
}

_KIND_SEGMENTS = {
    "registries": Kind.REGISTRY,
    "conceptual-domains": Kind.CONCEPTUAL_DOMAIN,
    "data-element-concepts": Kind.DATA_ELEMENT_CONCEPT,
    "value-domains": Kind.VALUE_DOMAIN,
    "permissible-values": Kind.PERMISSIBLE_VALUE,
    "data-elements": Kind.DATA_ELEMENT,
}

MAX_PAGE = 500
DEFAULT_PAGE = 50


class TokenRequest(BaseModel):
    username: str
    password: str


class LinkRequest(BaseModel):
    left: str
    right: str


class CommonDomainRequest(BaseModel):
    left: str
    right: str
    persist: bool = False
    label: str | None = None


def _entity_json(entity: model.Entity) -> dict[str, Any]:
    return {"id": entity.id, **model.entity_to_payload(entity)}


def _collection_sort_key(kind: Kind, entity: model.Entity):
    if kind is Kind.REGISTRY:
        return (entity.name.casefold(), entity.id)
    if kind is Kind.DATA_ELEMENT:
        return (entity.registry_id, entity.storage_path)
    return entity.ref


def _shared_values_json(snapshot: model.Snapshot, refs) -> list[dict[str, str]]:
    labels: dict[OntologyRef, str] = {}
    for pv in snapshot.permissible_values.values():
        labels.setdefault(pv.ref, pv.label)
    return [
        {"ontology": ref.ontology_name, "ontology_id": ref.ontology_id,
         "label": labels.get(ref, "")}
        for ref in sorted(refs)
    ]


def _report_json(snapshot: model.Snapshot, report: compat.CompatibilityReport) -> dict[str, Any]:
    return {
        "left_element": report.left_element,
        "right_element": report.right_element,
        "left_concept": model.ref_to_dict(report.left_concept),
        "right_concept": model.ref_to_dict(report.right_concept),
        "verdict": report.verdict.value,
        "detail": report.detail,
        "shared_values": _shared_values_json(snapshot, report.shared_values),
    }


def _pair_summary_json(snapshot: model.Snapshot, summary: compat.RegistryPairSummary) -> dict[str, Any]:
    names = {reg_id: reg.name for reg_id, reg in snapshot.registries.items()}
    return {
        "left": summary.left_registry,
        "right": summary.right_registry,
        "left_name": names.get(summary.left_registry, ""),
        "right_name": names.get(summary.right_registry, ""),
        "left_elements": summary.left_elements,
        "right_elements": summary.right_elements,
        "shared_concepts": summary.shared_concepts,
        "fully_compatible_pairs": summary.fully_compatible_pairs,
        "partially_compatible_pairs": summary.partially_compatible_pairs,
        "incompatible_pairs": summary.incompatible_pairs,
        "overlaps": [
            {
                "concept": model.ref_to_dict(o.concept),
                "label": o.label,
                "left_elements": list(o.left_elements),
                "right_elements": list(o.right_elements),
                "best_verdict": o.best_verdict.value,
            }
            for o in summary.overlaps
        ],
    }


async def _json_body(request: Request) -> dict[str, Any]:
    try:
        payload = json.loads(await request.body())
    except json.JSONDecodeError as exc:
        raise HTTPException(400, {"error": "invalid_request",
                                  "message": f"body is not valid JSON: {exc.msg}"}) from None
    if not isinstance(payload, dict):
        raise HTTPException(400, {"error": "invalid_request",
                                  "message": "body must be a JSON object"})
    return payload


def create_app(
    config: Config | None = None,
    store: MetadataStore | None = None,
    catalog: OntologyCatalog | None = None,
    portal: PortalClient | None = None,
    users: dict[str, dict] | None = None,
) -> FastAPI:
    """Assemble the application; omitted pieces are built from config."""
    config = config or Config()
    if store is None:
        store = MetadataStore(config.data_dir)
    if catalog is None:
        catalog = OntologyCatalog()
    if portal is None and config.portal_mode != "off":
        portal = make_portal_client(
            config.portal_mode,
            endpoint=config.portal_endpoint or None,
            api_key=config.portal_api_key or None,
            fixture_path=config.portal_fixture_path or None,
        )
    if users is None:
        users = auth_mod.load_users(config.users_file) if config.users_file else {}
    secret = config.token_secret
    if not secret:
        import secrets as _secrets

        secret = _secrets.token_hex(32)  # ephemeral dev secret

    app = FastAPI(title="mdr", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.store = store
    app.state.catalog = catalog
    app.state.portal = portal
    app.state.config = config

    # -- error plumbing ------------------------------------------------------

    @app.exception_handler(MdrError)
    async def mdr_error_handler(request: Request, exc: MdrError) -> JSONResponse:
        status = 500
        for cls in type(exc).__mro__:
            if cls in _STATUS_OF:
                status = _STATUS_OF[cls]
                break
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "message": str(exc)})

    @app.exception_handler(HTTPException)
    async def http_error_handler(request: Request, exc: HTTPException) -> JSONResponse:
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"error": "http_error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=detail,
                            headers=getattr(exc, "headers", None))

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400,
                            content={"error": "invalid_request", "message": str(exc.errors()[:3])})

    # -- auth ----------------------------------------------------------------

    def principal_of(request: Request) -> auth_mod.Principal:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            return auth_mod.ANONYMOUS
        return auth_mod.verify_token(secret, header[7:].strip())

    def require(request: Request, role: str) -> auth_mod.Principal:
        principal = principal_of(request)
        if principal.anonymous:
            raise HTTPException(401, {"error": "unauthenticated",
                                      "message": "a valid bearer token is required"},
                                headers={"WWW-Authenticate": "Bearer"})
        if not principal.has_role(role):
            raise HTTPException(403, {"error": "forbidden",
                                      "message": f"the {role} role is required"})
        return principal

    def reader(request: Request) -> auth_mod.Principal:
        return require(request, "reader")

    def curator(request: Request) -> auth_mod.Principal:
        return require(request, "curator")

    def admin(request: Request) -> auth_mod.Principal:
        return require(request, "admin")

    @app.get("/api/health")
    def health() -> dict[str, Any]:
        return {"status": "ok", "version": store.snapshot().version}

    @app.post("/api/auth/token")
    def token(body: TokenRequest) -> dict[str, Any]:
        roles = auth_mod.authenticate(users, body.username, body.password)
        if roles is None:
            raise HTTPException(401, {"error": "invalid_credentials",
                                      "message": "unknown user or wrong password"})
        ttl = config.token_ttl_seconds
        return {
            "token": auth_mod.issue_token(secret, body.username, roles, ttl),
            "subject": body.username,
            "roles": roles,
            "expires_in": ttl,
        }

    # -- links -----------------------------------------------------------------

    def resolve_relation(name: str) -> Relation:
        try:
            return Relation(name)
        except ValueError:
            raise HTTPException(404, {"error": "not_found",
                                      "message": f"unknown relation {name!r}"}) from None

    @app.get("/api/links/{relation_name}")
    def list_links(
        relation_name: str,
        left: str | None = None,
        right: str | None = None,
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        relation = resolve_relation(relation_name)
        pairs = sorted(store.snapshot().links.pairs(relation))
        if left is not None:
            pairs = [p for p in pairs if p[0] == left]
        if right is not None:
            pairs = [p for p in pairs if p[1] == right]
        return {"relation": relation.value,
                "pairs": [{"left": l, "right": r} for l, r in pairs]}

    @app.post("/api/links/{relation_name}", status_code=201)
    def create_link(
        relation_name: str,
        body: LinkRequest,
        principal: auth_mod.Principal = Depends(curator),
    ) -> dict[str, Any]:
        relation = resolve_relation(relation_name)
        store.link(relation, body.left, body.right, actor=principal.subject)
        return {"linked": {"left": body.left, "right": body.right},
                "version": store.snapshot().version}

    @app.delete("/api/links/{relation_name}")
    def delete_link(
        relation_name: str,
        left: str,
        right: str,
        principal: auth_mod.Principal = Depends(curator),
    ) -> dict[str, Any]:
        relation = resolve_relation(relation_name)
        store.unlink(relation, left, right, actor=principal.subject)
        return {"unlinked": {"left": left, "right": right},
                "version": store.snapshot().version}

    # -- suggestions -----------------------------------------------------------

    @app.get("/api/suggest")
    def suggest_route(
        q: str,
        kind: str | None = None,
        limit: int = Query(SUGGEST_DEFAULT_LIMIT, ge=1, le=MAX_PAGE),
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        kind_filter = None
        if kind is not None:
            try:
                kind_filter = Kind(kind)
            except ValueError:
                raise HTTPException(400, {"error": "invalid_request",
                                          "message": f"unknown kind {kind!r}"}) from None
        response = run_suggest(store.snapshot(), catalog, portal, q,
                               kind=kind_filter, limit=limit)
        return {
            "query": q,
            "portal_reached": response.portal_reached,
            "suggestions": [
                {
                    "ontology": s.ref.ontology_name,
                    "ontology_id": s.ref.ontology_id,
                    "label": s.label,
                    "source": s.source.value,
                    "match_kind": s.match_kind.value,
                    "score": s.score,
                }
                for s in response.suggestions
            ],
        }

    # -- compatibility -----------------------------------------------------------

    @app.get("/api/compat/elements")
    def compare_route(
        left: str,
        right: str,
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        snapshot = store.snapshot()
        report = compat.compare_elements(snapshot, left, right, catalog)
        return _report_json(snapshot, report)

    @app.post("/api/compat/common-domain")
    def common_domain_route(
        body: CommonDomainRequest,
        request: Request,
    ) -> dict[str, Any]:
        principal = require(request, "curator" if body.persist else "reader")
        snapshot = store.snapshot()
        result = compat.make_temporary_common_domain(
            snapshot, body.left, body.right, catalog,
            store=store if body.persist else None,
            actor=principal.subject, label=body.label,
        )
        fresh = store.snapshot()
        values = []
        for pv_id in result.value_ids:
            pv = fresh.permissible_values.get(pv_id) or snapshot.permissible_values.get(pv_id)
            values.append({"id": pv_id, **model.entity_to_payload(pv)})
        return {
            "domain": _entity_json(result.domain),
            "values": values,
            "persisted": result.persisted,
            "version": fresh.version,
        }

    @app.get("/api/registries/{registry_id}/summary")
    def registry_summary_route(
        registry_id: str,
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        snapshot = store.snapshot()
        if registry_id not in snapshot.registries:
            raise NotFound(f"no registry with id {registry_id!r}")
        others = sorted(
            (reg_id for reg_id in snapshot.registries if reg_id != registry_id),
            key=lambda reg_id: snapshot.registries[reg_id].name.casefold(),
        )
        pairs = [
            _pair_summary_json(
                snapshot, compat.registry_pair_summary(snapshot, registry_id, other, catalog)
            )
            for other in others
        ]
        return {
            "registry": _entity_json(snapshot.registries[registry_id]),
            "elements": len(snapshot.elements_of(registry_id)),
            "pairs": pairs,
            "version": snapshot.version,
        }

    @app.get("/api/summary")
    def summary_route(principal: auth_mod.Principal = Depends(reader)) -> dict[str, Any]:
        snapshot = store.snapshot()
        regs = sorted(snapshot.registries.values(), key=lambda r: r.name.casefold())
        pair_rows = []
        totals = {"fully_compatible_pairs": 0, "partially_compatible_pairs": 0,
                  "incompatible_pairs": 0}
        for i, left in enumerate(regs):
            for right in regs[i + 1:]:
                summary = compat.registry_pair_summary(snapshot, left.id, right.id, catalog)
                row = _pair_summary_json(snapshot, summary)
                row.pop("overlaps")
                pair_rows.append(row)
                totals["fully_compatible_pairs"] += summary.fully_compatible_pairs
                totals["partially_compatible_pairs"] += summary.partially_compatible_pairs
                totals["incompatible_pairs"] += summary.incompatible_pairs
        report = model.validate_model(snapshot)
        return {
            "version": snapshot.version,
            "counts": {
                "registries": len(snapshot.registries),
                "conceptual_domains": len(snapshot.conceptual_domains),
                "data_element_concepts": len(snapshot.data_element_concepts),
                "value_domains": len(snapshot.value_domains),
                "permissible_values": len(snapshot.permissible_values),
                "data_elements": len(snapshot.data_elements),
            },
            "registries": [
                {"id": reg.id, "name": reg.name, "organisation": reg.organisation,
                 "elements": len(snapshot.elements_of(reg.id))}
                for reg in regs
            ],
            "compatibility": {**totals, "registry_pairs": pair_rows},
            "warnings": len(report.warnings),
        }

    @app.get("/api/discover")
    def discover_route(
        registries: str,
        min_level: str = "partial",
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        snapshot = store.snapshot()
        ids = [part.strip() for part in registries.split(",") if part.strip()]
        try:
            level = compat.parse_level(min_level)
        except ValueError as exc:
            raise HTTPException(400, {"error": "invalid_request", "message": str(exc)}) from None
        features = compat.discover_features(snapshot, ids, level, catalog)
        names = {reg_id: reg.name for reg_id, reg in snapshot.registries.items()}
        return {
            "min_level": level.value,
            "registries": ids,
            "features": [
                {
                    "concept": model.ref_to_dict(f.concept),
                    "label": f.label,
                    "level": f.level.value,
                    "elements": [
                        {
                            "registry_id": reg_id,
                            "registry_name": names.get(reg_id, ""),
                            "elements": [
                                {"id": de_id,
                                 "storage_path": snapshot.data_elements[de_id].storage_path}
                                for de_id in f.elements[reg_id]
                            ],
                        }
                        for reg_id in sorted(f.elements,
                                             key=lambda reg_id: names.get(reg_id, "").casefold())
                    ],
                }
                for f in features
            ],
        }

    # -- model-level checks --------------------------------------------------

    @app.get("/api/validate")
    def validate_route(principal: auth_mod.Principal = Depends(reader)) -> dict[str, Any]:
        report = model.validate_model(store.snapshot())

        def rows(findings):
            return [
                {"severity": f.severity, "rule": f.rule, "kind": f.kind,
                 "entity_id": f.entity_id, "message": f.message}
                for f in findings
            ]

        return {"clean": report.is_clean,
                "violations": rows(report.violations),
                "warnings": rows(report.warnings)}

    @app.get("/api/strict-check")
    def strict_check_route(
        include_temporary: bool = False,
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        uses = model.strict_iso_check(store.snapshot(), include_temporary=include_temporary)
        return {
            "fits_strict": not uses,
            "uses": [
                {
                    "relation": u.relation.value,
                    "kind": u.kind.value,
                    "entity_id": u.entity_id,
                    "ontology": u.ref.ontology_name,
                    "ontology_id": u.ref.ontology_id,
                    "label": u.label,
                    "parent_ids": list(u.parent_ids),
                }
                for u in uses
            ],
        }

    @app.get("/api/changes")
    def changes_route(
        since: int = 0,
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        return {
            "changes": [
                {"version": c.version, "kind": c.kind, "entity_id": c.entity_id,
                 "operation": c.operation, "actor": c.actor, "timestamp": c.timestamp}
                for c in store.changes(since)
            ]
        }

    # -- bulk ------------------------------------------------------------------

    @app.get("/api/export")
    def export_route(principal: auth_mod.Principal = Depends(admin)) -> Response:
        text = document.export_document(store.snapshot())
        return Response(content=text, media_type="application/json")

    @app.post("/api/import")
    async def import_route(
        request: Request,
        mode: str = "strict",
        principal: auth_mod.Principal = Depends(admin),
    ) -> dict[str, Any]:
        if mode not in ("strict", "merge"):
            raise HTTPException(400, {"error": "invalid_request",
                                      "message": f"unknown import mode {mode!r}"})
        doc = await _json_body(request)
        report = document.import_document(store, doc, mode=mode, actor=principal.subject)
        return {"report": report.as_dict(), "version": store.snapshot().version}

    # -- entity CRUD -----------------------------------------------------------
    # Registered last: the {segment} wildcard must not shadow the routes above.

    def resolve_kind(segment: str) -> Kind:
        kind = _KIND_SEGMENTS.get(segment)
        if kind is None:
            raise HTTPException(404, {"error": "not_found",
                                      "message": f"unknown collection {segment!r}"})
        return kind

    @app.get("/api/{segment}")
    def list_entities(
        segment: str,
        limit: int = Query(DEFAULT_PAGE, ge=1, le=MAX_PAGE),
        offset: int = Query(0, ge=0),
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        kind = resolve_kind(segment)
        snapshot = store.snapshot()
        rows = sorted(snapshot.collection(kind).values(),
                      key=lambda e: _collection_sort_key(kind, e))
        page = rows[offset:offset + limit]
        return {
            "items": [_entity_json(e) for e in page],
            "total": len(rows),
            "limit": limit,
            "offset": offset,
            "version": snapshot.version,
        }

    @app.post("/api/{segment}", status_code=201)
    async def create_entity(
        segment: str,
        request: Request,
        principal: auth_mod.Principal = Depends(curator),
    ) -> dict[str, Any]:
        kind = resolve_kind(segment)
        payload = await _json_body(request)
        entity = store.create(kind, payload, actor=principal.subject)
        return {"entity": _entity_json(entity), "version": store.snapshot().version}

    @app.get("/api/{segment}/{entity_id}")
    def get_entity(
        segment: str,
        entity_id: str,
        principal: auth_mod.Principal = Depends(reader),
    ) -> dict[str, Any]:
        kind = resolve_kind(segment)
        return _entity_json(store.get(kind, entity_id))

    @app.put("/api/{segment}/{entity_id}")
    async def update_entity(
        segment: str,
        entity_id: str,
        request: Request,
        principal: auth_mod.Principal = Depends(curator),
    ) -> dict[str, Any]:
        kind = resolve_kind(segment)
        payload = await _json_body(request)
        entity = store.update(kind, entity_id, payload, actor=principal.subject)
        return {"entity": _entity_json(entity), "version": store.snapshot().version}

    @app.delete("/api/{segment}/{entity_id}")
    def delete_entity(
        segment: str,
        entity_id: str,
        cascade: bool = False,
        principal: auth_mod.Principal = Depends(curator),
    ) -> dict[str, Any]:
        kind = resolve_kind(segment)
        store.delete(kind, entity_id, cascade=cascade, actor=principal.subject)
        return {"deleted": entity_id, "version": store.snapshot().version}

    return app
