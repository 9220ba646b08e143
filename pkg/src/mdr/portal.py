"""Client for an external terminology portal's search endpoint.

Three interchangeable modes:

* live: HTTP GET against a configured endpoint,
* fixture: bit-exact replay of recorded responses from a JSON file,
* off: every call raises PortalUnavailable.

The suggestion engine treats the portal as optional; callers that must
not fail on network trouble catch PortalUnavailable and report
``portal_reached=False`` instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

import httpx

from .errors import MalformedPortalResponse, ParseError, PortalUnavailable
from .model import OntologyRef


@dataclass(frozen=True)
class PortalCandidate:
    """One search hit returned by the portal."""

    ref: OntologyRef
    label: str
    parents: tuple[str, ...] = ()


def canonicalize_query(query: str) -> str:
    """Whitespace-collapsed, case-folded form used for fixture keys and
    duplicate suppression."""
    return " ".join(query.split()).casefold()


def _candidates_from_json(data: Any) -> list[PortalCandidate]:
    if not isinstance(data, list):
        raise MalformedPortalResponse(f"expected a JSON array, got {type(data).__name__}")
    out: list[PortalCandidate] = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise MalformedPortalResponse(f"entry {i}: expected an object")
        try:
            ref = OntologyRef(str(item["ontology"]), str(item["id"]))
            label = str(item["label"])
        except KeyError as exc:
            raise MalformedPortalResponse(f"entry {i}: missing field {exc.args[0]!r}") from None
        parents = item.get("parents") or []
        if not isinstance(parents, list):
            raise MalformedPortalResponse(f"entry {i}: parents must be a list")
        out.append(PortalCandidate(ref=ref, label=label, parents=tuple(str(p) for p in parents)))
    return out


class PortalClient(Protocol):
    def search(self, query: str) -> list[PortalCandidate]: ...


class DisabledPortalClient:
    """Portal mode "off": always unavailable."""

    def search(self, query: str) -> list[PortalCandidate]:
        raise PortalUnavailable("portal access is disabled by configuration")


class FixturePortalClient:
    """Replays recorded portal responses, keyed by canonicalized query.

    The fixture file is a JSON object mapping canonical query strings to
    arrays of response entries. Queries absent from the fixture return
    an empty list, mirroring a live portal with no hits.
    """

    def __init__(self, fixture_path: str | Path):
        try:
            raw = json.loads(Path(fixture_path).read_text("utf-8"))
        except OSError as exc:
            raise PortalUnavailable(f"fixture unreadable: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"fixture is not valid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ParseError("fixture must be a JSON object keyed by query")
        self._responses: dict[str, list[PortalCandidate]] = {}
        for key, value in raw.items():
            self._responses[canonicalize_query(key)] = _candidates_from_json(value)

    def search(self, query: str) -> list[PortalCandidate]:
        return list(self._responses.get(canonicalize_query(query), []))


class LivePortalClient:
    """Talks to a real portal over HTTP.

    Expects ``GET {endpoint}?q=<query>`` to return a JSON array of
    ``{"ontology", "id", "label", "parents"}`` objects. Network and
    HTTP-status failures surface as PortalUnavailable; a 200 with an
    unparseable body is MalformedPortalResponse.
    """

    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 5.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def search(self, query: str) -> list[PortalCandidate]:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"apikey {self.api_key}"
        try:
            response = httpx.get(
                self.endpoint,
                params={"q": query},
                headers=headers,
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise PortalUnavailable(f"portal request failed: {exc}") from exc
        if response.status_code != 200:
            raise PortalUnavailable(f"portal returned HTTP {response.status_code}")
        try:
            data = response.json()
        except json.JSONDecodeError as exc:
            raise MalformedPortalResponse(f"portal body is not JSON: {exc.msg}") from exc
        return _candidates_from_json(data)


def make_portal_client(
    mode: str,
    endpoint: str | None = None,
    api_key: str | None = None,
    fixture_path: str | Path | None = None,
) -> PortalClient:
    """Build the portal client named by ``mode`` (live, fixture or off)."""
    if mode == "off":
        return DisabledPortalClient()
    if mode == "fixture":
        if not fixture_path:
            raise ValueError("fixture mode needs a fixture_path")
        return FixturePortalClient(fixture_path)
    if mode == "live":
        if not endpoint:
            raise ValueError("live mode needs an endpoint")
        return LivePortalClient(endpoint, api_key=api_key)
    raise ValueError(f"unknown portal mode {mode!r}; expected live, fixture or off")
