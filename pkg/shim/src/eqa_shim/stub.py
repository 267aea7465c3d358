"""Stub backend: canned request/response lookup over the conformance
fixture directory (one JSON file per pair: endpoint, request, response)."""

from __future__ import annotations

import json
from pathlib import Path

ENDPOINTS = ("/v1/parse_question", "/v1/itm", "/v1/vqa")


def canonical(body: dict) -> str:
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


class StubBackend:
    def __init__(self, fixture_dir):
        self.fixture_dir = Path(fixture_dir)
        self._table: dict[tuple[str, str], dict] = {}
        files = sorted(self.fixture_dir.glob("*.json"))
        if not files:
            raise FileNotFoundError(
                f"no conformance fixtures in {self.fixture_dir}")
        for path in files:
            fx = json.loads(path.read_text(encoding="utf-8"))
            for key in ("endpoint", "request", "response"):
                if key not in fx:
                    raise ValueError(f"fixture {path.name} missing {key!r}")
            if fx["endpoint"] not in ENDPOINTS:
                raise ValueError(
                    f"fixture {path.name} has unknown endpoint {fx['endpoint']!r}")
            self._table[(fx["endpoint"], canonical(fx["request"]))] = fx["response"]

    def __len__(self) -> int:
        return len(self._table)

    def handle(self, endpoint: str, body: dict) -> dict:
        key = (endpoint, canonical(body))
        if key not in self._table:
            raise LookupError(f"no fixture for {endpoint} with this request body")
        return self._table[key]
