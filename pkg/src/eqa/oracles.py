"""Question parsing, image-text matching and VQA.

Each contract has a deterministic mock backed by ground-truth snapshot
views and a remote client speaking JSON over HTTP (POST /v1/parse_question,
/v1/itm, /v1/vqa). Mock scores are fixed at 0.9 / 0.5 / 0.05 so they
straddle every stop threshold in the default configuration grid.
"""

from __future__ import annotations

import itertools
import math
import os
import re
from dataclasses import dataclass, field

import requests

from .world import AgentPose, GridScene, Observation

ITM_MATCH = 0.9
ITM_SAME_CATEGORY = 0.5
ITM_NO_MATCH = 0.05

ENV_ORACLE_URL = "EQA_ORACLE_URL"
ENV_ORACLE_TIMEOUT_MS = "EQA_ORACLE_TIMEOUT_MS"
DEFAULT_TIMEOUT_MS = 10000


class OracleError(RuntimeError):
    """An oracle call failed; the message carries the request id."""


class UnparseableQuestionError(OracleError):
    """No question template matched."""


@dataclass(frozen=True)
class QuestionParse:
    target_category: str
    declarative: str


@dataclass
class InstanceView:
    """Ground-truth attribute view of one visible instance."""

    instance_id: str
    category: str
    attributes: dict
    room: str | None
    center: tuple[float, float]
    visibility_fraction: float
    range_m: float
    bearing: float


@dataclass
class Snapshot:
    """Either a structured view (mock mode) or opaque image bytes (remote).

    Exactly one variant is populated.
    """

    pose: AgentPose | None = None
    step_index: int = 0
    instances: list | None = None
    image_b64: str | None = None

    def __post_init__(self):
        if (self.instances is None) == (self.image_b64 is None):
            raise ValueError("snapshot must be structured xor opaque")

    def payload(self) -> dict:
        """Wire form of the structured variant."""
        if self.instances is None:
            raise ValueError("opaque snapshots serialize as image_b64, not payload")
        return {
            "pose": list(self.pose.as_list()) if self.pose else None,
            "step": self.step_index,
            "instances": [
                {
                    "id": v.instance_id,
                    "category": v.category,
                    "attributes": v.attributes,
                    "room": v.room,
                    "center": list(v.center),
                    "visibility": v.visibility_fraction,
                    "range": v.range_m,
                    "bearing": v.bearing,
                }
                for v in self.instances
            ],
        }

    @classmethod
    def from_payload(cls, data: dict) -> "Snapshot":
        pose = None
        if data.get("pose"):
            x, y, t = data["pose"]
            pose = AgentPose(x, y, t)
        return cls(
            pose=pose,
            step_index=data.get("step", 0),
            instances=[
                InstanceView(
                    instance_id=d["id"],
                    category=d["category"],
                    attributes=dict(d.get("attributes", {})),
                    room=d.get("room"),
                    center=tuple(d.get("center", (0.0, 0.0))),
                    visibility_fraction=d.get("visibility", 1.0),
                    range_m=d.get("range", 0.0),
                    bearing=d.get("bearing", 0.0),
                )
                for d in data.get("instances", [])
            ],
        )


def make_snapshot(scene: GridScene, pose: AgentPose, obs: Observation,
                  step_index: int = 0) -> Snapshot:
    """Structured snapshot of everything visible in the observation."""
    views = []
    for contact in obs.contacts:
        obj = scene.object_by_id(contact.instance_id)
        views.append(InstanceView(
            instance_id=obj.id,
            category=obj.category,
            attributes=dict(obj.attributes),
            room=scene.room_of_point(*obj.center),
            center=obj.center,
            visibility_fraction=contact.visibility_fraction,
            range_m=contact.range_m,
            bearing=contact.bearing,
        ))
    return Snapshot(pose=pose, step_index=step_index, instances=views)


@dataclass
class OracleConfig:
    mode: str = "mock"
    endpoint: str | None = None
    timeout_s: float | None = None
    retries: int = 2

    def resolved_endpoint(self) -> str:
        ep = self.endpoint or os.environ.get(ENV_ORACLE_URL)
        if not ep:
            raise ValueError(f"remote oracle needs an endpoint ({ENV_ORACLE_URL})")
        return ep.rstrip("/")

    def resolved_timeout(self) -> float:
        if self.timeout_s is not None:
            return self.timeout_s
        return int(os.environ.get(ENV_ORACLE_TIMEOUT_MS, DEFAULT_TIMEOUT_MS)) / 1000.0


# ---------------------------------------------------------------------------
# Question templates

_IRREGULAR_SINGULAR = {"shelves": "shelf", "knives": "knife", "couches": "couch"}


def singularize(noun: str) -> str:
    noun = noun.strip().lower()
    if noun in _IRREGULAR_SINGULAR:
        return _IRREGULAR_SINGULAR[noun]
    for suffix in ("ches", "shes", "sses", "xes", "zes"):
        if noun.endswith(suffix):
            return noun[:-2]
    if noun.endswith("ies") and len(noun) > 4:
        return noun[:-3] + "y"
    if noun.endswith("s") and not noun.endswith("ss"):
        return noun[:-1]
    return noun


_ARTICLE = r"(?:the|a|an)\s+"
_PATTERNS = (
    ("color", re.compile(
        rf"^what\s+colou?rs?\s+(?:is|are)\s+{_ARTICLE}(?P<np>[\w\s']+?)\??$")),
    ("room", re.compile(
        rf"^(?:what|which)\s+room\s+(?:is|are)\s+{_ARTICLE}(?P<np>[\w\s']+?)(?:\s+(?:located\s+)?in)?\??$")),
    ("location", re.compile(
        rf"^where\s+(?:is|are)\s+{_ARTICLE}(?P<np>[\w\s']+?)\??$")),
    ("what_is", re.compile(
        rf"^what\s+is\s+(?P<rel>on|under)\s+{_ARTICLE}(?P<np>[\w\s']+?)\??$")),
    ("count", re.compile(
        r"^how\s+many\s+(?P<np>[\w\s']+?)\s+are(?:\s+there)?"
        r"(?:\s+in\s+the\s+(?P<room>[\w\s']+?))?\??$")),
)


def classify_question(question: str):
    """(qtype, noun_phrase, relation, room) for a template question, where
    noun_phrase keeps any 'in the <room>' qualifier inline."""
    q = " ".join(question.strip().lower().split())
    for qtype, pat in _PATTERNS:
        mt = pat.match(q)
        if not mt:
            continue
        np_ = mt.group("np").strip()
        rel = mt.groupdict().get("rel")
        room = mt.groupdict().get("room")
        if room:
            np_ = f"{np_} in the {room}"
        return qtype, np_, rel, room
    raise UnparseableQuestionError(f"no question template matches: {question!r}")


def _parse_noun_phrase(np_: str):
    """(category, attribute qualifiers, room qualifier) from a noun phrase
    like 'red chair in the kitchen'."""
    room = None
    if " in the " in np_:
        np_, room = np_.split(" in the ", 1)
        room = room.strip()
    tokens = np_.strip().split()
    category = singularize(tokens[-1])
    quals = tuple(tokens[:-1])
    return category, quals, room


def _parse_declarative(declarative: str):
    d = " ".join(declarative.strip().lower().split())
    d = re.sub(r"^(?:the|a|an)\s+", "", d)
    return _parse_noun_phrase(d)


def _view_matches(view: InstanceView, category: str, quals, room) -> bool:
    if view.category != category:
        return False
    if room is not None and view.room != room:
        return False
    if quals:
        values = {str(v).lower() for v in view.attributes.values()}
        if not all(q in values for q in quals):
            return False
    return True


def _best_view(views: list) -> InstanceView:
    return min(views, key=lambda v: (-v.visibility_fraction, v.range_m, v.instance_id))


class MockOracle:
    """Ground-truth-backed oracles: pure functions of their inputs."""

    mode = "mock"

    def parse_question(self, question: str) -> QuestionParse:
        qtype, np_, _, _ = classify_question(question)
        category, _, _ = _parse_noun_phrase(np_)
        return QuestionParse(target_category=category, declarative=f"the {np_}")

    def itm_score(self, snapshot: Snapshot, declarative: str) -> float:
        if snapshot.instances is None:
            raise OracleError("mock itm needs a structured snapshot")
        category, quals, room = _parse_declarative(declarative)
        same_cat = [v for v in snapshot.instances if v.category == category]
        if any(_view_matches(v, category, quals, room) for v in same_cat):
            return ITM_MATCH
        if same_cat:
            return ITM_SAME_CATEGORY
        return ITM_NO_MATCH

    def vqa_answer(self, snapshot: Snapshot, question: str) -> str:
        if snapshot.instances is None:
            raise OracleError("mock vqa needs a structured snapshot")
        qtype, np_, rel, _ = classify_question(question)
        category, quals, room = _parse_noun_phrase(np_)
        if qtype == "count":
            n = sum(1 for v in snapshot.instances if v.category == category)
            return str(n) if n else "unknown"
        matching = [v for v in snapshot.instances
                    if _view_matches(v, category, quals, room)]
        if not matching:
            return "unknown"
        view = _best_view(matching)
        if qtype == "color":
            return str(view.attributes.get("color", "unknown")).lower()
        if qtype == "room":
            return view.room or "unknown"
        if qtype == "location":
            return f"room {view.room}" if view.room else "unknown"
        if qtype == "what_is":
            for other in snapshot.instances:
                if other.attributes.get(rel) == view.instance_id:
                    return other.category
            return "unknown"
        return "unknown"


class RemoteOracle:
    """Wire-protocol client. Retries connection errors, timeouts and 5xx up
    to the configured count; every failure message carries a request id."""

    mode = "remote"

    def __init__(self, config: OracleConfig):
        self.endpoint = config.resolved_endpoint()
        self.timeout_s = config.resolved_timeout()
        self.retries = config.retries
        self._session = requests.Session()
        self._rid = itertools.count(1)

    def _post(self, path: str, body: dict) -> dict:
        rid = f"req-{next(self._rid)}"
        url = self.endpoint + path
        last = None
        for _ in range(self.retries + 1):
            try:
                resp = self._session.post(url, json=body, timeout=self.timeout_s)
            except requests.RequestException as e:
                last = e
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()
                except ValueError as e:
                    raise OracleError(f"{rid}: non-JSON response from {path}") from e
            if resp.status_code >= 500:
                last = RuntimeError(f"HTTP {resp.status_code}")
                continue
            try:
                detail = resp.json().get("error", resp.text)
            except ValueError:
                detail = resp.text
            raise OracleError(f"{rid}: {path} returned HTTP {resp.status_code}: {detail}")
        raise OracleError(f"{rid}: {path} failed after {self.retries + 1} attempts: {last}")

    @staticmethod
    def _snapshot_body(snapshot: Snapshot) -> dict:
        if snapshot.image_b64 is not None:
            return {"image_b64": snapshot.image_b64}
        return {"snapshot": snapshot.payload()}

    def parse_question(self, question: str) -> QuestionParse:
        data = self._post("/v1/parse_question", {"question": question})
        category = data.get("category")
        declarative = data.get("declarative")
        if not category or not declarative:
            raise OracleError(f"malformed parse_question response: {data!r}")
        return QuestionParse(target_category=category, declarative=declarative)

    def itm_score(self, snapshot: Snapshot, declarative: str) -> float:
        body = {"declarative": declarative, **self._snapshot_body(snapshot)}
        data = self._post("/v1/itm", body)
        score = data.get("score")
        if not isinstance(score, (int, float)) or math.isnan(score):
            raise OracleError(f"malformed itm response: {data!r}")
        return float(score)

    def vqa_answer(self, snapshot: Snapshot, question: str) -> str:
        body = {"question": question, **self._snapshot_body(snapshot)}
        data = self._post("/v1/vqa", body)
        answer = data.get("answer")
        if not isinstance(answer, str):
            raise OracleError(f"malformed vqa response: {data!r}")
        return answer


def build_oracle(config: OracleConfig):
    if config.mode == "mock":
        return MockOracle()
    if config.mode == "remote":
        return RemoteOracle(config)
    raise ValueError(f"unknown oracle mode {config.mode!r}")
