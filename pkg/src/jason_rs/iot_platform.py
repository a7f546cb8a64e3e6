"""Connected-object platform: session login, feature CRUD, choreography links.

Features model connected objects. A choreography link binds a feature to
exactly one agent; every value written to a linked feature is forwarded as
a percept through the agent gateway, on the caller's thread, without
waiting for the agent to react.
"""

from __future__ import annotations

import logging
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from .gateway import AgentGateway, ApiError

log = logging.getLogger("jason_rs.platform")

FEATURE_TYPES = ("accelerometer", "button", "buzzer", "gauge", "gps", "switch")
NUMBER_FEATURES = ("accelerometer", "buzzer", "gauge", "gps")
BOOLEAN_FEATURES = ("button", "switch")

_FEATURE_FIELDS = {"name": str, "path": str, "type": str, "details": str,
                   "widget": str, "mqtt": bool}

DEFAULT_SESSION_TTL_S = 3600.0


@dataclass
class Session:
    token: str
    username: str
    service: str
    created_s: float


@dataclass
class Feature:
    id: int
    name: str
    path: str
    type: str
    details: str
    widget: str
    mqtt: bool  # stored, never acted on
    state: Any = None


@dataclass(frozen=True)
class ChoreographyLink:
    id: int
    source_feature: int
    target_agent: str


def load_accounts(path: "str | Path") -> dict[str, tuple[str, str]]:
    """Accounts file: one username:password:service triple per line.
    Blank lines and lines starting with '#' are skipped."""
    accounts: dict[str, tuple[str, str]] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(":")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected username:password:service")
        username, password, service = parts
        accounts[username] = (password, service)
    return accounts


class IotPlatform:
    """In-memory object platform bound to one agent runtime."""

    def __init__(
        self,
        gateway: AgentGateway,
        accounts: dict[str, tuple[str, str]],
        session_ttl_s: float = DEFAULT_SESSION_TTL_S,
        clock: Callable[[], float] | None = None,
    ):
        self.gateway = gateway
        self.accounts = dict(accounts)
        self.session_ttl_s = session_ttl_s
        self._clock = clock or time.time
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._features: dict[int, Feature] = {}
        self._links: dict[int, ChoreographyLink] = {}
        self._link_by_feature: dict[int, int] = {}
        self._next_feature_id = 0
        self._next_link_id = 0

    # -- sessions -----------------------------------------------------------

    def login(self, body: Any) -> tuple[int, dict]:
        if not isinstance(body, dict) or set(body.keys()) != {"username", "password", "service"}:
            raise ApiError(400, "bad_request",
                           "body must contain exactly username, password and service")
        if not all(isinstance(v, str) for v in body.values()):
            raise ApiError(400, "bad_request", "username, password and service must be text")
        entry = self.accounts.get(body["username"])
        if entry is None or not secrets.compare_digest(entry[0], body["password"]) \
                or entry[1] != body["service"]:
            raise ApiError(401, "unauthorized", "bad credentials")
        token = secrets.token_hex(16)  # 128 bits
        with self._lock:
            self._sessions[token] = Session(token, body["username"], body["service"],
                                            self._clock())
        log.info("login %s@%s", body["username"], body["service"])
        return 200, {"token": token}

    def _require_session(self, token: Optional[str]) -> Session:
        if not token:
            raise ApiError(401, "unauthorized", "missing bearer token")
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                raise ApiError(401, "unauthorized", "unknown token")
            if self._clock() - session.created_s > self.session_ttl_s:
                del self._sessions[token]
                raise ApiError(401, "unauthorized", "session expired")
            return session

    # -- features -------------------------------------------------------------

    def create_feature(self, token: Optional[str], body: Any) -> tuple[int, dict, dict]:
        self._require_session(token)
        if not isinstance(body, dict) or set(body.keys()) != set(_FEATURE_FIELDS):
            raise ApiError(400, "bad_request",
                           "body must contain exactly: " + ", ".join(sorted(_FEATURE_FIELDS)))
        for key, expected in _FEATURE_FIELDS.items():
            if not isinstance(body[key], expected):
                raise ApiError(400, "bad_request", f"field {key!r} must be {expected.__name__}")
        if body["type"] not in FEATURE_TYPES:
            raise ApiError(422, "unknown_type",
                           f"type must be one of: {', '.join(FEATURE_TYPES)}")
        with self._lock:
            self._next_feature_id += 1  # ids strictly increase, never reused
            feature = Feature(id=self._next_feature_id, **body)
            self._features[feature.id] = feature
        log.info("feature %d created (%s, type %s)", feature.id, feature.name, feature.type)
        return 201, {"id": feature.id}, {"Location": f"/feature/{feature.id}"}

    def update_feature(self, token: Optional[str], feature_id: int, body: Any) -> tuple[int, dict]:
        self._require_session(token)
        if not isinstance(body, dict) or set(body.keys()) != {"data"}:
            raise ApiError(400, "bad_request", "body must contain exactly the key 'data'")
        value = body["data"]
        with self._lock:
            feature = self._features.get(feature_id)
            if feature is None:
                raise ApiError(404, "unknown_feature", f"no feature {feature_id}")
            self._check_value_type(feature, value)
            feature.state = value
            link_id = self._link_by_feature.get(feature_id)
            link = self._links.get(link_id) if link_id is not None else None
        if link is not None:
            # same semantics as POSTing the percept to the agent endpoint;
            # fire-and-forget: the agent reacts in its own reasoning cycles
            self.gateway.post_percept(link.target_agent, {"data": value})
        return 202, {"id": feature_id, "state": value}

    @staticmethod
    def _check_value_type(feature: Feature, value: Any) -> None:
        if isinstance(value, bool):
            ok = feature.type in BOOLEAN_FEATURES
        elif isinstance(value, (int, float)):
            ok = feature.type in NUMBER_FEATURES
        else:
            ok = False
        if not ok:
            expected = "a boolean" if feature.type in BOOLEAN_FEATURES else "a number"
            raise ApiError(422, "type_mismatch",
                           f"feature {feature.id} is a {feature.type}; 'data' must be {expected}")

    def delete_feature(self, token: Optional[str], feature_id: int) -> tuple[int, None]:
        self._require_session(token)
        with self._lock:
            feature = self._features.pop(feature_id, None)
            link_id = self._link_by_feature.pop(feature_id, None)
            if link_id is not None:
                self._links.pop(link_id, None)
        if feature is not None:
            log.info("feature %d deleted", feature_id)
        return 204, None  # idempotent: deleting twice is still 204

    def get_feature(self, feature_id: int) -> Optional[Feature]:
        with self._lock:
            return self._features.get(feature_id)

    # -- choreography links -----------------------------------------------------

    def create_link(self, body: Any) -> tuple[int, dict]:
        if not isinstance(body, dict) or set(body.keys()) != {"source_feature", "target_agent"}:
            raise ApiError(400, "bad_request",
                           "body must contain exactly source_feature and target_agent")
        feature_id = body["source_feature"]
        agent = body["target_agent"]
        if not isinstance(feature_id, int) or isinstance(feature_id, bool) \
                or not isinstance(agent, str):
            raise ApiError(400, "bad_request",
                           "source_feature must be an integer, target_agent text")
        if not self.gateway.runtime.has_agent(agent):
            raise ApiError(404, "unknown_agent", f"no agent named {agent!r}")
        with self._lock:
            if feature_id not in self._features:
                raise ApiError(404, "unknown_feature", f"no feature {feature_id}")
            if feature_id in self._link_by_feature:
                raise ApiError(409, "already_linked",
                               f"feature {feature_id} is already bound to an agent")
            self._next_link_id += 1
            link = ChoreographyLink(self._next_link_id, feature_id, agent)
            self._links[link.id] = link
            self._link_by_feature[feature_id] = link.id
        log.info("link %d: feature %d -> agent %s", link.id, feature_id, agent)
        return 201, {"id": link.id}

    def links(self) -> list[ChoreographyLink]:
        with self._lock:
            return list(self._links.values())
