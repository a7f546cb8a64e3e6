"""Agent-facing REST semantics, independent of any HTTP server.

The handlers here return (status, payload) pairs and raise ApiError for
everything abnormal, so the same code path serves real HTTP requests and
in-process callers (the feature platform forwards percepts through it).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Any, Optional

from .runtime import Runtime
from .terms import Atom, Literal, Num, Str, Term, is_var_name

PERCEPT_PREDICATE = "data"


@dataclass
class ApiError(Exception):
    status: int
    code: str
    detail: str

    def body(self) -> dict:
        return {"error": self.code, "detail": self.detail}


def scalar_to_term(value: Any) -> Term:
    """Map a JSON scalar onto a term: number -> exact decimal, boolean ->
    atoms true/false, text -> atom when it looks like one, else string."""
    if isinstance(value, bool):
        return Atom("true") if value else Atom("false")
    if isinstance(value, int):
        return Num(Decimal(value))
    if isinstance(value, float):
        try:
            dec = Decimal(str(value))
        except InvalidOperation:
            raise ApiError(422, "unmappable_value", f"number {value!r} has no exact form")
        if not dec.is_finite():
            raise ApiError(422, "unmappable_value", f"number {value!r} is not finite")
        return Num(dec)
    if isinstance(value, str):
        if value and not is_var_name(value) and value.replace("_", "a").isalnum() and value[0].isalpha():
            return Atom(value)
        return Str(value)
    raise ApiError(422, "unmappable_value", f"cannot map {type(value).__name__} to a term")


def percept_body_to_literal(body: Any) -> Literal:
    """Validate the percept body shape: a flat object with the single key
    'data' holding a scalar."""
    if not isinstance(body, dict):
        raise ApiError(400, "bad_request", "body must be a JSON object")
    if set(body.keys()) != {"data"}:
        raise ApiError(400, "bad_request", "body must contain exactly the key 'data'")
    value = body["data"]
    if isinstance(value, (dict, list)):
        raise ApiError(400, "bad_request", "'data' must be a flat scalar")
    if value is None:
        raise ApiError(422, "unmappable_value", "'data' must not be null")
    return Literal(PERCEPT_PREDICATE, (scalar_to_term(value),))


class AgentGateway:
    """REST facade over the runtime: percepts in, decisions and beliefs out.

    The gateway holds no agent state of its own; every call translates to
    one runtime operation.
    """

    def __init__(self, runtime: Runtime):
        self.runtime = runtime

    def _check_agent(self, agent: str) -> None:
        if not self.runtime.has_agent(agent):
            raise ApiError(404, "unknown_agent", f"no agent named {agent!r}")

    def post_percept(self, agent: str, body: Any) -> tuple[int, dict]:
        self._check_agent(agent)
        literal = percept_body_to_literal(body)
        receipt = self.runtime.inject_percept(agent, literal)
        return 202, {"receipt": receipt}

    # PUT is an alias: percept replacement already makes POST idempotent
    # per predicate, the verb is kept for REST-vocabulary fidelity.
    put_percept = post_percept

    def get_decision(self, agent: str) -> tuple[int, Optional[dict]]:
        self._check_agent(agent)
        record = self.runtime.read_decision(agent)
        if record is None:
            return 204, None
        return 200, {
            "decision": str(record.content),
            "seq": record.seq,
            "timestamp_ms": record.timestamp_ms,
        }

    def get_beliefs(self, agent: str) -> tuple[int, list[str]]:
        self._check_agent(agent)
        rendered = sorted(str(b) for b in self.runtime.belief_snapshot(agent))
        return 200, rendered

    def delete_percepts(self, agent: str, predicate: str) -> tuple[int, None]:
        self._check_agent(agent)
        self.runtime.retract_percepts(agent, predicate)
        return 204, None
