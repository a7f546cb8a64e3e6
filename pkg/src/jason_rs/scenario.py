"""Waste-disposal allocation scenario.

Evacuator agents each carry a base cost; sensor features stream load values
to them. An evacuator reports its effective cost (base plus latest load) to
the decider, which publishes allocate(<name>) for the cheapest evacuator,
breaking ties by declaration order.

run_scenario() drives the whole stack in-process with an explicit, fully
deterministic schedule, which is what makes decision traces reproducible
byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .parser import parse_program
from .plans import AgentProgram
from .runtime import DecisionRecord
from .server import AppStack


@dataclass(frozen=True)
class Evacuator:
    name: str
    base_cost: int


@dataclass(frozen=True)
class ScenarioSpec:
    evacuators: tuple[Evacuator, ...]
    sensor_bindings: tuple[tuple[int, str], ...]  # feature id -> evacuator name
    decider: str = "decider"

    def __post_init__(self) -> None:
        if len(self.evacuators) < 2:
            raise ValueError("a scenario needs at least 2 evacuators")
        names = [e.name for e in self.evacuators]
        if len(set(names)) != len(names):
            raise ValueError("evacuator names must be distinct")
        if self.decider in names:
            raise ValueError("the decider cannot also be an evacuator")
        known = set(names)
        for _, target in self.sensor_bindings:
            if target not in known:
                raise ValueError(f"sensor binding targets unknown evacuator {target!r}")

    @staticmethod
    def from_json(data: Any) -> "ScenarioSpec":
        evacuators = tuple(
            Evacuator(e["name"], int(e["base_cost"])) for e in data["evacuators"]
        )
        bindings = tuple(
            (int(b["feature"]), b["evacuator"]) for b in data.get("sensor_bindings", ())
        )
        return ScenarioSpec(evacuators, bindings, data.get("decider", "decider"))

    @staticmethod
    def from_file(path: "str | Path") -> "ScenarioSpec":
        return ScenarioSpec.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def evacuator_source(name: str, base_cost: int, decider: str) -> str:
    """Agent program for one evacuator: report base cost on boot, report
    base plus latest load on every sensor reading."""
    return (
        f"base_cost({base_cost}).\n"
        f"+base_cost(C) : true <- .send({decider}, tell, cost({name}, C)).\n"
        f"+data(X) : base_cost(C) <- ?(E = C + X); .send({decider}, tell, cost({name}, E)).\n"
    )


def decider_source(evacuator_names: Sequence[str]) -> str:
    """Decider program: track the latest reported cost per evacuator, wait
    until every evacuator has reported, then keep the published allocation
    pointed at the cheapest one (declaration order breaks ties)."""
    lines = []
    names = list(evacuator_names)
    for i, earlier in enumerate(names):
        for later in names[i + 1:]:
            lines.append(f"prec({earlier},{later}).")
    for name in names:
        lines.append(f"expected({name}).")
    lines.append("all_reported :- not (expected(E) & not latest_cost(E, C)).")
    lines.append(
        "cheapest(A) :- latest_cost(A,C)"
        " & not (latest_cost(B,D) & D < C)"
        " & not (latest_cost(B2,C2) & C2 == C & B2 \\== A & prec(B2,A))."
    )
    # each report is consumed and retracted so that a re-report of the same
    # value is a fresh belief again (set semantics would swallow its event)
    lines.append("+cost(E, C) : latest_cost(E, Old)"
                 " <- -cost(E, C); -latest_cost(E, Old); +latest_cost(E, C); !decide.")
    lines.append("+cost(E, C) : true <- -cost(E, C); +latest_cost(E, C); !decide.")
    lines.append("+!decide : all_reported & cheapest(A) & announced(A).")
    lines.append("+!decide : all_reported & cheapest(A) & announced(B)"
                 " <- -announced(B); +announced(A); .publish_decision(allocate(A)).")
    lines.append("+!decide : all_reported & cheapest(A)"
                 " <- +announced(A); .publish_decision(allocate(A)).")
    lines.append("+!decide.")
    return "\n".join(lines) + "\n"


def scenario_programs(spec: ScenarioSpec) -> dict[str, AgentProgram]:
    programs = {
        spec.decider: parse_program(decider_source([e.name for e in spec.evacuators]))
    }
    for evac in spec.evacuators:
        programs[evac.name] = parse_program(
            evacuator_source(evac.name, evac.base_cost, spec.decider)
        )
    return programs


def effective_costs(
    spec: ScenarioSpec, latest_loads: "dict[str, int | float]"
) -> dict[str, Any]:
    """Effective cost per evacuator: base cost plus its latest load value."""
    return {
        e.name: e.base_cost + latest_loads.get(e.name, 0) for e in spec.evacuators
    }


def expected_allocation(spec: ScenarioSpec, latest_loads: "dict[str, int | float]") -> str:
    """Declaration order resolves ties, so min() over (cost, index) is exact."""
    costs = effective_costs(spec, latest_loads)
    best = min(enumerate(spec.evacuators), key=lambda pair: (costs[pair[1].name], pair[0]))
    return best[1].name


@dataclass
class ScenarioRun:
    spec: ScenarioSpec
    decisions: list[tuple[str, DecisionRecord]] = field(default_factory=list)
    cycles_used: int = 0
    feature_ids: dict[int, str] = field(default_factory=dict)

    def decision_trace(self) -> list[str]:
        return [
            f"{agent} {record.seq} {record.content} {record.timestamp_ms}"
            for agent, record in self.decisions
        ]

    def final_decision(self) -> "str | None":
        if not self.decisions:
            return None
        return str(self.decisions[-1][1].content)


class _CountingClock:
    """Deterministic millisecond clock: advances 1 ms per reading."""

    def __init__(self) -> None:
        self.now = 0

    def __call__(self) -> int:
        self.now += 1
        return self.now


SCENARIO_ACCOUNT = ("operator", "operator-secret", "im.bec3.com")


def build_scenario_stack(
    spec: ScenarioSpec, deterministic_clock: bool = True
) -> tuple[AppStack, str]:
    """Assemble runtime + gateway + platform with the scenario agents loaded
    and one gauge feature per sensor binding, linked to its evacuator.
    Returns the stack and a logged-in session token."""
    accounts = {SCENARIO_ACCOUNT[0]: (SCENARIO_ACCOUNT[1], SCENARIO_ACCOUNT[2])}
    clock = _CountingClock() if deterministic_clock else None
    stack = AppStack(scenario_programs(spec), accounts, clock=clock)
    _, login_body = stack.platform.login({
        "username": SCENARIO_ACCOUNT[0],
        "password": SCENARIO_ACCOUNT[1],
        "service": SCENARIO_ACCOUNT[2],
    })
    token = login_body["token"]
    for feature_id, evacuator in spec.sensor_bindings:
        _, created, _ = stack.platform.create_feature(token, {
            "name": f"sensor-{evacuator}",
            "path": f"sensors/{evacuator}",
            "type": "gauge",
            "details": f"load sensor for {evacuator}",
            "widget": "none",
            "mqtt": False,
        })
        if created["id"] != feature_id:
            raise ValueError(
                f"sensor binding declares feature {feature_id} but the platform "
                f"assigned {created['id']}; declare ids 1..n in order"
            )
        stack.platform.create_link({
            "source_feature": feature_id,
            "target_agent": evacuator,
        })
    return stack, token


def run_scenario(
    spec: ScenarioSpec,
    percept_script: Iterable[tuple[int, "int | float"]] = (),
    max_cycles: int = 100_000,
) -> ScenarioRun:
    """Boot the stack, push each scripted (feature id, value) through the
    platform, and run to quiescence after every step. Returns the decision
    trace; the final decision allocates the evacuator with minimal
    effective cost."""
    stack, token = build_scenario_stack(spec)
    run = ScenarioRun(spec=spec, feature_ids=dict(spec.sensor_bindings))
    stack.runtime.add_decision_listener(
        lambda agent, record: run.decisions.append((agent, record))
    )
    run.cycles_used += stack.runtime.run_until_quiescent(max_cycles)
    for feature_id, value in percept_script:
        stack.platform.update_feature(token, feature_id, {"data": value})
        run.cycles_used += stack.runtime.run_until_quiescent(max_cycles)
    return run
