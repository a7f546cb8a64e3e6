"""Per-agent BDI reasoning: belief revision, event handling, plan selection
and intention execution.

Each agent is a single-writer state machine. External inputs (percepts,
messages) are applied synchronously under the runtime lock, so they are
totally ordered against reasoning cycles; all other mutation happens inside
reasoning_cycle. Scheduling is deliberately simple and reproducible: one
event handled and at most one intention step executed per cycle, intentions
served round-robin, and an intention created by a cycle only becomes
runnable on the next one.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from .engine import (
    EMPTY_SUBSTITUTION,
    EngineError,
    FactStore,
    Substitution,
    match_literal,
    solve_one,
)
from .plans import (
    AchieveStep,
    ActionStep,
    AddBeliefStep,
    AgentProgram,
    DelBeliefStep,
    ExternalActionStep,
    Plan,
    PublishDecisionStep,
    SendStep,
    TestStep,
    Trigger,
    TriggerKind,
)
from .terms import Atom, Literal, Rule, Term

log = logging.getLogger("jason_rs.runtime")

SOURCE_SELF = Atom("self")
SOURCE_PERCEPT = Atom("percept")


class RuntimeError_(Exception):
    pass


class DuplicateAgentName(RuntimeError_):
    pass


class UnknownAgent(RuntimeError_):
    pass


class NonGroundPercept(RuntimeError_):
    pass


class QuiescenceTimeout(RuntimeError_):
    pass


# --- events -------------------------------------------------------------------

@dataclass(frozen=True)
class PerceptOrigin:
    pass


@dataclass(frozen=True)
class InternalOrigin:
    intention_id: Optional[int]  # None for boot-time initial beliefs


@dataclass(frozen=True)
class MessageOrigin:
    sender: str


Origin = Union[PerceptOrigin, InternalOrigin, MessageOrigin]

PERCEPT = PerceptOrigin()


@dataclass(frozen=True)
class Event:
    trigger: Trigger
    origin: "PerceptOrigin | InternalOrigin | MessageOrigin"

    def __str__(self) -> str:
        return str(self.trigger)


@dataclass
class Frame:
    plan: Plan
    step: int
    subst: Substitution
    awaiting: bool = False  # an achieve step posted a subgoal not yet finished


@dataclass
class Intention:
    id: int
    frames: list[Frame]
    born_cycle: int

    def top(self) -> Frame:
        return self.frames[-1]


@dataclass(frozen=True)
class DecisionRecord:
    content: Term
    seq: int
    timestamp_ms: int


@dataclass
class CycleReport:
    """What one reasoning cycle did; a no-op cycle has all fields empty."""

    agent: str
    cycle: int
    event: Optional[str] = None
    plan_fired: Optional[str] = None
    step_executed: Optional[str] = None
    notes: list[str] = field(default_factory=list)

    def is_noop(self) -> bool:
        return self.event is None and self.step_executed is None and not self.notes


class BeliefBase:
    """Insertion-ordered set of ground literals plus the program's rules."""

    def __init__(self, rules: Iterable[Rule] = ()):
        self.facts = FactStore()
        self.rules = tuple(rules)

    def add(self, lit: Literal) -> bool:
        return self.facts.add(lit)

    def remove(self, lit: Literal) -> bool:
        return self.facts.discard(lit)

    def find(self, pattern: Literal) -> list[Literal]:
        """Stored literals matching pattern (annotation subset semantics)."""
        return [
            fact
            for fact in self.facts.candidates(pattern)
            if match_literal(pattern, fact) is not None
        ]

    def snapshot(self) -> list[Literal]:
        return list(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, lit: Literal) -> bool:
        return lit in self.facts


class Agent:
    """Mutable agent state; touched only while holding the runtime lock."""

    def __init__(self, name: str, program: AgentProgram):
        self.name = name
        self.program = program
        self.beliefs = BeliefBase(program.rules)
        self.plans = tuple(program.plans)
        self.events: deque[Event] = deque()
        self.mailbox: deque[tuple[str, str, Literal]] = deque()
        self.intentions: list[Intention] = []
        self.decision: Optional[DecisionRecord] = None
        self.decision_seq = 0
        self.percept_seq = 0
        self.cycle_count = 0
        self._intention_ids = 0
        self._rr_next = 0

    def next_intention_id(self) -> int:
        self._intention_ids += 1
        return self._intention_ids

    def has_work(self) -> bool:
        return bool(self.events or self.intentions or self.mailbox)


Clock = Callable[[], int]
DecisionListener = Callable[[str, DecisionRecord], None]
EventListener = Callable[[str, Event], None]
ExternalAction = Callable[[str, tuple[Term, ...]], None]


def _wall_clock_ms() -> int:
    return int(time.time() * 1000)


class Runtime:
    """Holds the agents of one deployment and drives their reasoning.

    A single re-entrant lock serializes all state changes, which is what
    keeps every agent single-writer even when percepts arrive from many
    HTTP handler threads at once.
    """

    def __init__(self, clock: Clock | None = None):
        self._lock = threading.RLock()
        self.work_available = threading.Condition(self._lock)
        self._agents: dict[str, Agent] = {}
        self._clock: Clock = clock or _wall_clock_ms
        self._external_actions: dict[str, ExternalAction] = {}
        self._decision_listeners: list[DecisionListener] = []
        self._event_listeners: list[EventListener] = []

    # -- registration ------------------------------------------------------

    def create_agent(self, name: str, program: AgentProgram) -> Agent:
        """Register an agent; its initial beliefs are installed immediately,
        each raising an add-belief event annotated source(self)."""
        with self._lock:
            if name in self._agents:
                raise DuplicateAgentName(name)
            agent = Agent(name, program)
            self._agents[name] = agent
            for belief in program.initial_beliefs:
                stored = belief.with_source(SOURCE_SELF)
                if agent.beliefs.add(stored):
                    self._raise_event(
                        agent,
                        Event(Trigger(TriggerKind.ADD_BELIEF, stored), InternalOrigin(None)),
                    )
            self.work_available.notify_all()
            return agent

    def agent_names(self) -> list[str]:
        with self._lock:
            return list(self._agents)

    def has_agent(self, name: str) -> bool:
        with self._lock:
            return name in self._agents

    def _agent(self, name: str) -> Agent:
        agent = self._agents.get(name)
        if agent is None:
            raise UnknownAgent(name)
        return agent

    def register_external_action(self, name: str, action: ExternalAction) -> None:
        with self._lock:
            self._external_actions[name] = action

    def add_decision_listener(self, listener: DecisionListener) -> None:
        with self._lock:
            self._decision_listeners.append(listener)

    def add_event_listener(self, listener: EventListener) -> None:
        with self._lock:
            self._event_listeners.append(listener)

    # -- inputs --------------------------------------------------------------

    def inject_percept(self, name: str, literal: Literal) -> int:
        """Install a percept, replacing any differing percept of the same
        predicate and arity (objects stream readings; stale values must go).
        Returns the agent's intake receipt number."""
        with self._lock:
            agent = self._agent(name)
            if not literal.is_ground():
                raise NonGroundPercept(str(literal))
            incoming = literal.with_source(SOURCE_PERCEPT)
            agent.percept_seq += 1
            receipt = agent.percept_seq
            if incoming in agent.beliefs:
                return receipt  # set semantics: no change, no event
            for old in self._percept_siblings(agent, incoming):
                agent.beliefs.remove(old)
                self._raise_event(
                    agent, Event(Trigger(TriggerKind.DEL_BELIEF, old), PERCEPT)
                )
            agent.beliefs.add(incoming)
            self._raise_event(
                agent, Event(Trigger(TriggerKind.ADD_BELIEF, incoming), PERCEPT)
            )
            self.work_available.notify_all()
            return receipt

    def _percept_siblings(self, agent: Agent, incoming: Literal) -> list[Literal]:
        """Existing percept-sourced literals with the incoming predicate+arity."""
        return [
            fact
            for fact in agent.beliefs.facts.candidates(incoming)
            if fact != incoming and fact.source() == SOURCE_PERCEPT
        ]

    def retract_percepts(self, name: str, predicate: str) -> list[Literal]:
        """Drop every percept-sourced literal with the given predicate."""
        with self._lock:
            agent = self._agent(name)
            victims = [
                fact
                for fact in agent.beliefs.snapshot()
                if fact.predicate == predicate and fact.source() == SOURCE_PERCEPT
            ]
            for fact in victims:
                agent.beliefs.remove(fact)
                self._raise_event(
                    agent, Event(Trigger(TriggerKind.DEL_BELIEF, fact), PERCEPT)
                )
            if victims:
                self.work_available.notify_all()
            return victims

    def deliver_message(self, to: str, sender: str, performative: str, content: Literal) -> None:
        """tell: content becomes a belief annotated source(sender), raising
        an add event; achieve: an add-goal event is queued."""
        with self._lock:
            agent = self._agent(to)
            if performative not in ("tell", "achieve"):
                raise ValueError(f"unsupported performative {performative!r}")
            agent.mailbox.append((sender, performative, content))
            self._drain_mailbox(agent)
            self.work_available.notify_all()

    def _drain_mailbox(self, agent: Agent) -> None:
        while agent.mailbox:
            sender, performative, content = agent.mailbox.popleft()
            if performative == "tell":
                stored = content.with_source(Atom(sender))
                if agent.beliefs.add(stored):
                    self._raise_event(
                        agent,
                        Event(Trigger(TriggerKind.ADD_BELIEF, stored), MessageOrigin(sender)),
                    )
            else:
                self._raise_event(
                    agent,
                    Event(Trigger(TriggerKind.ADD_GOAL, content), MessageOrigin(sender)),
                )

    # -- observation ---------------------------------------------------------

    def read_decision(self, name: str) -> Optional[DecisionRecord]:
        with self._lock:
            return self._agent(name).decision

    def belief_snapshot(self, name: str) -> list[Literal]:
        with self._lock:
            return self._agent(name).beliefs.snapshot()

    def pending_events(self, name: str) -> list[Event]:
        with self._lock:
            return list(self._agent(name).events)

    # -- reasoning -------------------------------------------------------------

    def reasoning_cycle(self, name: str) -> CycleReport:
        """One cycle: handle the oldest event (select the first applicable
        plan in source order, first context solution), then run exactly one
        step of the round-robin-selected intention."""
        with self._lock:
            agent = self._agent(name)
            agent.cycle_count += 1
            report = CycleReport(agent=name, cycle=agent.cycle_count)
            if agent.events:
                event = agent.events.popleft()
                report.event = str(event)
                self._handle_event(agent, event, report)
            self._execute_step(agent, report)
            if not report.is_noop():
                log.debug("%s cycle %d: event=%s plan=%s step=%s %s",
                          name, report.cycle, report.event, report.plan_fired,
                          report.step_executed, "; ".join(report.notes))
            return report

    def run_until_quiescent(self, max_cycles: int, agents: Iterable[str] | None = None) -> int:
        """Cycle agents round-robin until every queue is empty and every
        intention retired. Returns reasoning cycles consumed."""
        if max_cycles <= 0:
            raise ValueError("max_cycles must be positive")
        with self._lock:
            names = list(agents) if agents is not None else list(self._agents)
            for n in names:
                self._agent(n)
            used = 0
            while True:
                busy = [n for n in names if self._agents[n].has_work()]
                if not busy:
                    return used
                for n in busy:
                    if used >= max_cycles:
                        raise QuiescenceTimeout(
                            f"{used} cycles used, work still pending on: "
                            + ", ".join(m for m in names if self._agents[m].has_work())
                        )
                    self.reasoning_cycle(n)
                    used += 1

    def has_work(self) -> bool:
        with self._lock:
            return any(a.has_work() for a in self._agents.values())

    def cycle_busy_agents(self) -> int:
        """One reasoning cycle for every agent with pending work; used by
        background schedulers. Returns how many agents were cycled."""
        with self._lock:
            busy = [n for n, a in self._agents.items() if a.has_work()]
            for n in busy:
                self.reasoning_cycle(n)
            return len(busy)

    # -- cycle internals -----------------------------------------------------

    def _raise_event(self, agent: Agent, event: Event) -> None:
        agent.events.append(event)
        for listener in self._event_listeners:
            listener(agent.name, event)

    def _handle_event(self, agent: Agent, event: Event, report: CycleReport) -> None:
        selected = self._select_plan(agent, event)
        if selected is not None:
            plan, subst = selected
            report.plan_fired = str(plan.trigger)
            frame = Frame(plan, 0, subst)
            if (
                event.trigger.kind.is_goal
                and isinstance(event.origin, InternalOrigin)
                and event.origin.intention_id is not None
            ):
                intention = self._find_intention(agent, event.origin.intention_id)
                if intention is None:
                    # parent dropped in the meantime; run the plan on its own
                    self._push_intention(agent, frame)
                else:
                    intention.frames.append(frame)
                    self._settle_frames(agent, intention)
            else:
                self._push_intention(agent, frame)
            return
        # no applicable plan
        if event.trigger.kind.is_goal:
            report.notes.append(f"no applicable plan for goal {event.trigger}")
            log.warning("%s: no applicable plan for %s", agent.name, event.trigger)
            if event.trigger.kind == TriggerKind.ADD_GOAL:
                self._fail_goal(agent, event, report)
        else:
            report.notes.append(f"discarded {event.trigger}")
            log.debug("%s: no plan for belief event %s, discarded", agent.name, event.trigger)

    def _fail_goal(self, agent: Agent, event: Event, report: CycleReport) -> None:
        """An unachievable add-goal: the triggering intention is dropped;
        a matching del-goal recovery plan, if any, runs as a fresh intention."""
        failure = Event(Trigger(TriggerKind.DEL_GOAL, event.trigger.literal), event.origin)
        recovery = self._select_plan(agent, failure)
        if recovery is not None:
            plan, subst = recovery
            report.notes.append(f"recovery plan {plan.trigger} adopted")
            self._push_intention(agent, Frame(plan, 0, subst))
        if isinstance(event.origin, InternalOrigin) and event.origin.intention_id is not None:
            dropped = self._drop_intention(agent, event.origin.intention_id)
            if dropped:
                report.notes.append(f"intention {event.origin.intention_id} failed")
                log.warning("%s: intention %d dropped (goal %s failed)",
                            agent.name, event.origin.intention_id, event.trigger.literal)

    def _select_plan(self, agent: Agent, event: Event) -> Optional[tuple[Plan, Substitution]]:
        for plan in agent.plans:
            if plan.trigger.kind != event.trigger.kind:
                continue
            bound = match_literal(plan.trigger.literal, event.trigger.literal)
            if bound is None:
                continue
            try:
                solution = solve_one(plan.context, agent.beliefs.facts,
                                     agent.beliefs.rules, bound)
            except EngineError as exc:
                log.warning("%s: context of %s errored: %s", agent.name, plan.trigger, exc)
                continue
            if solution is not None:
                return plan, solution
        return None

    def _push_intention(self, agent: Agent, frame: Frame) -> None:
        intention = Intention(agent.next_intention_id(), [frame], agent.cycle_count)
        agent.intentions.append(intention)
        self._settle_frames(agent, intention)

    def _find_intention(self, agent: Agent, intention_id: int) -> Optional[Intention]:
        for intention in agent.intentions:
            if intention.id == intention_id:
                return intention
        return None

    def _drop_intention(self, agent: Agent, intention_id: int) -> bool:
        intention = self._find_intention(agent, intention_id)
        if intention is None:
            return False
        agent.intentions.remove(intention)
        return True

    def _settle_frames(self, agent: Agent, intention: Intention) -> None:
        """Pop exhausted frames; resume parents past their achieve step.
        Retires the intention when the stack empties."""
        while intention.frames and intention.top().step >= len(intention.top().plan.body):
            intention.frames.pop()
            if intention.frames:
                parent = intention.top()
                parent.awaiting = False
                parent.step += 1
        if not intention.frames and intention in agent.intentions:
            agent.intentions.remove(intention)

    def _execute_step(self, agent: Agent, report: CycleReport) -> None:
        runnable = [
            i for i in agent.intentions
            if i.frames and not i.top().awaiting and i.born_cycle < agent.cycle_count
        ]
        if not runnable:
            return
        chosen = runnable[agent._rr_next % len(runnable)]
        agent._rr_next += 1
        frame = chosen.top()
        step = frame.plan.body[frame.step]
        report.step_executed = str(step)
        try:
            advanced = self._perform(agent, chosen, frame, step, report)
        except RuntimeError_ as exc:
            report.notes.append(f"step failed: {exc}")
            log.warning("%s: step %s failed (%s); intention %d dropped",
                        agent.name, step, exc, chosen.id)
            self._drop_intention(agent, chosen.id)
            return
        if advanced:
            frame.step += 1
        self._settle_frames(agent, chosen)

    def _perform(self, agent: Agent, intention: Intention, frame: Frame,
                 step: ActionStep, report: CycleReport) -> bool:
        """Run one body step. Returns False when the frame must not advance
        yet (achieve steps park the frame until the subgoal finishes)."""
        subst = frame.subst
        if isinstance(step, AddBeliefStep):
            lit = subst.apply_literal(step.literal).with_source(SOURCE_SELF)
            if not lit.is_ground():
                raise RuntimeError_(f"belief addition {lit} not ground")
            if agent.beliefs.add(lit):
                self._raise_event(
                    agent,
                    Event(Trigger(TriggerKind.ADD_BELIEF, lit), InternalOrigin(intention.id)),
                )
            return True
        if isinstance(step, DelBeliefStep):
            pattern = subst.apply_literal(step.literal)
            matches = agent.beliefs.find(pattern)
            if not matches:
                report.notes.append(f"nothing to retract for {pattern}")
                log.debug("%s: -%s removed nothing", agent.name, pattern)
                return True
            victim = matches[0]
            agent.beliefs.remove(victim)
            self._raise_event(
                agent,
                Event(Trigger(TriggerKind.DEL_BELIEF, victim), InternalOrigin(intention.id)),
            )
            return True
        if isinstance(step, AchieveStep):
            goal = subst.apply_literal(step.goal)
            frame.awaiting = True
            self._raise_event(
                agent,
                Event(Trigger(TriggerKind.ADD_GOAL, goal), InternalOrigin(intention.id)),
            )
            return False
        if isinstance(step, TestStep):
            goal = subst.apply_formula(step.goal)
            solution = solve_one(goal, agent.beliefs.facts, agent.beliefs.rules, subst)
            if solution is None:
                raise RuntimeError_(f"test goal {goal} has no solution")
            frame.subst = solution
            return True
        if isinstance(step, SendStep):
            content = subst.apply_literal(step.content)
            recipient = self._agents.get(step.to)
            if recipient is None:
                raise UnknownAgent(step.to)
            self.deliver_message(step.to, agent.name, step.performative, content)
            return True
        if isinstance(step, PublishDecisionStep):
            content = subst.apply(step.content)
            agent.decision_seq += 1
            record = DecisionRecord(content, agent.decision_seq, self._clock())
            agent.decision = record
            for listener in self._decision_listeners:
                listener(agent.name, record)
            log.info("%s: decision #%d %s", agent.name, record.seq, content)
            return True
        if isinstance(step, ExternalActionStep):
            args = tuple(subst.apply(a) for a in step.args)
            action = self._external_actions.get(step.name)
            if action is None:
                report.notes.append(f"external action {step.name} unregistered")
                log.info("%s: external action %s%s not registered, skipped",
                         agent.name, step.name, args)
                return True
            action(agent.name, args)
            return True
        raise TypeError(f"unknown action step {step!r}")  # pragma: no cover
