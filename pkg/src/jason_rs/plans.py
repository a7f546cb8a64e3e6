"""Plans, triggers, body steps and whole agent programs."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

from .terms import ContextFormula, Literal, Rule, Term, TRUE, TrueFormula


class TriggerKind(enum.Enum):
    ADD_BELIEF = "+"
    DEL_BELIEF = "-"
    ADD_GOAL = "+!"
    DEL_GOAL = "-!"

    @property
    def is_goal(self) -> bool:
        return self in (TriggerKind.ADD_GOAL, TriggerKind.DEL_GOAL)


@dataclass(frozen=True)
class Trigger:
    kind: TriggerKind
    literal: Literal

    def __str__(self) -> str:
        return f"{self.kind.value}{self.literal}"


@dataclass(frozen=True)
class AddBeliefStep:
    literal: Literal

    def __str__(self) -> str:
        return f"+{self.literal}"


@dataclass(frozen=True)
class DelBeliefStep:
    literal: Literal

    def __str__(self) -> str:
        return f"-{self.literal}"


@dataclass(frozen=True)
class AchieveStep:
    goal: Literal

    def __str__(self) -> str:
        return f"!{self.goal}"


@dataclass(frozen=True)
class TestStep:
    __test__ = False  # not a pytest class, despite the name

    goal: ContextFormula

    def __str__(self) -> str:
        return f"?({self.goal})"


@dataclass(frozen=True)
class SendStep:
    to: str
    performative: str  # tell | achieve
    content: Literal

    def __str__(self) -> str:
        return f".send({self.to},{self.performative},{self.content})"


@dataclass(frozen=True)
class PublishDecisionStep:
    content: Term

    def __str__(self) -> str:
        return f".publish_decision({self.content})"


@dataclass(frozen=True)
class ExternalActionStep:
    name: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        if self.args:
            return f"{self.name}({','.join(str(a) for a in self.args)})"
        return self.name


ActionStep = Union[
    AddBeliefStep,
    DelBeliefStep,
    AchieveStep,
    TestStep,
    SendStep,
    PublishDecisionStep,
    ExternalActionStep,
]

PERFORMATIVES = ("tell", "achieve")


@dataclass(frozen=True)
class Plan:
    """Triggering event + applicability context + body. Body may be empty."""

    trigger: Trigger
    context: ContextFormula = TRUE
    body: tuple[ActionStep, ...] = ()

    def __str__(self) -> str:
        parts = [str(self.trigger)]
        if not isinstance(self.context, TrueFormula):
            parts.append(f" : {self.context}")
        if self.body:
            parts.append(" <- " + "; ".join(str(s) for s in self.body))
        return "".join(parts) + "."


@dataclass(frozen=True)
class AgentProgram:
    """Parsed agent source. Plan and rule order is preserved exactly:
    source order is the tie-breaker everywhere."""

    initial_beliefs: tuple[Literal, ...] = ()
    rules: tuple[Rule, ...] = ()
    plans: tuple[Plan, ...] = ()
