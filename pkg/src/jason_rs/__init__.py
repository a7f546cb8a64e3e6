"""Agent runtime speaking an AgentSpeak-L subset, exposed as a REST service
and bridged to an emulated connected-object platform."""

from .engine import (
    DepthExceeded,
    DivisionByZero,
    EMPTY_SUBSTITUTION,
    FactStore,
    Substitution,
    UnboundArithmetic,
    UnsafeNegation,
    eval_expr,
    solve,
    solve_one,
    unify,
)
from .gateway import AgentGateway, ApiError
from .iot_platform import IotPlatform, load_accounts
from .parser import ParseError, parse_formula, parse_literal, parse_program, parse_term, pretty_print
from .plans import AgentProgram, Plan, Trigger, TriggerKind
from .runtime import (
    DuplicateAgentName,
    NonGroundPercept,
    QuiescenceTimeout,
    Runtime,
    UnknownAgent,
)
from .scenario import ScenarioSpec, expected_allocation, run_scenario
from .server import AppStack, ControlCenterServer, CycleScheduler

__version__ = "0.1.0"

__all__ = [
    "AgentGateway",
    "AgentProgram",
    "ApiError",
    "AppStack",
    "ControlCenterServer",
    "CycleScheduler",
    "DepthExceeded",
    "DivisionByZero",
    "DuplicateAgentName",
    "EMPTY_SUBSTITUTION",
    "FactStore",
    "IotPlatform",
    "NonGroundPercept",
    "ParseError",
    "Plan",
    "QuiescenceTimeout",
    "Runtime",
    "ScenarioSpec",
    "Substitution",
    "Trigger",
    "TriggerKind",
    "UnboundArithmetic",
    "UnknownAgent",
    "UnsafeNegation",
    "eval_expr",
    "expected_allocation",
    "load_accounts",
    "parse_formula",
    "parse_literal",
    "parse_program",
    "parse_term",
    "pretty_print",
    "run_scenario",
    "solve",
    "solve_one",
    "unify",
    "__version__",
]
