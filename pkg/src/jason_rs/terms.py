"""First-order term syntax: terms, literals, rules, context formulas.

All types here are immutable values, safe to share across threads. Numbers
are exact decimals (``decimal.Decimal``) so cost comparisons are
reproducible and order-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Union


def is_var_name(name: str) -> bool:
    return bool(name) and (name[0].isupper() or name[0] == "_")


def format_decimal(value: Decimal) -> str:
    """Render a Decimal without exponent notation: 7.0 -> "7", 0.50 -> "0.5"."""
    normalized = value.normalize()
    text = format(normalized, "f")
    return text


@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self) -> None:
        if is_var_name(self.name):
            raise ValueError(f"atom name must start lowercase: {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self) -> None:
        if not is_var_name(self.name):
            raise ValueError(f"variable name must start uppercase or '_': {self.name!r}")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Num:
    value: Decimal

    def __str__(self) -> str:
        return format_decimal(self.value)


@dataclass(frozen=True)
class Str:
    value: str

    def __str__(self) -> str:
        escaped = (self.value.replace("\\", "\\\\").replace('"', '\\"')
                   .replace("\n", "\\n").replace("\t", "\\t"))
        return f'"{escaped}"'


@dataclass(frozen=True)
class Struct:
    functor: str
    args: tuple["Term", ...]

    def __post_init__(self) -> None:
        if is_var_name(self.functor):
            raise ValueError(f"functor must start lowercase: {self.functor!r}")
        if len(self.args) < 1:
            raise ValueError("zero-arity structures must be represented as Atom")

    def __str__(self) -> str:
        return f"{self.functor}({','.join(str(a) for a in self.args)})"


Term = Union[Atom, Var, Num, Str, Struct]


def num(value: "int | str | Decimal") -> Num:
    return Num(Decimal(value))


def struct(functor: str, *args: Term) -> Term:
    """Build a Struct, collapsing to Atom when there are no args."""
    if not args:
        return Atom(functor)
    return Struct(functor, tuple(args))


def term_vars(t: Term) -> Iterator[str]:
    """Yield variable names in t, left to right, possibly with repeats."""
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, Struct):
        for a in t.args:
            yield from term_vars(a)


def term_is_ground(t: Term) -> bool:
    return next(term_vars(t), None) is None


@dataclass(frozen=True)
class Literal:
    """A predicate applied to terms, with optional strong negation and annotations.

    Annotations carry provenance, e.g. source(percept), source(self) or
    source(<agent>); at most one source(_) annotation is allowed.
    """

    predicate: str
    args: tuple[Term, ...] = ()
    negated: bool = False
    annotations: frozenset[Term] = frozenset()

    def __post_init__(self) -> None:
        if is_var_name(self.predicate):
            raise ValueError(f"predicate must start lowercase: {self.predicate!r}")
        sources = [a for a in self.annotations if isinstance(a, Struct) and a.functor == "source"]
        if len(sources) > 1:
            raise ValueError(f"at most one source(_) annotation allowed: {self}")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def functor_key(self) -> tuple[bool, str, int]:
        return (self.negated, self.predicate, len(self.args))

    def is_ground(self) -> bool:
        return all(term_is_ground(a) for a in self.args)

    def source(self) -> Term | None:
        for a in self.annotations:
            if isinstance(a, Struct) and a.functor == "source":
                return a.args[0]
        return None

    def with_source(self, origin: Term) -> "Literal":
        """Return a copy whose source(_) annotation is exactly ``origin``."""
        rest = frozenset(
            a for a in self.annotations
            if not (isinstance(a, Struct) and a.functor == "source")
        )
        return Literal(self.predicate, self.args, self.negated,
                       rest | {Struct("source", (origin,))})

    def without_annotations(self) -> "Literal":
        if not self.annotations:
            return self
        return Literal(self.predicate, self.args, self.negated)

    def __str__(self) -> str:
        neg = "~" if self.negated else ""
        if self.args:
            body = f"{self.predicate}({','.join(str(a) for a in self.args)})"
        else:
            body = self.predicate
        if self.annotations:
            annots = ",".join(sorted(str(a) for a in self.annotations))
            return f"{neg}{body}[{annots}]"
        return f"{neg}{body}"


def literal_vars(lit: Literal) -> Iterator[str]:
    for a in lit.args:
        yield from term_vars(a)
    for a in lit.annotations:
        yield from term_vars(a)


# --- arithmetic expressions -------------------------------------------------

@dataclass(frozen=True)
class BinOp:
    """Arithmetic node; op is one of + - * /. Leaves are plain terms."""

    op: str
    lhs: "Expr"
    rhs: "Expr"

    def __str__(self) -> str:
        return f"({self.lhs} {self.op} {self.rhs})"


Expr = Union[Term, BinOp]


def expr_vars(e: Expr) -> Iterator[str]:
    if isinstance(e, BinOp):
        yield from expr_vars(e.lhs)
        yield from expr_vars(e.rhs)
    else:
        yield from term_vars(e)


# --- context formulas -------------------------------------------------------

@dataclass(frozen=True)
class TrueFormula:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class LiteralNode:
    literal: Literal

    def __str__(self) -> str:
        return str(self.literal)


@dataclass(frozen=True)
class Not:
    """Negation as failure: holds iff the wrapped formula has no solution."""

    formula: "ContextFormula"

    def __str__(self) -> str:
        return f"not ({self.formula})"


@dataclass(frozen=True)
class And:
    left: "ContextFormula"
    right: "ContextFormula"

    def __str__(self) -> str:
        return f"{self.left} & {self.right}"


REL_OPS = ("<", "<=", ">", ">=", "==", "\\==", "=")


@dataclass(frozen=True)
class Rel:
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self) -> None:
        if self.op not in REL_OPS:
            raise ValueError(f"unknown relational operator {self.op!r}")

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


ContextFormula = Union[TrueFormula, LiteralNode, Not, And, Rel]

TRUE = TrueFormula()


def conjoin(parts: "list[ContextFormula]") -> ContextFormula:
    """Left-associated conjunction of parts; TRUE when empty."""
    if not parts:
        return TRUE
    f = parts[0]
    for p in parts[1:]:
        f = And(f, p)
    return f


def formula_vars(f: ContextFormula) -> Iterator[str]:
    if isinstance(f, LiteralNode):
        yield from literal_vars(f.literal)
    elif isinstance(f, Not):
        yield from formula_vars(f.formula)
    elif isinstance(f, And):
        yield from formula_vars(f.left)
        yield from formula_vars(f.right)
    elif isinstance(f, Rel):
        yield from expr_vars(f.lhs)
        yield from expr_vars(f.rhs)


@dataclass(frozen=True)
class Rule:
    """Horn rule: head holds when body does. Unbound head vars are legal
    but reported by lint (see lint_rules)."""

    head: Literal
    body: ContextFormula

    def __str__(self) -> str:
        return f"{self.head} :- {self.body}."


def lint_rules(rules: "tuple[Rule, ...] | list[Rule]") -> list[str]:
    """Warnings for rule heads with variables the body never binds."""
    warnings = []
    for rule in rules:
        body_vars = set(formula_vars(rule.body))
        unbound = [v for v in dict.fromkeys(literal_vars(rule.head)) if v not in body_vars]
        if unbound:
            warnings.append(
                f"rule {rule.head}: head variable(s) {', '.join(unbound)} not bound by body"
            )
    return warnings
