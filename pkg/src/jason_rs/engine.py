"""Unification and Horn-clause query resolution.

unify() returns a most-general unifier (or None as the failure value) and
enforces the occurs check. solve() answers context formulas against a set of
ground literals plus rules, depth-first in source order, with negation as
failure. Resolution is bounded by a configurable step budget so loops become
diagnosable errors instead of hangs.
"""

from __future__ import annotations

import decimal
import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .terms import (
    And,
    Atom,
    BinOp,
    ContextFormula,
    Expr,
    Literal,
    LiteralNode,
    Not,
    Num,
    Rel,
    Rule,
    Str,
    Struct,
    Term,
    TrueFormula,
    Var,
    expr_vars,
    formula_vars,
    literal_vars,
)

DEFAULT_STEP_BUDGET = 10_000


class EngineError(Exception):
    pass


class DepthExceeded(EngineError):
    """Raised when a query uses up its resolution step budget."""


class UnboundArithmetic(EngineError):
    """Raised when arithmetic evaluation meets an unbound variable."""


class DivisionByZero(EngineError):
    pass


class NonNumericOperand(EngineError):
    """Raised when an arithmetic position holds a non-numeric term."""


class UnsafeNegation(EngineError):
    """Raised when a negated subformula shares an unbound variable with its
    surrounding context (only not-local variables may be free)."""


@dataclass(frozen=True)
class Substitution:
    """Immutable, idempotent variable binding map.

    Bindings are kept fully resolved: no bound value contains a bound
    variable, so applying a substitution twice equals applying it once.
    """

    bindings: Mapping[str, Term] = field(default_factory=dict)

    def get(self, name: str) -> Term | None:
        return self.bindings.get(name)

    def is_empty(self) -> bool:
        return not self.bindings

    def apply(self, t: Term) -> Term:
        if isinstance(t, Var):
            bound = self.bindings.get(t.name)
            return bound if bound is not None else t
        if isinstance(t, Struct):
            return Struct(t.functor, tuple(self.apply(a) for a in t.args))
        return t

    def apply_literal(self, lit: Literal) -> Literal:
        if next(literal_vars(lit), None) is None:
            return lit
        return Literal(
            lit.predicate,
            tuple(self.apply(a) for a in lit.args),
            lit.negated,
            frozenset(self.apply(a) for a in lit.annotations),
        )

    def apply_expr(self, e: Expr) -> Expr:
        if isinstance(e, BinOp):
            return BinOp(e.op, self.apply_expr(e.lhs), self.apply_expr(e.rhs))
        return self.apply(e)

    def apply_formula(self, f: ContextFormula) -> ContextFormula:
        if isinstance(f, LiteralNode):
            return LiteralNode(self.apply_literal(f.literal))
        if isinstance(f, And):
            return And(self.apply_formula(f.left), self.apply_formula(f.right))
        if isinstance(f, Not):
            return Not(self.apply_formula(f.formula))
        if isinstance(f, Rel):
            return Rel(f.op, self.apply_expr(f.lhs), self.apply_expr(f.rhs))
        return f

    def bind(self, name: str, value: Term) -> Optional["Substitution"]:
        """Extend with name -> value; None if the occurs check fails."""
        resolved = self.apply(value)
        if isinstance(resolved, Var) and resolved.name == name:
            return self
        if _occurs(name, resolved):
            return None
        updated = {
            key: _replace_var(old, name, resolved) for key, old in self.bindings.items()
        }
        updated[name] = resolved
        return Substitution(updated)

    def restrict(self, names: Iterable[str]) -> dict[str, Term]:
        wanted = set(names)
        return {k: v for k, v in self.bindings.items() if k in wanted}

    def __str__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.bindings.items()))
        return "{" + inner + "}"


EMPTY_SUBSTITUTION = Substitution()


def _occurs(name: str, t: Term) -> bool:
    if isinstance(t, Var):
        return t.name == name
    if isinstance(t, Struct):
        return any(_occurs(name, a) for a in t.args)
    return False


def _replace_var(t: Term, name: str, value: Term) -> Term:
    if isinstance(t, Var):
        return value if t.name == name else t
    if isinstance(t, Struct):
        return Struct(t.functor, tuple(_replace_var(a, name, value) for a in t.args))
    return t


def unify(a: Term, b: Term, s: Substitution = EMPTY_SUBSTITUTION) -> Optional[Substitution]:
    """Most general unifier extending s, or None. Failure is a value."""
    a = s.apply(a)
    b = s.apply(b)
    if isinstance(a, Var):
        return s.bind(a.name, b)
    if isinstance(b, Var):
        return s.bind(b.name, a)
    if isinstance(a, Atom) and isinstance(b, Atom):
        return s if a.name == b.name else None
    if isinstance(a, Num) and isinstance(b, Num):
        return s if a.value == b.value else None
    if isinstance(a, Str) and isinstance(b, Str):
        return s if a.value == b.value else None
    if isinstance(a, Struct) and isinstance(b, Struct):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return None
        for x, y in zip(a.args, b.args):
            result = unify(x, y, s)
            if result is None:
                return None
            s = result
        return s
    return None


def unify_literals(a: Literal, b: Literal, s: Substitution = EMPTY_SUBSTITUTION) -> Optional[Substitution]:
    """Unify predicate/arity/args; annotations are ignored here."""
    if a.negated != b.negated or a.predicate != b.predicate or a.arity != b.arity:
        return None
    for x, y in zip(a.args, b.args):
        result = unify(x, y, s)
        if result is None:
            return None
        s = result
    return s


def match_literal(goal: Literal, fact: Literal, s: Substitution = EMPTY_SUBSTITUTION) -> Optional[Substitution]:
    """Unify goal against a stored literal.

    The goal's annotations, if any, must each unify with some annotation of
    the stored literal (subset semantics); an annotation-free goal matches
    regardless of the fact's annotations.
    """
    result = unify_literals(goal, fact, s)
    if result is None:
        return None
    for annot in goal.annotations:
        found = None
        for candidate in fact.annotations:
            attempt = unify(annot, candidate, result)
            if attempt is not None:
                found = attempt
                break
        if found is None:
            return None
        result = found
    return result


# --- arithmetic ---------------------------------------------------------------

def eval_expr(e: Expr, s: Substitution = EMPTY_SUBSTITUTION) -> Num:
    """Exact decimal evaluation; unbound variables are an error, not silence."""
    if isinstance(e, BinOp):
        lhs = eval_expr(e.lhs, s).value
        rhs = eval_expr(e.rhs, s).value
        try:
            if e.op == "+":
                return Num(lhs + rhs)
            if e.op == "-":
                return Num(lhs - rhs)
            if e.op == "*":
                return Num(lhs * rhs)
            if e.op == "/":
                return Num(lhs / rhs)
        except decimal.DivisionByZero:
            raise DivisionByZero(f"division by zero in {e}") from None
        raise NonNumericOperand(f"unknown arithmetic operator {e.op!r}")
    if isinstance(e, Var):
        bound = s.apply(e)
        if isinstance(bound, Var):
            raise UnboundArithmetic(f"unbound variable {bound.name} in arithmetic")
        return eval_expr(bound, s)
    if isinstance(e, Num):
        return e
    raise NonNumericOperand(f"non-numeric term {e} in arithmetic")


def _expr_is_evaluable(e: Expr, s: Substitution) -> bool:
    if isinstance(e, BinOp):
        return _expr_is_evaluable(e.lhs, s) and _expr_is_evaluable(e.rhs, s)
    if isinstance(e, Var):
        bound = s.get(e.name)
        return bound is not None and _expr_is_evaluable(bound, s)
    return isinstance(e, Num)


# --- resolution ---------------------------------------------------------------

class _QueryState:
    """Per-query mutable state: step budget and fresh-variable counter."""

    __slots__ = ("steps_left", "fresh")

    def __init__(self, budget: int):
        self.steps_left = budget
        self.fresh = itertools.count()

    def charge(self) -> None:
        self.steps_left -= 1
        if self.steps_left < 0:
            raise DepthExceeded("resolution step budget exhausted")


def _rename_rule(rule: Rule, state: _QueryState) -> Rule:
    names = set(literal_vars(rule.head)) | set(formula_vars(rule.body))
    if not names:
        return rule
    # '#' cannot appear in source identifiers, so renamed vars never collide
    mapping = Substitution({n: Var(f"_G{next(state.fresh)}#") for n in names})
    return Rule(mapping.apply_literal(rule.head), mapping.apply_formula(rule.body))


class BeliefSource:
    """Anything facts can be looked up from: an iterable of ground literals
    or an object exposing candidates(literal) -> iterable in stable order."""

    def candidates(self, goal: Literal) -> Iterable[Literal]:  # pragma: no cover
        raise NotImplementedError


class FactStore(BeliefSource):
    """Insertion-ordered set of ground literals with a functor index."""

    def __init__(self, facts: Iterable[Literal] = ()):
        self._index: dict[tuple[bool, str, int], dict[Literal, None]] = {}
        for f in facts:
            self.add(f)

    def add(self, lit: Literal) -> bool:
        bucket = self._index.setdefault(lit.functor_key, {})
        if lit in bucket:
            return False
        bucket[lit] = None
        return True

    def discard(self, lit: Literal) -> bool:
        bucket = self._index.get(lit.functor_key)
        if bucket is None or lit not in bucket:
            return False
        del bucket[lit]
        return True

    def candidates(self, goal: Literal) -> Iterable[Literal]:
        return tuple(self._index.get(goal.functor_key, ()))

    def __iter__(self) -> Iterator[Literal]:
        for bucket in self._index.values():
            yield from bucket

    def __len__(self) -> int:
        return sum(len(b) for b in self._index.values())

    def __contains__(self, lit: Literal) -> bool:
        return lit in self._index.get(lit.functor_key, ())


def _as_source(beliefs: "BeliefSource | Iterable[Literal]") -> BeliefSource:
    if isinstance(beliefs, BeliefSource):
        return beliefs
    return FactStore(beliefs)


def solve(
    goal: ContextFormula,
    beliefs: "BeliefSource | Iterable[Literal]",
    rules: Sequence[Rule] = (),
    s: Substitution = EMPTY_SUBSTITUTION,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> Iterator[Substitution]:
    """Yield every substitution making goal a consequence of beliefs + rules.

    Depth-first, facts before rules, both in source order. ``not`` is
    negation as failure; its wrapped formula may only leave variables
    unbound that occur nowhere outside the negation.
    """
    source = _as_source(beliefs)
    state = _QueryState(step_budget)
    results = _solve_formula(goal, s, frozenset(), source, tuple(rules), state)
    # deeply recursive rule chains exhaust the interpreter stack long before
    # a generous step budget; both failure modes are the same diagnosis
    while True:
        try:
            yield next(results)
        except StopIteration:
            return
        except RecursionError:
            raise DepthExceeded("resolution nesting exceeded the interpreter stack") from None


def solve_one(
    goal: ContextFormula,
    beliefs: "BeliefSource | Iterable[Literal]",
    rules: Sequence[Rule] = (),
    s: Substitution = EMPTY_SUBSTITUTION,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> Optional[Substitution]:
    for result in solve(goal, beliefs, rules, s, step_budget):
        return result
    return None


def _free_vars_under(s: Substitution, names: Iterable[str]) -> set[str]:
    return {n for n in names if s.get(n) is None}


def _solve_formula(
    f: ContextFormula,
    s: Substitution,
    outer_vars: frozenset[str],
    beliefs: BeliefSource,
    rules: tuple[Rule, ...],
    state: _QueryState,
) -> Iterator[Substitution]:
    if isinstance(f, TrueFormula):
        yield s
    elif isinstance(f, LiteralNode):
        yield from _solve_literal(f.literal, s, beliefs, rules, state)
    elif isinstance(f, And):
        left_vars = frozenset(formula_vars(f.left))
        right_vars = frozenset(formula_vars(f.right))
        for s1 in _solve_formula(f.left, s, outer_vars | right_vars, beliefs, rules, state):
            yield from _solve_formula(f.right, s1, outer_vars | left_vars, beliefs, rules, state)
    elif isinstance(f, Not):
        free = _free_vars_under(s, formula_vars(f.formula))
        shared = free & outer_vars
        if shared:
            raise UnsafeNegation(
                f"negated formula {f.formula} shares unbound variable(s) "
                f"{', '.join(sorted(shared))} with its context"
            )
        for _ in _solve_formula(f.formula, s, frozenset(), beliefs, rules, state):
            return
        yield s
    elif isinstance(f, Rel):
        result = _solve_rel(f, s)
        if result is not None:
            yield result
    else:  # pragma: no cover
        raise TypeError(f"not a context formula: {f!r}")


def _solve_literal(
    goal: Literal,
    s: Substitution,
    beliefs: BeliefSource,
    rules: tuple[Rule, ...],
    state: _QueryState,
) -> Iterator[Substitution]:
    state.charge()
    current = s.apply_literal(goal)
    for fact in beliefs.candidates(current):
        result = match_literal(current, fact, s)
        if result is not None:
            yield result
    if current.annotations:
        # derived literals carry no provenance; annotated goals match facts only
        return
    for rule in rules:
        if (rule.head.negated, rule.head.predicate, rule.head.arity) != current.functor_key:
            continue
        renamed = _rename_rule(rule, state)
        s1 = unify_literals(current, renamed.head, s)
        if s1 is None:
            continue
        head_vars = frozenset(literal_vars(renamed.head))
        yield from _solve_formula(renamed.body, s1, head_vars, beliefs, rules, state)


def _rel_operand(e: Expr, s: Substitution) -> Term:
    """Reduce a relation operand to a term: arithmetic trees must evaluate."""
    if isinstance(e, BinOp):
        return eval_expr(e, s)
    return s.apply(e)


def _solve_rel(f: Rel, s: Substitution) -> Optional[Substitution]:
    if f.op in ("<", "<=", ">", ">="):
        lhs = eval_expr(f.lhs, s).value
        rhs = eval_expr(f.rhs, s).value
        ok = (
            lhs < rhs if f.op == "<"
            else lhs <= rhs if f.op == "<="
            else lhs > rhs if f.op == ">"
            else lhs >= rhs
        )
        return s if ok else None
    if f.op in ("==", "\\=="):
        if _expr_is_evaluable(f.lhs, s) and _expr_is_evaluable(f.rhs, s):
            equal = eval_expr(f.lhs, s).value == eval_expr(f.rhs, s).value
        else:
            lhs = _rel_operand(f.lhs, s)
            rhs = _rel_operand(f.rhs, s)
            unbound = [str(t) for t in (lhs, rhs) if not _term_ground(t)]
            if unbound:
                raise UnboundArithmetic(
                    f"comparison {f} over non-ground operand(s) {', '.join(unbound)}"
                )
            equal = lhs == rhs
        return s if equal == (f.op == "==") else None
    # '=': unification, evaluating any arithmetic side first
    lhs = _rel_operand(f.lhs, s)
    rhs = _rel_operand(f.rhs, s)
    return unify(lhs, rhs, s)


def _term_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Struct):
        return all(_term_ground(a) for a in t.args)
    return True
