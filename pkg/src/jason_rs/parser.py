"""Parser for the agent source language.

A program is a sequence of clauses terminated by '.':

  ground literal '.'                      initial belief
  literal ':-' formula '.'                rule
  trigger [':' formula] ['<-' body] '.'   plan

Triggers are +l, -l, +!g, -!g. Body steps: +l, -l, !g, ?goal,
.send(to,performative,literal), .publish_decision(term), or a plain
external action name(args). '%' starts a comment running to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Optional

from .plans import (
    AchieveStep,
    ActionStep,
    AddBeliefStep,
    AgentProgram,
    DelBeliefStep,
    ExternalActionStep,
    PERFORMATIVES,
    Plan,
    PublishDecisionStep,
    SendStep,
    TestStep,
    Trigger,
    TriggerKind,
)
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
    REL_OPS,
    Rel,
    Rule,
    Str,
    Struct,
    TRUE,
    Term,
    Var,
    conjoin,
    is_var_name,
)


class ParseError(Exception):
    def __init__(self, line: int, column: int, expected: str, found: str):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(f"line {line}, column {column}: expected {expected}, found {found}")


# --- tokenizer ----------------------------------------------------------------

_PUNCT = (
    # longest first
    "<-", ":-", "<=", ">=", "==", "\\==",
    "(", ")", "[", "]", ",", ".", ";", ":",
    "+", "-", "!", "?", "~", "&", "<", ">", "=", "*", "/",
)


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT VAR NUM STRING DOTIDENT punct EOF
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def error(expected: str, found: str) -> ParseError:
        return ParseError(line, col, expected, found)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == '"':
            i += 1
            col += 1
            chars = []
            while True:
                if i >= n or source[i] == "\n":
                    raise ParseError(start_line, start_col, "closing '\"'", "end of line")
                c = source[i]
                if c == "\\":
                    if i + 1 >= n:
                        raise ParseError(line, col, "escape character", "end of input")
                    esc = source[i + 1]
                    chars.append({"n": "\n", "t": "\t"}.get(esc, esc))
                    i += 2
                    col += 2
                    continue
                if c == '"':
                    i += 1
                    col += 1
                    break
                chars.append(c)
                i += 1
                col += 1
            tokens.append(_Token("STRING", "".join(chars), start_line, start_col))
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j + 1 < n and source[j] == "." and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            col += j - i
            i = j
            tokens.append(_Token("NUM", text, start_line, start_col))
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            col += j - i
            i = j
            kind = "VAR" if is_var_name(text) else "IDENT"
            tokens.append(_Token(kind, text, start_line, start_col))
            continue
        if ch == "." and i + 1 < n and (source[i + 1].isalpha() and source[i + 1].islower()):
            # internal action name, e.g. .send — a clause-ending '.' is
            # never glued to a following lowercase letter
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i + 1 : j]
            col += j - i
            i = j
            tokens.append(_Token("DOTIDENT", text, start_line, start_col))
            continue
        for punct in _PUNCT:
            if source.startswith(punct, i):
                i += len(punct)
                col += len(punct)
                tokens.append(_Token(punct, punct, start_line, start_col))
                break
        else:
            raise error("a token", repr(ch))
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# --- recursive descent ----------------------------------------------------------

class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    # -- token plumbing

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def accept(self, kind: str) -> Optional[_Token]:
        if self.peek().kind == kind:
            return self.advance()
        return None

    def expect(self, kind: str, expected: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise self.failure(expected or f"'{kind}'")
        return self.advance()

    def failure(self, expected: str) -> ParseError:
        tok = self.peek()
        found = "end of input" if tok.kind == "EOF" else f"'{tok.text}'"
        return ParseError(tok.line, tok.column, expected, found)

    # -- program structure

    def parse_program(self) -> AgentProgram:
        beliefs: list[Literal] = []
        rules: list[Rule] = []
        plans: list[Plan] = []
        while self.peek().kind != "EOF":
            if self.peek().kind in ("+", "-"):
                plans.append(self.parse_plan())
                continue
            lit_tok = self.peek()
            lit = self.parse_literal()
            if self.accept(":-"):
                body = self.parse_formula()
                self.expect(".", "'.' after rule")
                rules.append(Rule(lit, body))
            else:
                self.expect(".", "':-' or '.' after literal")
                if not lit.is_ground():
                    raise ParseError(
                        lit_tok.line, lit_tok.column,
                        "a ground literal (initial beliefs cannot hold variables)",
                        str(lit),
                    )
                beliefs.append(lit)
        return AgentProgram(tuple(beliefs), tuple(rules), tuple(plans))

    def parse_plan(self) -> Plan:
        trigger = self.parse_trigger()
        context: ContextFormula = TRUE
        body: tuple[ActionStep, ...] = ()
        if self.accept(":"):
            context = self.parse_formula()
        if self.accept("<-"):
            body = tuple(self.parse_body())
        self.expect(".", "'.' at end of plan")
        return Plan(trigger, context, body)

    def parse_trigger(self) -> Trigger:
        tok = self.peek()
        if tok.kind == "+":
            self.advance()
            if self.accept("!"):
                return Trigger(TriggerKind.ADD_GOAL, self.parse_literal())
            return Trigger(TriggerKind.ADD_BELIEF, self.parse_literal())
        if tok.kind == "-":
            self.advance()
            if self.accept("!"):
                return Trigger(TriggerKind.DEL_GOAL, self.parse_literal())
            return Trigger(TriggerKind.DEL_BELIEF, self.parse_literal())
        raise self.failure("'+' or '-' starting a trigger")

    def parse_body(self) -> list[ActionStep]:
        steps = [self.parse_step()]
        while self.accept(";"):
            steps.append(self.parse_step())
        return steps

    def parse_step(self) -> ActionStep:
        tok = self.peek()
        if tok.kind == "+":
            self.advance()
            return AddBeliefStep(self.parse_literal())
        if tok.kind == "-":
            self.advance()
            return DelBeliefStep(self.parse_literal())
        if tok.kind == "!":
            self.advance()
            return AchieveStep(self.parse_literal())
        if tok.kind == "?":
            self.advance()
            return TestStep(self.parse_formula_primary())
        if tok.kind == "DOTIDENT":
            return self.parse_internal_action()
        if tok.kind == "IDENT":
            name = self.advance().text
            args: tuple[Term, ...] = ()
            if self.accept("("):
                args = tuple(self.parse_term_list())
                self.expect(")", "')' closing argument list")
            return ExternalActionStep(name, args)
        raise self.failure("a body step")

    def parse_internal_action(self) -> ActionStep:
        tok = self.expect("DOTIDENT")
        if tok.text == "send":
            self.expect("(", "'(' after .send")
            to = self.expect("IDENT", "recipient agent name").text
            self.expect(",", "',' after recipient")
            perf_tok = self.expect("IDENT", "performative (tell or achieve)")
            if perf_tok.text not in PERFORMATIVES:
                raise ParseError(perf_tok.line, perf_tok.column,
                                 "performative tell or achieve", f"'{perf_tok.text}'")
            self.expect(",", "',' after performative")
            content = self.parse_literal()
            self.expect(")", "')' closing .send")
            return SendStep(to, perf_tok.text, content)
        if tok.text == "publish_decision":
            self.expect("(", "'(' after .publish_decision")
            content = self.parse_term()
            self.expect(")", "')' closing .publish_decision")
            return PublishDecisionStep(content)
        raise ParseError(tok.line, tok.column,
                         "internal action .send or .publish_decision", f"'.{tok.text}'")

    # -- formulas

    def parse_formula(self) -> ContextFormula:
        parts = [self.parse_formula_unary()]
        while self.accept("&"):
            parts.append(self.parse_formula_unary())
        return conjoin(parts)

    def parse_formula_unary(self) -> ContextFormula:
        tok = self.peek()
        if tok.kind == "IDENT" and tok.text == "not":
            self.advance()
            return Not(self.parse_formula_primary())
        return self.parse_formula_primary()

    def parse_formula_primary(self) -> ContextFormula:
        tok = self.peek()
        if tok.kind == "IDENT" and tok.text == "true" and self.peek(1).kind != "(":
            self.advance()
            return TRUE
        # try a relation first; fall back to literal / parenthesized formula
        mark = self.pos
        lhs: Expr | None = None
        op_kind: str | None = None
        try:
            lhs = self.parse_expr()
            if self.peek().kind in REL_OPS:
                op_kind = self.peek().kind
        except ParseError:
            pass
        if lhs is not None and op_kind is not None:
            self.advance()
            rhs = self.parse_expr()
            return Rel(op_kind, lhs, rhs)
        self.pos = mark
        if self.peek().kind == "(":
            self.advance()
            inner = self.parse_formula()
            self.expect(")", "')' closing formula")
            return inner
        return LiteralNode(self.parse_literal())

    # -- literals and terms

    def parse_literal(self) -> Literal:
        negated = self.accept("~") is not None
        name = self.expect("IDENT", "a predicate name").text
        args: tuple[Term, ...] = ()
        if self.accept("("):
            args = tuple(self.parse_term_list())
            self.expect(")", "')' closing argument list")
        annotations: frozenset[Term] = frozenset()
        if self.accept("["):
            annotations = frozenset(self.parse_term_list())
            self.expect("]", "']' closing annotation list")
        try:
            return Literal(name, args, negated, annotations)
        except ValueError as exc:
            tok = self.peek()
            raise ParseError(tok.line, tok.column, "a well-formed literal", str(exc)) from None

    def parse_term_list(self) -> list[Term]:
        terms = [self.parse_term()]
        while self.accept(","):
            terms.append(self.parse_term())
        return terms

    def parse_term(self) -> Term:
        tok = self.peek()
        if tok.kind == "VAR":
            self.advance()
            return Var(tok.text)
        if tok.kind == "NUM":
            self.advance()
            return Num(Decimal(tok.text))
        if tok.kind == "-" and self.peek(1).kind == "NUM":
            self.advance()
            num_tok = self.advance()
            return Num(-Decimal(num_tok.text))
        if tok.kind == "STRING":
            self.advance()
            return Str(tok.text)
        if tok.kind == "IDENT":
            self.advance()
            if self.accept("("):
                args = self.parse_term_list()
                self.expect(")", "')' closing argument list")
                return Struct(tok.text, tuple(args))
            return Atom(tok.text)
        raise self.failure("a term")

    # -- arithmetic expressions (relation operands)

    def parse_expr(self) -> Expr:
        lhs = self.parse_expr_term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().text
            rhs = self.parse_expr_term()
            lhs = BinOp(op, lhs, rhs)
        return lhs

    def parse_expr_term(self) -> Expr:
        lhs = self.parse_expr_factor()
        while self.peek().kind in ("*", "/"):
            op = self.advance().text
            rhs = self.parse_expr_factor()
            lhs = BinOp(op, lhs, rhs)
        return lhs

    def parse_expr_factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")", "')' closing expression")
            return inner
        if tok.kind == "-":
            self.advance()
            inner = self.parse_expr_factor()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return BinOp("-", Num(Decimal(0)), inner)
        return self.parse_term()


def parse_program(source: str) -> AgentProgram:
    """Parse a whole program; raises ParseError with line/column on any
    syntax violation. Never returns a partial program."""
    return _Parser(source).parse_program()


def parse_literal(source: str) -> Literal:
    p = _Parser(source)
    lit = p.parse_literal()
    if p.peek().kind != "EOF":
        raise p.failure("end of input")
    return lit


def parse_formula(source: str) -> ContextFormula:
    p = _Parser(source)
    f = p.parse_formula()
    if p.peek().kind != "EOF":
        raise p.failure("end of input")
    return f


def parse_term(source: str) -> Term:
    p = _Parser(source)
    t = p.parse_term()
    if p.peek().kind != "EOF":
        raise p.failure("end of input")
    return t


# --- pretty printing ------------------------------------------------------------

def pretty_print(program: AgentProgram) -> str:
    """Stable text rendering; parse(pretty_print(parse(s))) == parse(s)."""
    lines = [f"{b}." for b in program.initial_beliefs]
    lines.extend(str(r) for r in program.rules)
    lines.extend(str(p) for p in program.plans)
    return "\n".join(lines) + ("\n" if lines else "")
