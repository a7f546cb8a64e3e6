from decimal import Decimal

import pytest

from jason_rs.engine import (
    DepthExceeded,
    DivisionByZero,
    EMPTY_SUBSTITUTION,
    FactStore,
    NonNumericOperand,
    Substitution,
    UnboundArithmetic,
    UnsafeNegation,
    eval_expr,
    solve,
    solve_one,
)
from jason_rs.parser import parse_formula, parse_literal, parse_program
from jason_rs.terms import Atom, BinOp, Num, Var

from oracles import enumerate_query_solutions


def facts(*rendered):
    return FactStore(parse_literal(r) for r in rendered)


COSTS = facts("cost(e1,10)", "cost(e2,7)", "cost(e3,12)")


def bindings(solutions, var):
    return [s.get(var) for s in solutions]


def test_fact_lookup():
    sols = list(solve(parse_formula("cost(e1,X)"), COSTS))
    assert bindings(sols, "X") == [Num(Decimal(10))]


def test_no_matching_fact_yields_empty_sequence():
    assert list(solve(parse_formula("cost(e9,X)"), COSTS)) == []


def test_cheapest_with_negation_as_failure():
    rules = parse_program("cheapest(A) :- cost(A,C) & not (cost(B,D) & D < C).").rules
    sols = list(solve(parse_formula("cheapest(A)"), COSTS, rules))
    assert bindings(sols, "A") == [Atom("e2")]
    # brute-force check over all ground instantiations with an explicit min
    stored = [(lit.args[0], lit.args[1].value) for lit in COSTS]
    best = min(stored, key=lambda pair: pair[1])[0]
    assert bindings(sols, "A") == [best]


def test_solutions_follow_source_order():
    base = facts("p(c)", "p(a)", "p(b)")
    sols = bindings(solve(parse_formula("p(X)"), base), "X")
    assert sols == [Atom("c"), Atom("a"), Atom("b")]


def test_rules_tried_after_facts_in_source_order():
    rules = parse_program("q(X) :- p(X).\nq(z) :- p(a).").rules
    base = facts("p(a)", "p(b)", "q(direct)")
    sols = bindings(solve(parse_formula("q(V)"), base, rules), "V")
    assert sols == [Atom("direct"), Atom("a"), Atom("b"), Atom("z")]


def test_rule_variables_do_not_capture_query_variables():
    rules = parse_program("same(X, X) :- p(X).").rules
    base = facts("p(a)")
    sols = list(solve(parse_formula("same(X, Y)"), base, rules))
    assert [(s.get("X"), s.get("Y")) for s in sols] == [(Atom("a"), Atom("a"))]


def test_conjunction_and_relations():
    base = facts("cost(e1,10)", "cost(e2,7)")
    found = list(solve(parse_formula("cost(A,C) & C < 9"), base))
    assert bindings(found, "A") == [Atom("e2")]
    assert list(solve(parse_formula("cost(A,C) & C == 7"), base))
    assert bindings(solve(parse_formula("cost(A,C) & A \\== e1"), base), "A") == [Atom("e2")]


def test_equals_binds_through_arithmetic():
    sol = solve_one(parse_formula("E = 3 + 4 & E < 8"), facts())
    assert sol is not None and sol.get("E") == Num(Decimal(7))
    assert solve_one(parse_formula("7 = 3 + 4"), facts()) is not None
    assert solve_one(parse_formula("8 = 3 + 4"), facts()) is None


def test_negation_with_local_variables_is_safe():
    base = facts("expected(e1)", "expected(e2)", "latest_cost(e1,5)")
    rules = parse_program(
        "all_reported :- not (expected(E) & not latest_cost(E, C))."
    ).rules
    assert solve_one(parse_formula("all_reported"), base, rules) is None
    base.add(parse_literal("latest_cost(e2,9)"))
    assert solve_one(parse_formula("all_reported"), base, rules) is not None


def test_negation_sharing_unbound_context_variable_is_an_error():
    base = facts("p(a)", "q(a)")
    with pytest.raises(UnsafeNegation):
        list(solve(parse_formula("not q(X) & p(X)"), base))
    # bound before the negation: fine
    assert list(solve(parse_formula("p(X) & not q(X)"), base)) == []


def test_depth_bound_turns_loops_into_errors():
    rules = parse_program("loop(X) :- loop(X).").rules
    with pytest.raises(DepthExceeded):
        list(solve(parse_formula("loop(a)"), facts(), rules, step_budget=500))


def test_annotated_goals_match_annotated_facts():
    base = FactStore([parse_literal("data(5)[source(percept)]")])
    assert solve_one(parse_formula("data(X)"), base) is not None
    assert solve_one(parse_formula("data(X)[source(percept)]"), base) is not None
    assert solve_one(parse_formula("data(X)[source(self)]"), base) is None


def test_strong_negation_is_a_distinct_namespace():
    base = FactStore([parse_literal("~broken(e1)"), parse_literal("ok(e1)")])
    assert solve_one(parse_formula("~broken(X)"), base) is not None
    assert solve_one(parse_formula("broken(X)"), base) is None


def test_eval_expr_examples():
    assert eval_expr(BinOp("+", Num(Decimal(3)), Num(Decimal(4)))) == Num(Decimal(7))
    doubled = eval_expr(BinOp("*", Var("X"), Num(Decimal(2))),
                        Substitution({"X": Num(Decimal(5))}))
    assert doubled == Num(Decimal(10))
    with pytest.raises(UnboundArithmetic):
        eval_expr(BinOp("+", Var("X"), Num(Decimal(1))))
    with pytest.raises(DivisionByZero):
        eval_expr(BinOp("/", Num(Decimal(1)), Num(Decimal(0))))
    with pytest.raises(NonNumericOperand):
        eval_expr(BinOp("+", Atom("a"), Num(Decimal(1))))


def test_unbound_arithmetic_inside_solve():
    with pytest.raises(UnboundArithmetic):
        list(solve(parse_formula("X < 3"), facts()))


def test_matches_ground_enumeration_oracle_on_a_known_program():
    base = facts("p(a)", "p(b)", "q(a,b)", "q(b,b)")
    rules = parse_program("r(X) :- p(X) & not q(X, X).").rules
    query = parse_formula("r(X)")
    got = {
        frozenset(s.restrict(["X"]).items())
        for s in solve(query, base, rules)
    }
    expected = enumerate_query_solutions(
        query, list(base), rules, [Atom("a"), Atom("b")]
    )
    assert got == expected
