"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to watch the lines appear.
"""

import itertools
import random
import time
from contextlib import contextmanager

import pytest
import requests

from jason_rs.bench import bench
from jason_rs.engine import Substitution, solve, unify
from jason_rs.parser import parse_program
from jason_rs.scenario import (
    Evacuator,
    ScenarioSpec,
    run_scenario,
    scenario_programs,
)
from jason_rs.server import AppStack
from jason_rs.terms import (
    And,
    Atom,
    Literal,
    LiteralNode,
    Not,
    Num,
    Rule,
    Struct,
    TRUE,
    Var,
    conjoin,
    formula_vars,
    term_vars,
)

from oracles import answer_vars, argmin_allocation, enumerate_query_solutions, match_one_way


@contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] criterion {number}: {title}")
        raise
    print(f"[PASS] criterion {number}: {title}")


# --- criterion 1: solver equals ground enumeration ------------------------------

_CONSTANTS = [Atom(f"c{i}") for i in range(5)]


def _random_args(rng, arity, vars_pool, var_chance):
    return tuple(
        Var(rng.choice(vars_pool)) if rng.random() < var_chance else rng.choice(_CONSTANTS)
        for _ in range(arity)
    )


def _random_logic_case(rng: random.Random):
    """A stratified program: base facts for p (and sometimes q), one or two
    non-recursive rules for r whose negations only wrap base predicates and
    only reuse variables bound by earlier positive conjuncts."""
    preds = {"p": rng.randint(1, 2)}
    if rng.random() < 0.8:
        preds["q"] = rng.randint(1, 2)
    derived_arity = rng.randint(1, 2)

    facts = []
    seen = set()
    for name, arity in preds.items():
        for _ in range(rng.randint(0, 5)):
            args = tuple(rng.choice(_CONSTANTS) for _ in range(arity))
            if (name, args) not in seen:
                seen.add((name, args))
                facts.append(Literal(name, args))

    rules = []
    for _ in range(rng.randint(1, 2)):
        body_vars = [f"V{i}" for i in range(3)]
        conjuncts = []
        bound = []
        for position in range(rng.randint(1, 2)):
            name = rng.choice(list(preds))
            args = _random_args(rng, preds[name], body_vars, var_chance=0.7)
            conjuncts.append(LiteralNode(Literal(name, args)))
            bound.extend(v for v in term_vars_of(args) if v not in bound)
        if bound and rng.random() < 0.8:
            # negation last: shared vars already bound, plus fresh locals
            name = rng.choice(list(preds))
            local_pool = bound + ["L0", "L1"]
            args = tuple(
                Var(rng.choice(local_pool)) if rng.random() < 0.7 else rng.choice(_CONSTANTS)
                for _ in range(preds[name])
            )
            inner = LiteralNode(Literal(name, args))
            if rng.random() < 0.3:
                second = rng.choice(list(preds))
                extra = tuple(
                    Var(rng.choice(local_pool)) if rng.random() < 0.5 else rng.choice(_CONSTANTS)
                    for _ in range(preds[second])
                )
                inner = And(inner, LiteralNode(Literal(second, extra)))
            conjuncts.append(Not(inner))
        head_args = tuple(
            Var(rng.choice(bound)) if bound and rng.random() < 0.8 else rng.choice(_CONSTANTS)
            for _ in range(derived_arity)
        )
        rules.append(Rule(Literal("r", head_args), conjoin(conjuncts)))

    query_vars = ["X", "Y"]
    roll = rng.random()
    if roll < 0.45:
        goal = LiteralNode(Literal("r", _random_args(rng, derived_arity, query_vars, 0.8)))
    elif roll < 0.75:
        name = rng.choice(list(preds))
        goal = LiteralNode(Literal(name, _random_args(rng, preds[name], query_vars, 0.8)))
    else:
        name = rng.choice(list(preds))
        positive = LiteralNode(Literal(name, _random_args(rng, preds[name], query_vars, 0.9)))
        bound_vars = list(dict.fromkeys(formula_vars(positive)))
        neg_name = rng.choice(list(preds))
        neg_pool = bound_vars + ["L9"] if bound_vars else ["L9"]
        neg_args = tuple(
            Var(rng.choice(neg_pool)) if rng.random() < 0.6 else rng.choice(_CONSTANTS)
            for _ in range(preds[neg_name])
        )
        goal = And(positive, Not(LiteralNode(Literal(neg_name, neg_args))))
    return facts, rules, goal


def term_vars_of(args):
    for a in args:
        yield from term_vars(a)


def test_criterion_1_solver_matches_ground_enumeration_oracle():
    with criterion(1, "solve equals brute-force ground enumeration, 1000/1000 trials"):
        rng = random.Random(987654321)
        started = time.monotonic()
        for trial in range(1000):
            facts, rules, goal = _random_logic_case(rng)
            free = sorted(answer_vars(goal))
            got = set()
            for solution in solve(goal, facts, rules):
                bindings = solution.restrict(free)
                assert set(bindings) == set(free), (
                    f"trial {trial}: solution left query variables unbound"
                )
                got.add(frozenset(bindings.items()))
            expected = enumerate_query_solutions(goal, facts, rules, _CONSTANTS)
            assert got == expected, (
                f"trial {trial} diverged\nfacts: {[str(f) for f in facts]}"
                f"\nrules: {[str(r) for r in rules]}\ngoal: {goal}"
                f"\nsolve: {sorted(map(sorted, got), key=str)}"
                f"\noracle: {sorted(map(sorted, expected), key=str)}"
            )
        elapsed = time.monotonic() - started
        assert elapsed < 60, f"1000 trials took {elapsed:.1f}s, budget is 60s"
        print(f"  (1000 trials in {elapsed:.1f}s)")


# --- criterion 2: unification property suite -----------------------------------

_UNIFY_ATOMS = [Atom("a"), Atom("b"), Atom("c")]
_UNIFY_VARS = ["X", "Y", "Z"]
_GROUND_POOL = [Atom("a"), Atom("b"), Num(1), Struct("f", (Atom("a"),))]


def _random_unify_term(rng, depth):
    roll = rng.random()
    if depth <= 0 or roll < 0.45:
        return rng.choice([
            rng.choice(_UNIFY_ATOMS),
            Var(rng.choice(_UNIFY_VARS)),
            Num(rng.randint(1, 2)),
        ])
    functor, arity = rng.choice([("f", 1), ("g", 2), ("h", 2)])
    return Struct(functor, tuple(
        _random_unify_term(rng, depth - 1) for _ in range(arity)
    ))


def _graft_var(rng, t, name):
    """Return t with one leaf replaced by Var(name)."""
    if not isinstance(t, Struct):
        return Var(name)
    idx = rng.randrange(len(t.args))
    new_args = list(t.args)
    new_args[idx] = _graft_var(rng, new_args[idx], name)
    return Struct(t.functor, tuple(new_args))


def test_criterion_2_unification_property_suite():
    with criterion(2, "MGU factoring, occurs-check and idempotence over 10000 cases"):
        rng = random.Random(24680)
        cases = 0

        for _ in range(4000):  # MGU factoring
            a = _random_unify_term(rng, 3)
            b = _random_unify_term(rng, 3)
            mgu = unify(a, b)
            names = sorted(set(term_vars(a)) | set(term_vars(b)))
            for combo in itertools.product(_GROUND_POOL, repeat=min(len(names), 3)):
                grounding = Substitution(dict(zip(names, combo)))
                left, right = grounding.apply(a), grounding.apply(b)
                if left != right or set(term_vars(left)) or set(term_vars(right)):
                    continue
                assert mgu is not None, f"missed unifier for {a} ~ {b}"
                assert match_one_way(mgu.apply(a), left) is not None, (
                    f"{mgu.apply(a)} is not more general than {left}"
                )
            cases += 1

        for _ in range(3000):  # occurs check
            name = rng.choice(_UNIFY_VARS)
            base = _random_unify_term(rng, 2)
            carrier = _graft_var(rng, Struct("f", (base,)), name)
            if carrier == Var(name):
                carrier = Struct("f", (Var(name),))
            assert unify(Var(name), carrier) is None, (
                f"occurs check failed for {name} ~ {carrier}"
            )
            cases += 1

        for _ in range(3000):  # idempotence
            a = _random_unify_term(rng, 3)
            b = _random_unify_term(rng, 3)
            result = unify(a, b)
            if result is None:
                cases += 1
                continue
            for t in (a, b):
                once = result.apply(t)
                assert result.apply(once) == once
            for bound in result.bindings.values():
                assert result.apply(bound) == bound
            cases += 1

        assert cases >= 10_000
        print(f"  ({cases} generated cases, zero failures)")


# --- criteria 3 & 4: scenario determinism and argmin ---------------------------

def _random_scenario(rng):
    n = rng.randint(2, 6)
    evacuators = tuple(Evacuator(f"e{i+1}", rng.randint(0, 100)) for i in range(n))
    bindings = tuple((i + 1, e.name) for i, e in enumerate(evacuators))
    spec = ScenarioSpec(evacuators, bindings)
    script = []
    loads = {}
    for _ in range(rng.randint(0, 3)):
        idx = rng.randint(1, n)
        value = rng.randint(0, 100)
        script.append((idx, value))
        loads[f"e{idx}"] = value
    return spec, script, loads


def test_criterion_3_deterministic_decision_traces():
    with criterion(3, "same seed and schedule give byte-identical decision traces"):
        def one_run(seed):
            rng = random.Random(seed)
            spec, script, _ = _random_scenario(rng)
            trace = run_scenario(spec, script).decision_trace()
            return "\n".join(trace).encode("utf-8")

        for seed in (7, 2024, 555):
            assert one_run(seed) == one_run(seed)


def test_criterion_4_scenario_argmin_over_1000_random_configurations():
    with criterion(4, "published allocation equals effective-cost argmin, 1000/1000"):
        rng = random.Random(13579)
        started = time.monotonic()
        for trial in range(1000):
            spec, script, loads = _random_scenario(rng)
            result = run_scenario(spec, script)
            oracle = argmin_allocation(
                [(e.name, e.base_cost) for e in spec.evacuators], loads
            )
            assert result.final_decision() == f"allocate({oracle})", (
                f"trial {trial}: spec {spec} script {script} "
                f"published {result.final_decision()}, oracle wants allocate({oracle})"
            )
        print(f"  (1000 configurations in {time.monotonic() - started:.1f}s)")


# --- criterion 5: end-to-end HTTP trace ----------------------------------------

ACCOUNTS = {"pyobject": ("xmpp-secret", "im.bec3.com")}


def test_criterion_5_end_to_end_http_trace():
    with criterion(5, "login/feature/link/put/get sequence on a fresh server, < 5 s"):
        spec = ScenarioSpec(
            (Evacuator("e1", 10), Evacuator("e2", 7), Evacuator("e3", 12)), ()
        )
        stack = AppStack(scenario_programs(spec), ACCOUNTS)
        started = time.monotonic()
        server = stack.start_http()
        base = server.base_url
        try:
            login = requests.post(f"{base}/login", json={
                "username": "pyobject", "password": "xmpp-secret",
                "service": "im.bec3.com",
            }, timeout=5)
            assert login.status_code == 200
            token = login.json()["token"]
            auth = {"Authorization": f"Bearer {token}"}

            feature = requests.post(f"{base}/feature", headers=auth, json={
                "name": "tot2", "path": "truc/bidul21", "type": "gauge",
                "details": "ooo", "widget": "none", "mqtt": False,
            }, timeout=5)
            assert feature.status_code == 201
            feature_id = feature.json()["id"]

            link = requests.post(f"{base}/link", json={
                "source_feature": feature_id, "target_agent": "e2",
            }, timeout=5)
            assert link.status_code == 201

            put = requests.put(f"{base}/feature/{feature_id}", headers=auth,
                               json={"data": 5}, timeout=5)
            assert put.status_code == 202

            expected = "allocate(" + argmin_allocation(
                [("e1", 10), ("e2", 7), ("e3", 12)], {"e2": 5}) + ")"
            deadline = time.monotonic() + 4.0
            body = None
            while time.monotonic() < deadline:
                decision = requests.get(f"{base}/decider/decision", timeout=5)
                if decision.status_code == 200:
                    body = decision.json()
                    if body["decision"] == expected:
                        break
                time.sleep(0.02)
            assert body is not None, "no decision arrived"
            assert body["decision"] == expected == "allocate(e1)"
            assert body["seq"] >= 1
            elapsed = time.monotonic() - started
            assert elapsed < 5.0, f"trace took {elapsed:.2f}s"
            print(f"  (full trace in {elapsed:.2f}s)")
        finally:
            stack.shutdown()


# --- criterion 6: latency bounds over loopback ----------------------------------

def test_criterion_6_latency_bounds_at_desk_scale():
    with criterion(6, "loopback medians: GET <= 450 ms, POST <= 1000 ms (100 samples)"):
        spec = ScenarioSpec(
            (Evacuator("e1", 10), Evacuator("e2", 7)), ()
        )
        stack = AppStack(scenario_programs(spec), ACCOUNTS)
        server = stack.start_http()
        base = server.base_url
        try:
            get_report = bench("GET", 100, f"{base}/decider/decision")
            post_report = bench("POST", 100, f"{base}/e1/")
            print("  GET  " + " | ".join(
                f"{k}={v:.2f}ms" for k, v in [
                    ("min", get_report.min_ms), ("median", get_report.median_ms),
                    ("p95", get_report.p95_ms), ("max", get_report.max_ms)]))
            print("  POST " + " | ".join(
                f"{k}={v:.2f}ms" for k, v in [
                    ("min", post_report.min_ms), ("median", post_report.median_ms),
                    ("p95", post_report.p95_ms), ("max", post_report.max_ms)]))
            assert get_report.samples == 100 and get_report.failures == 0
            assert post_report.samples == 100 and post_report.failures == 0
            assert get_report.median_ms <= 450, f"GET median {get_report.median_ms:.2f}ms"
            assert post_report.median_ms <= 1000, f"POST median {post_report.median_ms:.2f}ms"
        finally:
            stack.shutdown()


# --- criterion 7: percept replacement under a value stream ----------------------

def test_criterion_7_percept_replacement_keeps_latest_only():
    with criterion(7, "N distinct values leave one percept and N add events"):
        rng = random.Random(11111)
        for round_ in range(10):
            n = rng.randint(5, 60)
            values = rng.sample(range(10_000), n)
            stack = AppStack({"sink": parse_program("")}, ACCOUNTS)
            _, login_body = stack.platform.login({
                "username": "pyobject", "password": "xmpp-secret",
                "service": "im.bec3.com",
            })
            token = login_body["token"]
            _, created, _ = stack.platform.create_feature(token, {
                "name": "s", "path": "p", "type": "gauge",
                "details": "", "widget": "none", "mqtt": False,
            })
            stack.platform.create_link(
                {"source_feature": created["id"], "target_agent": "sink"}
            )
            adds = []
            stack.runtime.add_event_listener(
                lambda name, ev: adds.append(str(ev))
                if str(ev).startswith("+data(") else None
            )
            for value in values:
                stack.platform.update_feature(token, created["id"], {"data": value})
            stack.runtime.run_until_quiescent(10 * n + 10)
            data_beliefs = [
                b for b in stack.runtime.belief_snapshot("sink")
                if b.predicate == "data"
            ]
            assert len(adds) == n, f"round {round_}: {len(adds)} add events for {n} values"
            assert len(data_beliefs) == 1
            assert str(data_beliefs[0]) == f"data({values[-1]})[source(percept)]"
