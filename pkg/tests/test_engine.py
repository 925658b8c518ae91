import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_dual_program

from symlp import load_corpus
from symlp.compiler import compile_source, flip
from symlp.engine import (
    EngineConfig, Query, QueryError, explain, proof_tree, solve, succeeds, unfalsifiable,
    unverifiable,
)
from symlp.errors import DepthLimitExceeded, NonGroundNaf, TraceUnavailable
from symlp.reader import format_term
from symlp.terms import Compound, variant


def values(kb, q, var="X", cfg=None):
    return [format_term(a.bindings[var]) for a in solve(kb, q, cfg)]


@pytest.fixture(scope="module")
def kbs():
    return {n: load_corpus(n)[0] for n in ("dual1", "birds", "stocks", "legal", "gravity")}


def test_example_falsification(kbs):
    answers = list(solve(kbs["dual1"], "false:p"))
    assert len(answers) == 1 and answers[0].bindings == {}


def test_defaults(kbs):
    assert values(kbs["birds"], "true:fly(X)") == ["eagle_joe", "humming_jenny"]


def test_mixed_advice_order(kbs):
    assert values(kbs["stocks"], "true:cautious_buy(X)") == ["qqq", "apple", "meta", "berkshire"]


def test_legal(kbs):
    assert values(kbs["legal"], "exonerated(X)") == ["alice"]
    assert values(kbs["legal"], "investigated(X)") == ["bob"]


def test_theory_falsification(kbs):
    assert succeeds(kbs["gravity"], "false:'Negative gravity fields are possible'")


def test_unverifiable(kbs):
    assert unverifiable(kbs["birds"], "fly(tweety)")
    assert not unverifiable(kbs["birds"], "fly(eagle_joe)")
    assert unverifiable(kbs["birds"], "nonexistent_atom")


def test_unfalsifiable(kbs):
    assert unfalsifiable(kbs["legal"], "proven_guilty(bob)")
    assert not unfalsifiable(kbs["legal"], "proven_guilty(alice)")
    assert unfalsifiable(kbs["legal"], "nonexistent_atom")


def test_naf_requires_ground_goals(kbs):
    with pytest.raises(NonGroundNaf):
        unverifiable(kbs["birds"], "fly(X)")
    with pytest.raises(NonGroundNaf):
        list(solve(kbs["birds"], "not(fly(X))"))


def test_query_forms(kbs):
    legal = kbs["legal"]
    assert succeeds(legal, "unfalsifiable(proven_guilty(bob))")
    assert succeeds(legal, "unverifiable(exonerated(bob))")
    assert succeeds(legal, "suspect(X), not(false:proven_guilty(X))")
    assert values(legal, "exonerated(X) ; investigated(X)") == ["alice", "bob"]
    assert succeeds(legal, "true")
    assert values(kbs["birds"], "fly(X)", cfg=EngineConfig(default_module="true")) == ["eagle_joe", "humming_jenny"]
    assert succeeds(kbs["dual1"], "p", EngineConfig(default_module="false"))


def test_bad_queries():
    with pytest.raises(QueryError):
        Query.parse("3")
    with pytest.raises(ValueError):
        EngineConfig(depth_limit=0)


def test_query_variables_exclude_anonymous(kbs):
    q = Query.parse("found_of(X, _anything), found_of(_, Y)")
    assert [v.name for v in q.variables] == ["X", "_anything", "Y"]
    answers = list(solve(kbs["legal"], "false:found_of(alice, _anything)"))
    assert len(answers) == 1 and answers[0].visible() == {}


def test_explain_example(kbs):
    (a,) = solve(kbs["dual1"], "false:p", EngineConfig(trace=True))
    tree = proof_tree(a)
    shape = lambda t: (t[0], format_term(t[1]), [shape(k) for k in t[2]])  # noqa: E731
    assert [shape(t) for t in tree] == [
        ("false", "p", [("false", "q", [("false", "r", []), ("false", "s", [])]), ("false", "r", [])])]
    text = explain(a)
    assert text.splitlines()[0].startswith("false:p  [dual1.symlp:4:1")


def test_explain_fact_is_single_node():
    kb, _ = compile_source("-r.")
    (a,) = solve(kb, "false:r", EngineConfig(trace=True))
    assert len(explain(a).splitlines()) == 1


def test_explain_rule_and_fact(kbs):
    (a,) = solve(kbs["birds"], "true:fly(eagle_joe)", EngineConfig(trace=True))
    lines = explain(a).splitlines()
    assert lines[0].startswith("true:fly(eagle_joe)")
    assert lines[1].strip().startswith("true:bird(eagle_joe)")
    assert lines[2].strip().startswith("false:challanged_bird(eagle_joe)")
    assert len(lines) == 3


def test_explain_needs_trace(kbs):
    (a,) = solve(kbs["dual1"], "false:p")
    with pytest.raises(TraceUnavailable):
        explain(a)


def test_explain_shows_naf(kbs):
    (a,) = solve(kbs["legal"], "investigated(X)", EngineConfig(trace=True))
    assert "not(false:proven_guilty(bob))  [naf]" in explain(a)


def test_trace_events(kbs):
    events = []
    list(solve(kbs["dual1"], "false:p", EngineConfig(trace=True), on_event=events.append))
    actions = [e.action for e in events]
    assert actions[0] == "call" and "exit" in actions
    assert set(actions) <= {"call", "exit", "fail", "redo"}
    assert [e.step for e in events] == sorted(e.step for e in events)
    rec = json.loads(events[0].json())
    assert rec["module"] == "false" and rec["goal"] == "p" and rec["action"] == "call"
    assert "call" in events[0].text()


def test_depth_limit_distinguishes_truncation():
    kb, _ = compile_source("loop <= loop.\n+loop2.\nboth <= loop2.\nboth <= loop.")
    with pytest.raises(DepthLimitExceeded):
        succeeds(kb, "loop", EngineConfig(depth_limit=50))
    # the answer found before truncation is delivered first
    gen = solve(kb, "both", EngineConfig(depth_limit=20))
    assert next(gen).bindings == {}
    with pytest.raises(DepthLimitExceeded) as ei:
        next(gen)
    assert ei.value.answers == 1


def test_unbounded_deep_recursion_does_not_overflow():
    n = 20000
    text = "\n".join(f"a{i} => a{i + 1}." for i in range(n)) + f"\n-a{n}."
    kb, _ = compile_source(text)
    assert succeeds(kb, "false:a0")


def test_first_order_recursion():
    kb, _ = compile_source("+edge(a, b).\n+edge(b, c).\n+edge(c, d).\n"
                           "path(X, Y) <= edge(X, Y).\npath(X, Y) <= edge(X, Z), path(Z, Y).")
    assert values(kb, "path(a, X)") == ["b", "c", "d"]


def test_occurs_check_config():
    kb, _ = compile_source("+eq(X, X).")
    assert succeeds(kb, "eq(Y, f(Y))")
    assert not succeeds(kb, "eq(Y, f(Y))", EngineConfig(occurs_check=True))


# -------------------------------------------------------------- properties

@given(st.integers(0, 2 ** 32))
@settings(max_examples=60, deadline=None)
def test_duality_with_flip(seed):
    p = random_dual_program(random.Random(seed), max_atoms=8, max_clauses=12)
    kb, _ = compile_source(p.source())
    horn = flip(kb)
    for name in p.names:
        assert succeeds(kb, f"false:{name}") == succeeds(horn, f"true:{name}")


@pytest.mark.parametrize("name,query", [
    ("birds", "true:fly(X)"), ("stocks", "true:cautious_buy(X)"),
    ("legal", "exonerated(X) ; investigated(X)"), ("legal", "false:found_of(X, Y)"),
])
def test_answer_stability(kbs, name, query):
    kb = kbs[name]

    def answers(cfg=None):
        # unbound answer variables are fresh per run, so compare up to renaming
        return [Compound("ans", tuple(a.bindings.values())) for a in solve(kb, query, cfg)]

    plain = answers()
    for cfg in (EngineConfig(trace=True), EngineConfig(depth_limit=100)):
        again = answers(cfg)
        assert len(again) == len(plain) and all(variant(x, y) for x, y in zip(again, plain))


@pytest.mark.parametrize("name,query", [
    ("birds", "true:fly(X)"), ("stocks", "true:cautious_buy(X)"),
    ("legal", "exonerated(X) ; investigated(X)"),
])
def test_instantiated_answers_succeed(kbs, name, query):
    kb = kbs[name]
    for a in solve(kb, query):
        ground = query
        for var, val in a.bindings.items():
            ground = ground.replace(var, format_term(val))
        assert succeeds(kb, ground)
