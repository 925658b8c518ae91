import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_dual_program

from symlp import CORPUS, load_corpus
from symlp.compiler import compile_source, flip
from symlp.engine import EngineConfig, solve, succeeds
from symlp.errors import CrossModuleCall, DepthLimitExceeded, NafGoal
from symlp.metaint import NIL, from_list, metaint, module_oracle, to_list
from symlp.reader import format_term, parse_term
from symlp.terms import Compound, variant


def oracle_succeeds(clauses, goal):
    return next(metaint([parse_term(goal) if isinstance(goal, str) else goal], clauses), None) is not None


def test_diff_clause_layout():
    kb, _ = load_corpus("horn1")
    cls = module_oracle(kb, "true")
    assert [str(c) for c in cls] == [
        "cls([p, q, r|Tail], Tail)", "cls([q, r, s|Tail], Tail)",
        "cls([r|Tail], Tail)", "cls([s|Tail], Tail)",
    ]
    for c in cls:
        items, tail = to_list(c.items)
        assert tail is c.tail and items[0] == c.head
        assert len(items) - 1 == c.body_length


def test_empty_module():
    kb, _ = load_corpus("dual1")
    assert module_oracle(kb, "true") == []


def test_example_runs_both_ways():
    horn, _ = load_corpus("horn1")
    dual, _ = load_corpus("dual1")
    assert oracle_succeeds(module_oracle(horn, "true"), "p")
    assert oracle_succeeds(module_oracle(dual, "false"), "p")


def test_empty_goal_list_succeeds():
    assert list(metaint([], [])) == [{}]


def test_lists():
    t = from_list([parse_term("a"), parse_term("b")])
    assert to_list(t) == ([parse_term("a"), parse_term("b")], NIL)


def test_rejects_cross_module_and_naf():
    kb, _ = load_corpus("birds")
    with pytest.raises(CrossModuleCall):
        module_oracle(kb, "true")
    kb, _ = compile_source("a <= not(b).")
    with pytest.raises(NafGoal):
        module_oracle(kb, "true")


def test_answers_match_engine_up_to_renaming():
    kb, _ = compile_source("+edge(a, b).\n+edge(b, c).\n+edge(c, d).\n"
                           "path(X, Y) <= edge(X, Y).\npath(X, Y) <= edge(X, Z), path(Z, Y).\n"
                           "+any(f(W)).")
    cls = module_oracle(kb, "true")
    for q in ("path(a, X)", "path(X, d)", "any(X)"):
        goal = parse_term(q)
        by_oracle = [Compound("ans", tuple(s.values())) for s in metaint([goal], cls)]
        by_sld = [Compound("ans", tuple(a.bindings.values())) for a in solve(kb, f"true:{q}")]
        assert len(by_oracle) == len(by_sld)
        assert all(variant(x, y) for x, y in zip(by_oracle, by_sld))


def test_depth_limit():
    kb, _ = compile_source("loop <= loop.")
    with pytest.raises(DepthLimitExceeded):
        list(metaint([parse_term("loop")], module_oracle(kb, "true"), EngineConfig(depth_limit=30)))


@pytest.mark.parametrize("name", CORPUS)
def test_agreement_on_bundled_programs(name):
    kb, _ = load_corpus(name, "lenient")
    for module in ("true", "false"):
        try:
            cls = module_oracle(kb, module)
        except (CrossModuleCall, NafGoal):
            continue
        heads = {c.head for c in kb.module_clauses(module) if not c.variables}
        for h in heads:
            assert oracle_succeeds(cls, h) == succeeds(kb, f"{module}:{format_term(h)}")


@given(st.integers(0, 2 ** 32))
@settings(max_examples=60, deadline=None)
def test_success_set_is_flip_invariant(seed):
    p = random_dual_program(random.Random(seed), max_atoms=8, max_clauses=12)
    kb, _ = compile_source(p.source())
    dual_cls = module_oracle(kb, "false")
    horn_cls = module_oracle(flip(kb), "true")
    for name in p.names:
        g = parse_term(name)
        assert oracle_succeeds(dual_cls, g) == oracle_succeeds(horn_cls, g)
        assert oracle_succeeds(dual_cls, g) == succeeds(kb, f"false:{name}")
