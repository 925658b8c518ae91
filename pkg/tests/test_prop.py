import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_dual_program, random_horn_program

from symlp import load_corpus
from symlp.compiler import CompiledClause, KnowledgeBase, Naf, compile_source, flip
from symlp.engine import succeeds
from symlp.errors import NonStratified, NotPropositional, UnknownAtom
from symlp.prop import (
    PropProgram, check_constraints, entails, falsifies, ground_check, herbrand_constants,
    instantiate, is_least_fixpoint, least_models, minimal_model, stratified_eval, stratify,
    verifies,
)
from symlp.reader import format_term
from symlp.terms import Atom


def prog(text):
    kb, _ = compile_source(text)
    return ground_check(kb)


def test_ground_check_nuclear_interns_each_sentence_once():
    kb, _ = load_corpus("nuclear", "lenient")
    p = ground_check(kb)
    assert len(p.atoms) == 102
    assert len({a.name for a in p.atoms}) == len(p.atoms)


def test_ground_check_rejects_variables():
    kb, _ = load_corpus("birds")
    with pytest.raises(NotPropositional) as ei:
        ground_check(kb)
    assert [(s.start_line, s.file) for s in ei.value.spans] == [(4, "birds.symlp")]


def test_ground_check_empty():
    p = ground_check(KnowledgeBase())
    assert p.atoms == [] and p.heads == []


def test_program_invariants():
    kb, _ = load_corpus("nuclear", "lenient")
    p = ground_check(kb)
    positions = sorted((nd, ci) for ci, body in enumerate(p.bodies) for nd in body)
    listed = sorted((nd, ci) for nd, cis in enumerate(p.occurrences) for ci in cis)
    assert positions == listed
    assert all(h // 2 < len(p.atoms) for h in p.heads)


def test_example_minimal_model():
    kb, _ = load_corpus("dual1")
    m = minimal_model(ground_check(kb), "false")
    assert m.names() == ["p", "q", "r", "s"]


def test_small_models():
    assert minimal_model(prog("+a."), "true").names() == ["a"]
    assert minimal_model(prog("a <= b.\nb <= a."), "true").names() == []


def test_entails_and_falsifies():
    kb, _ = load_corpus("nuclear", "lenient")
    models = least_models(ground_check(kb))
    assert falsifies(models, "escalation risks after use of tactical nuclear weapons")
    dual, _ = load_corpus("dual1")
    dm = least_models(ground_check(dual))
    assert falsifies(dm, "p") and not verifies(dm, "p")
    empty = minimal_model(prog("+z."), "false")
    assert not entails(empty, Atom("z"))
    assert "p" in dm["false"]


def test_unknown_atom_is_an_error():
    dual, _ = load_corpus("dual1")
    dm = least_models(ground_check(dual))
    with pytest.raises(UnknownAtom):
        falsifies(dm, "nonexistent")


def test_linearity_counters():
    kb, _ = load_corpus("nuclear", "lenient")
    p = ground_check(kb)
    m = least_models(p)["false"]
    # everything is falsified, so every body position is consumed exactly once
    assert m.stats["decrements"] == p.size
    assert m.stats["fired"] == len(p.heads)


@given(st.integers(0, 2 ** 32))
@settings(max_examples=100)
def test_decrements_bounded_by_body_size(seed):
    p = random_horn_program(random.Random(seed))
    kb, _ = compile_source(p.source())
    pp = ground_check(kb)
    m = least_models(pp)["true"]
    assert m.stats["decrements"] <= pp.size
    assert m.stats["fired"] <= len(pp.heads)


@given(st.integers(0, 2 ** 32))
@settings(max_examples=200)
def test_least_model_matches_brute_force(seed):
    p = random_horn_program(random.Random(seed))
    pp = prog(p.source())
    m = minimal_model(pp, "true")
    assert set(m.names()) == {p.names[i] for i in p.least_model()}
    assert is_least_fixpoint(pp, {2 * i for i in m.atoms})


@given(st.integers(0, 2 ** 32))
@settings(max_examples=100, deadline=None)
def test_engines_agree_on_acyclic_programs(seed):
    p = random_dual_program(random.Random(seed))
    kb, _ = compile_source(p.source())
    falsified = set(least_models(ground_check(kb))["false"].names())
    for name in p.names:
        assert succeeds(kb, f"false:{name}") == (name in falsified)


@pytest.mark.parametrize("name", ["dual1", "gravity", "constraints", "nuclear"])
def test_flip_correspondence(name):
    kb, _ = load_corpus(name, "lenient")
    original = least_models(ground_check(kb))
    flipped = least_models(ground_check(flip(kb)))
    assert original["false"].names() == flipped["true"].names()
    assert original["true"].names() == flipped["false"].names()


@pytest.mark.parametrize("name", ["dual1", "horn1", "gravity", "nuclear"])
def test_engine_agreement_on_bundled_programs(name):
    kb, _ = load_corpus(name, "lenient")
    p = ground_check(kb)
    models = least_models(p)
    for a in p.atoms:
        for module in ("true", "false"):
            assert succeeds(kb, f"{module}:{format_term(a)}") == (a in models[module])


# -------------------------------------------------------------- constraints

def test_denials():
    p = prog("+a.\nfalse <= a, b.")
    assert check_constraints(p, least_models(p)).ok
    p = prog("+a.\n+b.\nfalse <= a, b.")
    report = check_constraints(p, least_models(p))
    assert not report.ok and report.violations[0].kind == "denial"


def test_dual_assertions():
    p = prog("-a.\n-b.\ntrue => a ; b.")
    report = check_constraints(p, least_models(p))
    assert [v.kind for v in report.violations] == ["dual_assertion"]
    p = prog("-a.\ntrue => a ; b.")
    assert check_constraints(p, least_models(p)).ok


def test_constraint_report_rendering():
    kb, _ = load_corpus("constraints")
    p = ground_check(kb)
    report = check_constraints(p, least_models(p))
    assert report.render() == (
        "constraints.symlp:5:1-5:19: denial violated: false <= wet, cold (all verified)\n"
        "constraints.symlp:10:1-10:21: dual assertion violated: true => sunny ; warm (all falsified)\n")
    p = prog("+a.\nfalse <= a, b.")
    assert check_constraints(p, least_models(p)).render() == "all 1 constraints satisfied\n"


# ------------------------------------------------------------ stratification

def negative_cycle():
    a = Atom("a")
    kb = KnowledgeBase()
    kb.add(CompiledClause("true", a, (Naf("false", a),)))
    kb.add(CompiledClause("false", a, (Naf("true", a),)))
    return kb


def test_negative_cycle_rejected_with_witness():
    with pytest.raises(NonStratified) as ei:
        stratified_eval(negative_cycle())
    cycle = ei.value.cycle
    assert sorted((m, a) for m, a, _ in cycle) == [("false", "a"), ("true", "a")]
    assert all(neg for _, _, neg in cycle)


def test_positive_cycles_are_fine():
    p = prog("a <= b.\nb <= a.\n+c.\nd <= not(a), c.")
    assert stratified_eval(p)["true"].names() == ["c", "d"]


def test_stratified_legal():
    kb, _ = load_corpus("legal")
    assert [format_term(c) for c in herbrand_constants(kb)] == ["alice", "bob", "dna", "fingerprints"]
    models = stratified_eval(instantiate(kb))
    assert models["true"].names() == ["exonerated(alice)", "investigated(bob)", "suspect(alice)", "suspect(bob)"]


def test_strata_order_negation():
    p = prog("+c.\nb <= not(c).\na <= not(b).")
    s = stratify(p)
    node = lambda name: 2 * p.atom_id(name)  # noqa: E731
    assert s[node("c")] < s[node("b")] < s[node("a")]
    assert stratified_eval(p)["true"].names() == ["a", "c"]


def test_least_models_refuses_negation():
    with pytest.raises(ValueError):
        least_models(prog("a <= not(b)."))


@given(st.integers(0, 2 ** 32))
@settings(max_examples=50)
def test_naf_free_stratified_eval_equals_minimal_model(seed):
    p = random_horn_program(random.Random(seed))
    pp = prog(p.source())
    assert stratified_eval(pp)["true"].atoms == minimal_model(pp, "true").atoms


def test_prop_program_direct_construction():
    p = PropProgram()
    p.add_clause("true", Atom("a"), [], [], None)
    p.add_clause("true", Atom("b"), [("true", Atom("a"))], [], None)
    assert minimal_model(p).names() == ["a", "b"]
