"""Compile SymLP source clauses into Horn clauses housed in the `true` and
`false` modules.

Horn rules keep their shape. A dual rule ``H => B`` becomes one or more
false-module clauses: the body is dualized (``,`` and ``;`` swapped) and the
result is distributed into disjunctive normal form, one clause per disjunct.
Falsifying ``H`` then means falsifying every goal of some clause body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .errors import (CompileError, Diagnostic, NafInDualBody, NonPropositional,
                     QualifiedGoalInDualBody, Span, VariableHead)
from .reader import (Denial, DualAssertion, DualRule, HornRule, NegativeFact,
                     PositiveFact, SourceClause, format_term, parse_program)
from .terms import Atom, Bindings, Compound, Term, Var, is_ground, key_of, term_vars

MODULES = ("true", "false")


@dataclass(frozen=True)
class Call:
    module: str
    goal: Term


@dataclass(frozen=True)
class Naf:
    module: str
    goal: Term


@dataclass(frozen=True)
class TrueGoal:
    pass


TRUE_GOAL = TrueGoal()
BodyGoal = Call | Naf | TrueGoal


@dataclass(frozen=True)
class CompiledClause:
    module: str
    head: Term
    body: tuple
    span: Span | None = field(default=None, compare=False)
    variables: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.variables:
            acc: dict = {}
            term_vars(self.head, acc)
            for g in self.body:
                if not isinstance(g, TrueGoal):
                    term_vars(g.goal, acc)
            object.__setattr__(self, "variables", tuple(acc.values()))

    @property
    def key(self) -> tuple[str, int]:
        return key_of(self.head)

    @property
    def is_fact(self) -> bool:
        return all(isinstance(g, TrueGoal) for g in self.body)

    def rename(self, b: Bindings) -> "CompiledClause":
        """Activation copy with fresh variables (the clause itself if ground)."""
        if not self.variables:
            b.renamings += 1
            return self
        terms = [self.head] + [g.goal for g in self.body if not isinstance(g, TrueGoal)]
        new = iter(b.rename_apart(self.variables, *terms))
        head = next(new)
        body = tuple(g if isinstance(g, TrueGoal) else type(g)(g.module, next(new))
                     for g in self.body)
        return CompiledClause(self.module, head, body, self.span, ())

    def __str__(self) -> str:
        return format_compiled(self)


def rename_apart(c: CompiledClause, b: Bindings) -> CompiledClause:
    return c.rename(b)


def format_goal(g, module: str | None = None) -> str:
    if isinstance(g, TrueGoal):
        return "true"
    if isinstance(g, Naf):
        return f"not({g.module}:{format_term(g.goal, 199)})"
    if g.module == module:
        return format_term(g.goal, 999)
    return f"{g.module}:{format_term(g.goal, 199)}"


def format_compiled(c: CompiledClause) -> str:
    """``module: head :- g1, g2.`` with goals of the clause's own module unqualified."""
    body = ", ".join(format_goal(g, c.module) for g in c.body) or "true"
    return f"{c.module}: {format_term(c.head, 1199)} :- {body}."


@dataclass
class KnowledgeBase:
    true_module: dict = field(default_factory=dict)
    false_module: dict = field(default_factory=dict)
    denials: list = field(default_factory=list)           # (tuple of atoms, span)
    dual_assertions: list = field(default_factory=list)   # (tuple of atoms, span)
    clauses: list = field(default_factory=list)           # all compiled clauses in source order

    def module(self, name: str) -> dict:
        if name == "true":
            return self.true_module
        if name == "false":
            return self.false_module
        raise KeyError(name)

    def lookup(self, module: str, key) -> list:
        return self.module(module).get(key, [])

    def add(self, c: CompiledClause) -> None:
        self.module(c.module).setdefault(c.key, []).append(c)
        self.clauses.append(c)

    def module_clauses(self, name: str) -> list[CompiledClause]:
        return [c for c in self.clauses if c.module == name]

    def provenance(self, c: CompiledClause) -> Span | None:
        return c.span

    def is_propositional(self) -> bool:
        return all(not c.variables for c in self.clauses) and all(
            is_ground(a) for body, _ in self.denials + self.dual_assertions for a in body)

    def dump(self) -> str:
        lines = [format_compiled(c) for m in MODULES for c in self.clauses if c.module == m]
        return "".join(line + "\n" for line in lines)


# --------------------------------------------------------------------------
# body transformations

def dualize(b: Term) -> Term:
    """Swap every ``,`` for ``;`` and back, leaving the leaves alone."""
    if isinstance(b, Compound) and len(b.args) == 2 and b.functor in (",", ";"):
        other = ";" if b.functor == "," else ","
        return Compound(other, (dualize(b.args[0]), dualize(b.args[1])))
    return b


def to_dnf(b: Term) -> list[list[Term]]:
    """Distribute a ``,``/``;`` tree into a list of conjunctions, in order."""
    if isinstance(b, Compound) and len(b.args) == 2:
        if b.functor == ";":
            return to_dnf(b.args[0]) + to_dnf(b.args[1])
        if b.functor == ",":
            return [x + y for x, y in product(to_dnf(b.args[0]), to_dnf(b.args[1]))]
    return [[b]]


def disj2conj(b: Term) -> Term:
    """Turn a pure disjunction into the matching conjunction."""
    if isinstance(b, Compound) and b.functor == ";" and len(b.args) == 2:
        return Compound(",", (disj2conj(b.args[0]), disj2conj(b.args[1])))
    return b


def _flatten(b: Term, op: str) -> list[Term]:
    if isinstance(b, Compound) and b.functor == op and len(b.args) == 2:
        return _flatten(b.args[0], op) + _flatten(b.args[1], op)
    return [b]


def _check_head(h: Term, span) -> None:
    if not isinstance(h, (Atom, Compound)):
        raise VariableHead(f"clause head must be an atom or compound, got {format_term(h)}", span)


def _horn_goal(g: Term, span, default_module: str = "true"):
    if isinstance(g, Var):
        raise CompileError(f"variable goal {format_term(g)} is not supported", span)
    if g == Atom("true"):
        return TRUE_GOAL
    if isinstance(g, Compound) and g.functor == ":" and len(g.args) == 2:
        m, inner = g.args
        if not isinstance(m, Atom) or m.name not in MODULES:
            raise CompileError(f"unknown module in {format_term(g)}; use true: or false:", span)
        return Call(m.name, _plain_goal(inner, span))
    if isinstance(g, Compound) and g.functor == "not":
        if len(g.args) != 1:
            raise CompileError("not/1 takes a single goal", span)
        inner = _horn_goal(g.args[0], span, default_module)
        if not isinstance(inner, Call):
            raise CompileError(f"cannot negate {format_term(g.args[0])}", span)
        return Naf(inner.module, inner.goal)
    return Call(default_module, _plain_goal(g, span))


def _plain_goal(g: Term, span) -> Term:
    if not isinstance(g, (Atom, Compound)) or key_of(g) in ((",", 2), (";", 2), (":", 2)):
        raise CompileError(f"not a callable goal: {format_term(g)}", span)
    return g


def _dual_goal(g: Term, span):
    if isinstance(g, Var):
        raise CompileError(f"variable goal {format_term(g)} in dual body", span)
    if isinstance(g, Compound) and g.functor == "not":
        raise NafInDualBody("not/1 is not allowed in the body of a dual rule", span)
    if isinstance(g, Compound) and g.functor == ":" and len(g.args) == 2:
        raise QualifiedGoalInDualBody(
            f"module-qualified goal {format_term(g)} is not allowed in a dual rule", span)
    if g == Atom("false"):
        return TRUE_GOAL  # falsity is falsified by definition
    return Call("false", _plain_goal(g, span))


def _simplify(body: list) -> tuple:
    goals = tuple(g for g in body if not isinstance(g, TrueGoal))
    return goals or (TRUE_GOAL,)


def compile_clause(c: SourceClause) -> list[CompiledClause] | tuple:
    """Compile one source clause.

    Returns a list of compiled clauses, or a ``("denial"|"dual_assertion",
    atoms, span)`` constraint record.
    """
    span = c.span
    if isinstance(c, PositiveFact):
        _check_head(c.head, span)
        return [CompiledClause("true", c.head, (TRUE_GOAL,), span)]
    if isinstance(c, NegativeFact):
        _check_head(c.head, span)
        return [CompiledClause("false", c.head, (TRUE_GOAL,), span)]
    if isinstance(c, HornRule):
        _check_head(c.head, span)
        out = []
        for conj in to_dnf(c.body):
            body = [_horn_goal(g, span) for g in conj]
            out.append(CompiledClause("true", c.head, _simplify(body), span))
        return out
    if isinstance(c, DualRule):
        _check_head(c.head, span)
        if c.body == Atom("false"):
            return [CompiledClause("false", c.head, (TRUE_GOAL,), span)]
        # validate the leaves before restructuring so errors name the source goal
        for leaf in _flatten_all(c.body):
            _dual_goal(leaf, span)
        out = []
        for conj in to_dnf(dualize(c.body)):
            body = [_dual_goal(g, span) for g in conj]
            out.append(CompiledClause("false", c.head, _simplify(body), span))
        return out
    if isinstance(c, Denial):
        atoms = tuple(_plain_goal(g, span) for g in _flatten(c.body, ","))
        return ("denial", atoms, span)
    if isinstance(c, DualAssertion):
        atoms = tuple(_plain_goal(g, span) for g in _flatten(c.body, ";"))
        return ("dual_assertion", atoms, span)
    raise CompileError(f"cannot compile {c!r}", span)


def _flatten_all(b: Term) -> list[Term]:
    if isinstance(b, Compound) and len(b.args) == 2 and b.functor in (",", ";"):
        return _flatten_all(b.args[0]) + _flatten_all(b.args[1])
    return [b]


@dataclass
class CompileResult:
    kb: KnowledgeBase
    diagnostics: list[Diagnostic]

    def __iter__(self):
        return iter((self.kb, self.diagnostics))


def _diag(severity, msg, span: Span | None) -> Diagnostic:
    if span is None:
        return Diagnostic(severity, msg)
    return Diagnostic(severity, msg, span.start_line, span.start_col, span.file)


def compile_program(cs, strict: bool = True) -> CompileResult:
    """Compile a list of source clauses into a KnowledgeBase.

    With ``strict`` false, clauses that fail to compile are reported as error
    diagnostics and skipped; otherwise the first CompileError propagates.
    """
    kb = KnowledgeBase()
    diags: list[Diagnostic] = []
    for c in cs:
        try:
            res = compile_clause(c)
        except CompileError as err:
            if strict:
                raise
            diags.append(_diag("error", err.message, err.span))
            continue
        if isinstance(res, tuple):
            kind, atoms, span = res
            (kb.denials if kind == "denial" else kb.dual_assertions).append((atoms, span))
            continue
        for cc in res:
            kb.add(cc)
            unsafe = _unsafe_naf_vars(cc)
            if unsafe:
                names = ", ".join(sorted({v.name for v in unsafe}))
                diags.append(_diag("warning", f"negated goal may be called non-ground "
                                   f"(variables {names} not bound earlier)", cc.span))
    diags.extend(_contradictions(kb))
    return CompileResult(kb, diags)


def _unsafe_naf_vars(c: CompiledClause) -> list[Var]:
    seen: dict = {}
    term_vars(c.head, seen)
    bad = []
    for g in c.body:
        if isinstance(g, Naf):
            bad.extend(v for v in term_vars(g.goal) if v.id not in seen)
        if isinstance(g, (Call, Naf)):
            term_vars(g.goal, seen)
    return bad


def _contradictions(kb: KnowledgeBase) -> list[Diagnostic]:
    pos = {c.head: c for cl in kb.true_module.values() for c in cl
           if c.is_fact and not c.variables}
    out = []
    for cl in kb.false_module.values():
        for c in cl:
            if c.is_fact and not c.variables and c.head in pos:
                out.append(_diag("warning", f"{format_term(c.head)} is asserted both true "
                                 "and false", c.span))
    return out


def compile_source(text: str, mode: str = "strict", file: str | None = None):
    """Parse and compile in one go; returns ``(kb, diagnostics)``."""
    parsed = parse_program(text, mode, file)
    res = compile_program(parsed.clauses, strict=(mode == "strict"))
    return res.kb, parsed.diagnostics + res.diagnostics


# --------------------------------------------------------------------------
# duality

def flip(kb: KnowledgeBase) -> KnowledgeBase:
    """Swap the two modules of a propositional knowledge base.

    Every clause moves to the other module and so do the modules of its body
    goals; denials and dual assertions trade places. Applying it twice gives
    back the original program.
    """
    bad = [c.span for c in kb.clauses if c.variables]
    if bad:
        raise NonPropositional("flip needs a propositional program", bad[0])
    other = {"true": "false", "false": "true"}
    out = KnowledgeBase()
    for c in kb.clauses:
        body = tuple(g if isinstance(g, TrueGoal) else type(g)(other[g.module], g.goal)
                     for g in c.body)
        out.add(CompiledClause(other[c.module], c.head, body, c.span))
    out.denials = list(kb.dual_assertions)
    out.dual_assertions = list(kb.denials)
    return out


def same_kb(a: KnowledgeBase, b: KnowledgeBase) -> bool:
    return (a.clauses == b.clauses and a.denials == b.denials
            and a.dual_assertions == b.dual_assertions)
