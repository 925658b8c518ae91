"""The two-clause difference-list metainterpreter, run literally.

    metaint([]).
    metaint([G|Gs]) :- cls([G|Bs], Gs), metaint(Bs).

Each clause ``H :- B1, ..., Bn`` is stored as ``cls([H,B1,...,Bn|T], T)``.
Matching the goal list against a clause prepends the body in front of the
remaining goals without any copying of the goal list. The same representation
serves Horn programs (verification) and compiled dual programs
(falsification).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .compiler import CompiledClause, Naf, TrueGoal
from .engine import EngineConfig
from .errors import CrossModuleCall, DepthLimitExceeded, NafGoal
from .reader import format_term
from .terms import Atom, Bindings, Compound, Term, Var, term_vars

NIL = Atom("[]")


def cons(h: Term, t: Term) -> Term:
    return Compound(".", (h, t))


def from_list(items, tail: Term = NIL) -> Term:
    for x in reversed(list(items)):
        tail = cons(x, tail)
    return tail


def to_list(t: Term, b: Bindings | None = None) -> tuple[list[Term], Term]:
    """Elements of a (possibly open) list term and its final tail."""
    out = []
    deref = b.deref if b is not None else (lambda x: x)
    t = deref(t)
    while isinstance(t, Compound) and t.functor == "." and len(t.args) == 2:
        out.append(t.args[0])
        t = deref(t.args[1])
    return out, t


@dataclass(frozen=True)
class DiffClause:
    items: Term  # [head, body... | tail]
    tail: Var
    body_length: int

    @property
    def head(self) -> Term:
        return self.items.args[0]

    def __str__(self) -> str:
        elems, _ = to_list(self.items)
        inner = ", ".join(format_term(e, 999) for e in elems)
        return f"cls([{inner}|{self.tail.name}], {self.tail.name})"


def to_diff_clauses(clauses: list[CompiledClause], module: str | None = None) -> list[DiffClause]:
    """Difference-list form of the clauses of one module."""
    out = []
    for c in clauses:
        if module is None:
            module = c.module
        if c.module != module:
            raise CrossModuleCall(f"clause for {format_term(c.head)} lives in module {c.module}, "
                                  f"not {module}")
        goals = []
        for g in c.body:
            if isinstance(g, TrueGoal):
                continue
            if isinstance(g, Naf):
                raise NafGoal(f"the oracle does not handle not/1 ({c.span})")
            if g.module != module:
                raise CrossModuleCall(f"{format_term(c.head)} calls {g.module}:"
                                      f"{format_term(g.goal)} ({c.span})")
            goals.append(g.goal)
        tail = Var.fresh("Tail")
        out.append(DiffClause(from_list([c.head] + goals, tail), tail, len(goals)))
    return out


def metaint(goals: list[Term], clauses: list[DiffClause],
            cfg: EngineConfig | None = None) -> Iterator[dict[str, Term]]:
    """Enumerate solutions of the goal list; each is a name -> term mapping
    for the named variables of the goals."""
    cfg = cfg or EngineConfig()
    limit = cfg.depth_limit
    b = Bindings()
    acc: dict = {}
    for g in goals:
        term_vars(g, acc)
    named = [v for v in acc.values() if v.name != "_"]
    prepared = [((c.items, c.tail), tuple(term_vars(Compound("cls", (c.items, c.tail)))))
                for c in clauses]
    truncated = False
    # choicepoints: (trail mark, goal list, next clause index, depth)
    stack = [(b.mark(), from_list(goals), 0, 0)]
    while stack:
        mark, gl, i, depth = stack.pop()
        b.undo(mark)
        gl = b.deref(gl)
        if gl == NIL:  # metaint([]).
            yield {v.name: b.apply(v) for v in named}
            continue
        if limit is not None and depth >= limit:
            truncated = True
            continue
        g, gs = gl.args
        bs = Var.fresh("Bs")
        # metaint([G|Gs]) :- cls([G|Bs], Gs), metaint(Bs).
        pattern = Compound("cls", (cons(g, bs), gs))
        while i < len(prepared):
            (items, tail), vs = prepared[i]
            i += 1
            m = b.mark()
            items, tail = b.rename_apart(vs, items, tail)
            if b.unify(Compound("cls", (items, tail)), pattern, cfg.occurs_check):
                if i < len(prepared):
                    stack.append((m, gl, i, depth))
                stack.append((b.mark(), bs, 0, depth + 1))
                break
    if truncated:
        raise DepthLimitExceeded(limit)


def module_oracle(kb, module: str) -> list[DiffClause]:
    return to_diff_clauses(kb.module_clauses(module), module)
