"""Goal-driven resolution over a compiled knowledge base.

Verification runs on the `true` module, falsification on the `false` module,
both with the same depth-first, left-to-right, source-order discipline as a
Prolog engine. The machine keeps its continuation as an immutable linked list
and its choicepoints on an explicit stack, so deep derivations do not touch
Python's recursion limit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterator

from .compiler import MODULES, Call, CompiledClause, KnowledgeBase, TrueGoal
from .errors import DepthLimitExceeded, NonGroundNaf, SymLPError, TraceUnavailable
from .reader import format_term, parse_term
from .terms import Atom, Bindings, Compound, Term, Var, is_ground, key_of, term_vars


@dataclass
class EngineConfig:
    depth_limit: int | None = None
    occurs_check: bool = False
    trace: bool = False
    default_module: str = "true"

    def __post_init__(self):
        if self.depth_limit is not None and self.depth_limit < 1:
            raise ValueError("depth_limit must be a positive integer")
        if self.default_module not in MODULES:
            raise ValueError(f"default module must be one of {MODULES}")


class QueryError(SymLPError):
    pass


# query goal trees
@dataclass(frozen=True)
class QCall:
    module: str
    goal: Term


@dataclass(frozen=True)
class QNaf:
    module: str
    goal: Term


@dataclass(frozen=True)
class QAnd:
    goals: tuple


@dataclass(frozen=True)
class QOr:
    alternatives: tuple


@dataclass
class Query:
    goal: object  # QCall | QNaf | QAnd | QOr
    variables: list[Var]
    text: str = ""

    @classmethod
    def parse(cls, text: str, default_module: str = "true") -> "Query":
        term = parse_term(text)
        return cls.from_term(term, default_module, text)

    @classmethod
    def from_term(cls, term: Term, default_module: str = "true", text: str = "") -> "Query":
        goal = _query_goal(term, default_module)
        named = [v for v in term_vars(term) if v.name != "_"]
        return cls(goal, named, text or format_term(term))


def _query_goal(t: Term, default_module: str):
    if isinstance(t, Var):
        raise QueryError(f"unbound variable {t.name} as a goal")
    if isinstance(t, Compound) and len(t.args) == 2 and t.functor == ",":
        return QAnd((_query_goal(t.args[0], default_module), _query_goal(t.args[1], default_module)))
    if isinstance(t, Compound) and len(t.args) == 2 and t.functor == ";":
        return QOr((_query_goal(t.args[0], default_module), _query_goal(t.args[1], default_module)))
    if isinstance(t, Compound) and len(t.args) == 2 and t.functor == ":":
        m, g = t.args
        if not isinstance(m, Atom) or m.name not in MODULES:
            raise QueryError(f"unknown module in {format_term(t)}")
        inner = _query_goal(g, m.name)
        if not isinstance(inner, (QCall, QNaf)):
            raise QueryError(f"module qualification needs a single goal: {format_term(t)}")
        return inner
    if isinstance(t, Compound) and len(t.args) == 1 and t.functor in (
            "not", "unverifiable", "unfalsifiable"):
        module = {"unverifiable": "true", "unfalsifiable": "false"}.get(t.functor, default_module)
        inner = _query_goal(t.args[0], module)
        if not isinstance(inner, QCall):
            raise QueryError(f"cannot negate {format_term(t.args[0])}")
        return QNaf(inner.module, inner.goal)
    if t == Atom("true"):
        return QAnd(())
    if not isinstance(t, (Atom, Compound)):
        raise QueryError(f"not a callable goal: {format_term(t)}")
    return QCall(default_module, t)


@dataclass(frozen=True)
class ProofStep:
    node: int
    parent: int | None
    module: str
    head: Term  # instantiated when the answer is produced
    clause: CompiledClause | None  # None for a negated goal
    negated: bool = False


@dataclass
class Answer:
    bindings: dict[str, Term]
    proof: tuple | None = None

    def visible(self) -> dict[str, Term]:
        return {k: v for k, v in self.bindings.items() if not k.startswith("_")}


@dataclass(frozen=True)
class TraceEvent:
    step: int
    module: str
    goal: Term
    span: object
    action: str  # call | exit | fail | redo
    depth: int

    def text(self) -> str:
        where = f" [{self.span}]" if self.span is not None else ""
        return (f"{self.step:>5} {self.action:<4} {'  ' * self.depth}"
                f"{self.module}:{format_term(self.goal, 199)}{where}")

    def json(self) -> str:
        return json.dumps({"step": self.step, "action": self.action, "module": self.module,
                           "goal": format_term(self.goal), "depth": self.depth,
                           "span": str(self.span) if self.span is not None else None})


# continuation items
_CALL, _NAF, _OR, _EXIT = range(4)


def _items(g, depth: int, parent, rest):
    """Push the goal tree g in front of the continuation rest."""
    if isinstance(g, QCall):
        return ((_CALL, g.module, g.goal, depth, parent), rest)
    if isinstance(g, QNaf):
        return ((_NAF, g.module, g.goal, depth, parent), rest)
    if isinstance(g, QAnd):
        for sub in reversed(g.goals):
            rest = _items(sub, depth, parent, rest)
        return rest
    if isinstance(g, QOr):
        return ((_OR, g.alternatives, depth, parent), rest)
    raise TypeError(g)


class _Machine:
    def __init__(self, kb: KnowledgeBase, cfg: EngineConfig, b: Bindings,
                 on_event: Callable[[TraceEvent], None] | None):
        self.kb = kb
        self.cfg = cfg
        self.b = b
        self.on_event = on_event
        self.record = cfg.trace
        self.truncated = False
        self.step = 0
        self.next_node = 0
        self.resolutions = 0

    def emit(self, action, module, goal, span, depth):
        if self.on_event is not None:
            self.step += 1
            self.on_event(TraceEvent(self.step, module, self.b.apply(goal), span, action, depth))

    def run(self, cont) -> Iterator[tuple]:
        """Yield the proof record (or None) each time the continuation empties."""
        b, kb = self.b, self.kb
        limit = self.cfg.depth_limit
        occurs = self.cfg.occurs_check
        stack: list[tuple] = []
        proof = None
        # resume point: (item, clause list, start index) when retrying a call
        retry = None

        while True:
            if retry is None:
                if cont is None:
                    yield proof
                    cont, proof, retry = self._backtrack(stack)
                    if cont is False:
                        return
                    continue
                item, rest = cont
                kind = item[0]
                if kind == _EXIT:
                    _, node, module, goal, span, depth = item
                    self.emit("exit", module, goal, span, depth)
                    cont = rest
                    continue
                if kind == _OR:
                    _, alts, depth, parent = item
                    if len(alts) > 1:
                        stack.append((b.mark(), _OR, (alts, 1, depth, parent), rest, proof))
                    cont = _items(alts[0], depth, parent, rest)
                    continue
                if kind == _NAF:
                    _, module, goal, depth, parent = item
                    if self._naf_holds(module, goal, depth):
                        if self.record:
                            node = self.next_node
                            self.next_node += 1
                            proof = (ProofStep(node, parent, module, goal, None, True), proof)
                        cont = rest
                    else:
                        cont, proof, retry = self._backtrack(stack)
                        if cont is False:
                            return
                    continue
                _, module, goal, depth, parent = item
                goal = b.deref(goal)
                key = key_of(goal)
                if key is None:
                    raise QueryError(f"goal is not callable: {format_term(b.apply(goal))}")
                self.emit("call", module, goal, None, depth)
                if limit is not None and depth >= limit:
                    self.truncated = True
                    self.emit("fail", module, goal, None, depth)
                    cont, proof, retry = self._backtrack(stack)
                    if cont is False:
                        return
                    continue
                clauses = kb.lookup(module, key)
                start = 0
            else:
                item, rest, clauses, start, proof = retry
                retry = None
                _, module, goal, depth, parent = item
                goal = b.deref(goal)
                self.emit("redo", module, goal, None, depth)

            n = len(clauses)
            i = start
            matched = None
            while i < n:
                mark = b.mark()
                c = clauses[i].rename(b)
                i += 1
                if b.unify(c.head, goal, occurs):
                    matched = c
                    if i < n:
                        stack.append((mark, _CALL, (item, clauses, i), rest, proof))
                    break
            if matched is None:
                self.emit("fail", module, goal, None, depth)
                cont, proof, retry = self._backtrack(stack)
                if cont is False:
                    return
                continue
            self.resolutions += 1
            node = None
            if self.record:
                node = self.next_node
                self.next_node += 1
                proof = (ProofStep(node, parent, module, matched.head, clauses[i - 1]), proof)
            if self.on_event is not None:
                rest = ((_EXIT, node, module, goal, matched.span, depth), rest)
            for g in reversed(matched.body):
                if isinstance(g, TrueGoal):
                    continue
                kind = _CALL if isinstance(g, Call) else _NAF
                rest = ((kind, g.module, g.goal, depth + 1, node), rest)
            cont = rest

    def _backtrack(self, stack):
        """Pop the newest choicepoint; returns (cont, proof, retry) or (False, ...)."""
        b = self.b
        while stack:
            mark, kind, data, rest, proof = stack.pop()
            b.undo(mark)
            if kind == _OR:
                alts, idx, depth, parent = data
                if idx + 1 < len(alts):
                    stack.append((b.mark(), _OR, (alts, idx + 1, depth, parent), rest, proof))
                return _items(alts[idx], depth, parent, rest), proof, None
            item, clauses, i = data
            return None, proof, (item, rest, clauses, i, proof)
        return False, None, None

    def _naf_holds(self, module: str, goal: Term, depth: int) -> bool:
        g = self.b.apply(goal)
        if not is_ground(g):
            raise NonGroundNaf(f"not({module}:{format_term(g)})")
        sub = _Machine(self.kb, self.cfg, Bindings(), self.on_event)
        sub.step = self.step
        sub.record = False
        found = False
        for _ in sub.run(((_CALL, module, g, depth, None), None)):
            found = True
            break
        self.step = sub.step
        if not found and sub.truncated:
            self.truncated = True
            return False
        return not found


def solve(kb: KnowledgeBase, q: Query | str, cfg: EngineConfig | None = None,
          on_event: Callable[[TraceEvent], None] | None = None) -> Iterator[Answer]:
    """Lazily enumerate the answers to q.

    Raises DepthLimitExceeded after the last answer when some branch was cut
    off by the depth limit, so a finite failure is never confused with a
    truncated search.
    """
    cfg = cfg or EngineConfig()
    if isinstance(q, str):
        q = Query.parse(q, cfg.default_module)
    b = Bindings()
    m = _Machine(kb, cfg, b, on_event)
    count = 0
    for proof in m.run(_items(q.goal, 0, None, None)):
        count += 1
        bindings = {v.name: b.apply(v) for v in q.variables}
        steps = None
        if cfg.trace:
            lst = []
            while proof is not None:
                s, proof = proof
                lst.append(ProofStep(s.node, s.parent, s.module, b.apply(s.head), s.clause, s.negated))
            steps = tuple(reversed(lst))
        yield Answer(bindings, steps)
    if m.truncated:
        raise DepthLimitExceeded(cfg.depth_limit, count)


def succeeds(kb: KnowledgeBase, q: Query | str, cfg: EngineConfig | None = None) -> bool:
    """True when q has at least one answer (the search stops at the first)."""
    cfg = cfg or EngineConfig()
    if isinstance(q, str):
        q = Query.parse(q, cfg.default_module)
    b = Bindings()
    m = _Machine(kb, cfg, b, None)
    for _ in m.run(_items(q.goal, 0, None, None)):
        return True
    if m.truncated:
        raise DepthLimitExceeded(cfg.depth_limit, 0)
    return False


def _ground_goal(g: Term | str) -> Term:
    if isinstance(g, str):
        g = parse_term(g)
    if not is_ground(g):
        raise NonGroundNaf(format_term(g))
    return g


def unverifiable(kb: KnowledgeBase, g: Term | str, cfg: EngineConfig | None = None) -> bool:
    """Negation as failure on the true module."""
    g = _ground_goal(g)
    return not succeeds(kb, Query(QCall("true", g), []), cfg)


def unfalsifiable(kb: KnowledgeBase, g: Term | str, cfg: EngineConfig | None = None) -> bool:
    """Affirmation as failure to falsify: nothing in the false module derives g."""
    g = _ground_goal(g)
    return not succeeds(kb, Query(QCall("false", g), []), cfg)


def explain(a: Answer) -> str:
    """Indented proof tree of an answer produced with tracing on."""
    if a.proof is None:
        raise TraceUnavailable("answer was produced without trace; enable tracing to explain it")
    children: dict = {}
    for s in a.proof:
        children.setdefault(s.parent, []).append(s)
    lines: list[str] = []

    def walk(parent, indent):
        for s in children.get(parent, []):
            if s.negated:
                lines.append(f"{'  ' * indent}not({s.module}:{format_term(s.head, 199)})  [naf]")
                continue
            span = s.clause.span if s.clause is not None else None
            where = f"  [{span}]" if span is not None else ""
            lines.append(f"{'  ' * indent}{s.module}:{format_term(s.head, 199)}{where}")
            walk(s.node, indent + 1)

    walk(None, 0)
    return "\n".join(lines) if lines else "true"


def proof_tree(a: Answer):
    """The proof as nested ``(module, head, [children])`` tuples."""
    if a.proof is None:
        raise TraceUnavailable("answer was produced without trace")
    children: dict = {}
    for s in a.proof:
        children.setdefault(s.parent, []).append(s)

    def build(s):
        if s.negated:
            return ("not", s.module, s.head, [])
        return (s.module, s.head, [build(c) for c in children.get(s.node, [])])

    return [build(s) for s in children.get(None, [])]
