"""Linear-time minimal models for ground programs.

Atoms are interned to dense integer ids. A node is an (atom, module) pair
encoded as ``2 * atom_id + module_bit`` so both modules share one table and
cross-module calls cost nothing extra. Each clause keeps a counter of body
positions that are not yet true; when an atom becomes true the counters of the
clauses whose bodies mention it are decremented, and a clause whose counter
reaches zero fires its head. Every body position is decremented at most once,
so a run is linear in the size of the program.
"""

from __future__ import annotations

import gc
from contextlib import contextmanager
from dataclasses import dataclass, field
from itertools import product

import networkx as nx

from .compiler import Call, CompiledClause, KnowledgeBase, Naf, TrueGoal
from .errors import NonStratified, NotPropositional, UnknownAtom
from .reader import format_term, parse_term
from .terms import Atom, Compound, Number, Term, substitute, term_vars

MODULE_BIT = {"true": 0, "false": 1}
BIT_MODULE = ("true", "false")


@contextmanager
def _gc_paused():
    """Bulk indexing allocates many small lists but no reference cycles;
    letting the cyclic collector rescan the whole term graph meanwhile makes
    the cost grow faster than the program."""
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def node_of(atom_id: int, module: str) -> int:
    return 2 * atom_id + MODULE_BIT[module]


@dataclass
class PropProgram:
    atoms: list = field(default_factory=list)       # id -> Term
    index: dict = field(default_factory=dict)       # Term -> id
    heads: list = field(default_factory=list)       # clause -> head node
    bodies: list = field(default_factory=list)      # clause -> positive body nodes
    nafs: list = field(default_factory=list)        # clause -> negated body nodes
    spans: list = field(default_factory=list)
    occurrences: list = field(default_factory=list)  # node -> clause ids, one per body position
    denials: list = field(default_factory=list)     # (atom ids, span)
    dual_assertions: list = field(default_factory=list)

    def intern(self, t: Term) -> int:
        i = self.index.get(t)
        if i is None:
            i = self.index[t] = len(self.atoms)
            self.atoms.append(t)
            self.occurrences.append([])
            self.occurrences.append([])
        return i

    def add_clause(self, module: str, head: Term, body, naf=(), span=None) -> int:
        """body and naf are sequences of (module, Term) pairs."""
        ci = len(self.heads)
        self.heads.append(node_of(self.intern(head), module))
        bnodes = [node_of(self.intern(t), m) for m, t in body]
        self.bodies.append(bnodes)
        self.nafs.append([node_of(self.intern(t), m) for m, t in naf])
        self.spans.append(span)
        for nd in bnodes:
            self.occurrences[nd].append(ci)
        return ci

    @property
    def size(self) -> int:
        """Total number of body positions."""
        return sum(len(b) for b in self.bodies)

    def atom_id(self, atom) -> int:
        if isinstance(atom, str):
            t = Atom(atom)
            if t in self.index:
                return self.index[t]
            try:
                t = parse_term(atom)
            except Exception:
                raise UnknownAtom(atom) from None
            atom = t
        i = self.index.get(atom)
        if i is None:
            raise UnknownAtom(format_term(atom))
        return i

    def name(self, atom_id: int) -> str:
        return format_term(self.atoms[atom_id])

    def module_clauses(self, module: str) -> list[int]:
        bit = MODULE_BIT[module]
        return [ci for ci, h in enumerate(self.heads) if h & 1 == bit]

    @property
    def has_naf(self) -> bool:
        return any(self.nafs)


@dataclass(frozen=True)
class Model:
    module: str
    atoms: frozenset  # atom ids
    program: PropProgram = field(compare=False, repr=False)
    closed: bool = True
    stats: dict = field(default_factory=dict, compare=False)

    def names(self) -> list[str]:
        return sorted(self.program.name(i) for i in self.atoms)

    def __contains__(self, atom) -> bool:
        return entails(self, atom)


def ground_check(kb: KnowledgeBase) -> PropProgram:
    """Index a variable-free knowledge base; NotPropositional lists every clause
    that still has variables."""
    bad = [c.span for c in kb.clauses if c.variables]
    bad += [span for atoms, span in kb.denials + kb.dual_assertions
            if any(term_vars(a) for a in atoms)]
    if bad:
        raise NotPropositional(bad)
    p = PropProgram()
    # bulk indexing: this loop dominates the cost on large programs, so the
    # interning is inlined rather than going through add_clause
    index, atoms, occ = p.index, p.atoms, p.occurrences
    heads, bodies, nafs, spans = p.heads, p.bodies, p.nafs, p.spans
    bit = MODULE_BIT

    def node(t, m):
        i = index.get(t)
        if i is None:
            i = index[t] = len(atoms)
            atoms.append(t)
            occ.append([])
            occ.append([])
        return 2 * i + bit[m]

    with _gc_paused():
        for c in kb.clauses:
            ci = len(heads)
            heads.append(node(c.head, c.module))
            bnodes, naf = [], []
            for g in c.body:
                if type(g) is Call:
                    bnodes.append(node(g.goal, g.module))
                elif type(g) is Naf:
                    naf.append(node(g.goal, g.module))
            bodies.append(bnodes)
            nafs.append(naf)
            spans.append(c.span)
            for nd in bnodes:
                occ[nd].append(ci)
    for body_atoms, span in kb.denials:
        p.denials.append((tuple(p.intern(a) for a in body_atoms), span))
    for body_atoms, span in kb.dual_assertions:
        p.dual_assertions.append((tuple(p.intern(a) for a in body_atoms), span))
    return p


def _propagate(p: PropProgram, active, true: bytearray, stats: dict) -> None:
    """Close `true` under the clauses marked in `active` (a bytearray)."""
    heads, bodies, occ = p.heads, p.bodies, p.occurrences
    counter = [0] * len(heads)
    # Counters are taken against the truths present on entry only; a node made
    # true from here on is queued exactly once and decremented from there.
    ready = []
    for ci in range(len(heads)):
        if not active[ci]:
            continue
        k = 0
        for nd in bodies[ci]:
            if not true[nd]:
                k += 1
        counter[ci] = k
        if k == 0:
            ready.append(ci)
    queue = []
    fired = len(ready)
    for ci in ready:
        h = heads[ci]
        if not true[h]:
            true[h] = 1
            queue.append(h)
    decrements = 0
    while queue:
        nd = queue.pop()
        for ci in occ[nd]:
            if not active[ci]:
                continue
            decrements += 1
            k = counter[ci] - 1
            counter[ci] = k
            if k == 0:
                h = heads[ci]
                fired += 1
                if not true[h]:
                    true[h] = 1
                    queue.append(h)
    stats["decrements"] += decrements
    stats["fired"] += fired


def _models_from(p: PropProgram, true: bytearray, stats: dict) -> dict[str, Model]:
    n = len(p.atoms)
    out = {}
    for m, bit in MODULE_BIT.items():
        ids = frozenset(i for i in range(n) if true[2 * i + bit])
        out[m] = Model(m, ids, p, True, dict(stats))
    return out


def least_models(p: PropProgram) -> dict[str, Model]:
    """Least models of both modules of a program without negation."""
    if p.has_naf:
        raise ValueError("program uses not/1; evaluate it with stratified_eval")
    true = bytearray(2 * len(p.atoms))
    stats = {"decrements": 0, "fired": 0}
    with _gc_paused():
        _propagate(p, bytearray([1]) * len(p.heads), true, stats)
    return _models_from(p, true, stats)


def minimal_model(p: PropProgram, module: str = "true") -> Model:
    """Least model of one module (calls into the other module are followed)."""
    return least_models(p)[module]


def entails(m: Model, atom) -> bool:
    return m.program.atom_id(atom) in m.atoms


def falsifies(models: dict[str, Model], atom) -> bool:
    """True iff the atom is in the false module's least model."""
    return entails(models["false"], atom)


def verifies(models: dict[str, Model], atom) -> bool:
    return entails(models["true"], atom)


@dataclass(frozen=True)
class Violation:
    kind: str  # denial | dual_assertion
    atoms: tuple
    span: object

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        if self.kind == "denial":
            body = ", ".join(format_term(a, 999) for a in self.atoms)
            return f"{where}denial violated: false <= {body} (all verified)"
        body = " ; ".join(format_term(a, 999) for a in self.atoms)
        return f"{where}dual assertion violated: true => {body} (all falsified)"


@dataclass
class ConstraintReport:
    violations: list
    checked: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def render(self) -> str:
        if self.ok:
            return f"all {self.checked} constraints satisfied\n"
        return "".join(f"{v}\n" for v in self.violations)


def check_constraints(p: PropProgram, models: dict[str, Model]) -> ConstraintReport:
    """A denial fails when every atom is verified; a dual assertion fails when
    every atom is falsified, leaving nothing that could be true."""
    out = []
    t, f = models["true"].atoms, models["false"].atoms
    for ids, span in p.denials:
        if all(i in t for i in ids):
            out.append(Violation("denial", tuple(p.atoms[i] for i in ids), span))
    for ids, span in p.dual_assertions:
        if all(i in f for i in ids):
            out.append(Violation("dual_assertion", tuple(p.atoms[i] for i in ids), span))
    return ConstraintReport(out, len(p.denials) + len(p.dual_assertions))


# --------------------------------------------------------------------------
# stratification

def dependency_graph(p: PropProgram) -> nx.DiGraph:
    """Edges run from body node to head node; `negative` marks not/1 edges."""
    g = nx.DiGraph()
    g.add_nodes_from(p.heads)
    for ci, h in enumerate(p.heads):
        for nd in p.bodies[ci]:
            if not g.has_edge(nd, h):
                g.add_edge(nd, h, negative=False)
        for nd in p.nafs[ci]:
            g.add_edge(nd, h, negative=True)
    return g


def _describe(p: PropProgram, nd: int) -> tuple[str, str]:
    return BIT_MODULE[nd & 1], p.name(nd >> 1)


def stratify(p: PropProgram) -> dict[int, int]:
    """Stratum of every node; raises NonStratified with a negative cycle."""
    g = dependency_graph(p)
    cond = nx.condensation(g)
    member = cond.graph["mapping"]
    for u, v, neg in g.edges(data="negative"):
        if neg and member[u] == member[v]:
            scc = cond.nodes[member[u]]["members"]
            path = nx.shortest_path(g.subgraph(scc), v, u)  # v ... u, then u -not-> v
            cycle = []
            for k, nd in enumerate(path):
                nxt = path[k + 1] if k + 1 < len(path) else v
                m, a = _describe(p, nd)
                cycle.append((m, a, bool(g.edges[nd, nxt]["negative"])))
            raise NonStratified(cycle)
    level: dict[int, int] = {}
    for c in nx.topological_sort(cond):
        s = 0
        for pred in cond.predecessors(c):
            s = max(s, level[pred])
        level[c] = s
        # a negative edge into this component pushes it one stratum up
        for nd in cond.nodes[c]["members"]:
            for u in g.predecessors(nd):
                if g.edges[u, nd]["negative"]:
                    level[c] = max(level[c], level[member[u]] + 1)
    return {nd: level[member[nd]] for nd in g.nodes}


def stratified_eval(prog: PropProgram | KnowledgeBase) -> dict[str, Model]:
    """Perfect model of a ground program whose not/1 calls are stratified.

    Strata are evaluated bottom-up; inside a stratum a clause takes part only
    if none of its negated nodes is true in the already closed lower strata.
    """
    p = ground_check(prog) if isinstance(prog, KnowledgeBase) else prog
    if not p.has_naf:
        return least_models(p)
    strata = stratify(p)
    by_level: dict[int, list[int]] = {}
    for ci, h in enumerate(p.heads):
        by_level.setdefault(strata[h], []).append(ci)
    true = bytearray(2 * len(p.atoms))
    stats = {"decrements": 0, "fired": 0}
    for lvl in sorted(by_level):
        active = bytearray(len(p.heads))
        for ci in by_level[lvl]:
            if not any(true[nd] for nd in p.nafs[ci]):
                active[ci] = 1
        _propagate(p, active, true, stats)
    return _models_from(p, true, stats)


def is_least_fixpoint(p: PropProgram, true_nodes: set[int]) -> bool:
    """Closure plus support: every firing clause has a true head and every true
    node is the head of some clause whose body is true (naf-free programs)."""
    supported = set()
    for ci, h in enumerate(p.heads):
        if all(nd in true_nodes for nd in p.bodies[ci]):
            if h not in true_nodes:
                return False
            supported.add(h)
    return true_nodes <= supported


# --------------------------------------------------------------------------
# naive Herbrand instantiation, for small first-order programs in tests and demos

def _constants(t: Term, acc: dict) -> None:
    if isinstance(t, Compound):
        for a in t.args:
            if isinstance(a, (Atom, Number)):
                acc.setdefault(a, None)
            else:
                _constants(a, acc)


def herbrand_constants(kb: KnowledgeBase) -> list[Term]:
    acc: dict = {}
    for c in kb.clauses:
        _constants(c.head, acc)
        for g in c.body:
            if not isinstance(g, TrueGoal):
                _constants(g.goal, acc)
    return list(acc)


def instantiate(kb: KnowledgeBase, constants: list[Term] | None = None) -> KnowledgeBase:
    """Replace every clause by all its ground instances over `constants`
    (default: the argument constants of the program). Exponential in the number
    of variables per clause; meant for small programs only."""
    consts = herbrand_constants(kb) if constants is None else list(constants)
    out = KnowledgeBase()
    for c in kb.clauses:
        if not c.variables:
            out.add(c)
            continue
        for combo in product(consts, repeat=len(c.variables)):
            mapping = {v.id: t for v, t in zip(c.variables, combo)}
            body = tuple(g if isinstance(g, TrueGoal) else type(g)(g.module, substitute(g.goal, mapping))
                         for g in c.body)
            out.add(CompiledClause(c.module, substitute(c.head, mapping), body, c.span))
    out.denials = list(kb.denials)
    out.dual_assertions = list(kb.dual_assertions)
    return out
