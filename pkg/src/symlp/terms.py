"""Terms, bindings with an undo trail, and unification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Union

_ids = itertools.count(1)


def fresh_id() -> int:
    return next(_ids)


@dataclass(frozen=True, slots=True)
class Atom:
    name: str

    # hand-written: atoms are the hottest dictionary keys when indexing
    # large ground programs, and the generated versions build tuples
    def __eq__(self, other) -> bool:
        return other.__class__ is Atom and other.name == self.name

    def __hash__(self) -> int:
        return hash(self.name)

    def __repr__(self) -> str:
        return f"Atom({self.name!r})"


@dataclass(frozen=True, slots=True)
class Number:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    id: int
    name: str = field(default="_", compare=False)

    @classmethod
    def fresh(cls, name: str = "_") -> "Var":
        return cls(fresh_id(), name)

    def __repr__(self) -> str:
        return f"Var({self.name}#{self.id})"


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound terms need at least one argument; use Atom")

    @property
    def arity(self) -> int:
        return len(self.args)


Term = Union[Atom, Number, Var, Compound]


def mk(functor: str, *args) -> Term:
    """Build an atom or compound; string args become atoms, ints become numbers."""
    if not args:
        return Atom(functor)
    return Compound(functor, tuple(_lift(a) for a in args))


def _lift(x) -> Term:
    if isinstance(x, (Atom, Number, Var, Compound)):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not terms")
    if isinstance(x, int):
        return Number(x)
    if isinstance(x, str):
        return Atom(x)
    raise TypeError(f"cannot convert {x!r} to a term")


def key_of(t: Term) -> tuple[str, int] | None:
    """Predicate indicator of a callable term, or None."""
    if isinstance(t, Atom):
        return (t.name, 0)
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    return None


def term_vars(t: Term, acc: dict | None = None) -> list[Var]:
    """Distinct variables of t in order of first occurrence."""
    if acc is None:
        acc = {}
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            acc.setdefault(x.id, x)
        elif isinstance(x, Compound):
            stack.extend(reversed(x.args))
    return list(acc.values())


def is_ground(t: Term) -> bool:
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            return False
        if isinstance(x, Compound):
            stack.extend(x.args)
    return True


def substitute(t: Term, mapping: dict[int, Term]) -> Term:
    """Plain one-pass replacement of variables by id (no dereferencing)."""
    if isinstance(t, Var):
        return mapping.get(t.id, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(substitute(a, mapping) for a in t.args))
    return t


def variant(t1: Term, t2: Term) -> bool:
    """True when t1 and t2 are equal up to a consistent renaming of variables."""
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        if isinstance(a, Var) and isinstance(b, Var):
            if fwd.setdefault(a.id, b.id) != b.id or bwd.setdefault(b.id, a.id) != a.id:
                return False
        elif isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        elif type(a) is not type(b) or isinstance(a, Var) or a != b:
            return False
    return True


class Bindings:
    """Variable bindings with a trail so any checkpoint can be restored."""

    __slots__ = ("map", "trail", "renamings")

    def __init__(self):
        self.map: dict[int, Term] = {}
        self.trail: list[int] = []
        self.renamings = 0

    def __len__(self) -> int:
        return len(self.map)

    def __contains__(self, v: Var) -> bool:
        return v.id in self.map

    def items(self) -> Iterator[tuple[int, Term]]:
        return iter(self.map.items())

    def deref(self, t: Term) -> Term:
        m = self.map
        while isinstance(t, Var):
            nxt = m.get(t.id)
            if nxt is None:
                return t
            t = nxt
        return t

    def bind(self, v: Var, t: Term) -> None:
        self.map[v.id] = t
        self.trail.append(v.id)

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        trail, m = self.trail, self.map
        while len(trail) > mark:
            del m[trail.pop()]

    def occurs(self, v: Var, t: Term) -> bool:
        stack = [t]
        seen: set[int] = set()
        while stack:
            x = self.deref(stack.pop())
            if isinstance(x, Var):
                if x.id == v.id:
                    return True
            elif isinstance(x, Compound):
                if id(x) in seen:
                    continue
                seen.add(id(x))
                stack.extend(x.args)
        return False

    def unify(self, t1: Term, t2: Term, occurs_check: bool = False) -> bool:
        """Extend the bindings to an mgu of t1 and t2.

        On failure every binding made during the attempt is undone, so the
        caller never needs to clean up.
        """
        start = len(self.trail)
        stack = [(t1, t2)]
        while stack:
            a, b = stack.pop()
            a = self.deref(a)
            b = self.deref(b)
            if a is b:
                continue
            if isinstance(a, Var):
                if isinstance(b, Var) and a.id == b.id:
                    continue
                if occurs_check and self.occurs(a, b):
                    self.undo(start)
                    return False
                self.bind(a, b)
            elif isinstance(b, Var):
                if occurs_check and self.occurs(b, a):
                    self.undo(start)
                    return False
                self.bind(b, a)
            elif isinstance(a, Compound):
                if (not isinstance(b, Compound) or a.functor != b.functor
                        or len(a.args) != len(b.args)):
                    self.undo(start)
                    return False
                stack.extend(zip(a.args, b.args))
            elif a != b:
                self.undo(start)
                return False
        return True

    def apply(self, t: Term) -> Term:
        """Fully dereferenced copy of t.

        A variable met again while its own value is being expanded (a cycle
        left by unification without occurs check) is kept as the variable.
        """
        return self._apply(t, set())

    def _apply(self, t: Term, path: set[int]) -> Term:
        while isinstance(t, Var):
            nxt = self.map.get(t.id)
            if nxt is None:
                return t
            if t.id in path:
                return t
            if isinstance(nxt, Compound):
                path.add(t.id)
                try:
                    return self._apply(nxt, path)
                finally:
                    path.discard(t.id)
            t = nxt
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(self._apply(a, path) for a in t.args))
        return t

    def rename_apart(self, variables: tuple[Var, ...], *terms: Term) -> tuple[Term, ...]:
        """Copy terms with every listed variable replaced by a fresh one."""
        self.renamings += 1
        if not variables:
            return terms
        mapping = {v.id: Var(fresh_id(), v.name) for v in variables}
        return tuple(substitute(t, mapping) for t in terms)


def unify(t1: Term, t2: Term, b: Bindings | None = None, occurs_check: bool = False) -> Bindings | None:
    """Functional wrapper: the extended bindings, or None on failure."""
    if b is None:
        b = Bindings()
    return b if b.unify(t1, t2, occurs_check) else None


def apply(b: Bindings, t: Term) -> Term:
    return b.apply(t)
