"""Tokenizer, operator-precedence parser and printer for SymLP source text."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import Diagnostic, IllegalCharacter, ParseError, Span, UnterminatedQuote
from .terms import Atom, Compound, Number, Term, Var

SYMBOL_CHARS = set("+-*/\\^<>=~:.?@#&$")
SOLO_CHARS = set(",;()")

INFIX_OPS = {
    ":-": (1200, "xfx"),
    "=>": (1199, "xfx"),
    "<=": (1199, "xfx"),
    ";": (1100, "xfy"),
    ",": (1000, "xfy"),
    ":": (200, "xfy"),
}
PREFIX_OPS = {
    ":-": (1200, "fx"),
    "+": (200, "fy"),
    "-": (200, "fy"),
}
ARG_PREC = 999


@dataclass(frozen=True)
class Token:
    kind: str  # atom | qatom | var | num | punct | error
    text: str  # for qatom: the unquoted content
    line: int
    col: int
    start: int  # byte offsets into the source string
    end: int
    layout_before: bool = False
    line_start: bool = False

    def __str__(self) -> str:
        if self.kind == "qatom":
            return quote_atom(self.text)
        return self.text


def tokenize(source: str, errors: list | None = None, file: str | None = None) -> list[Token]:
    """Split source into tokens, skipping whitespace and ``%`` comments.

    With ``errors`` given, lexical errors are appended there as diagnostics and
    an ``error`` token marks the damaged spot instead of raising.
    """
    toks: list[Token] = []
    i, n = 0, len(source)
    line, line_pos = 1, 0
    layout = True
    first_on_line = True

    def fail(exc_type, msg, at, ln, cl):
        if errors is None:
            raise exc_type(msg, ln, cl, file=file)
        errors.append(Diagnostic("error", msg, ln, cl, file))
        toks.append(Token("error", "", ln, cl, at, at + 1, layout, first_on_line))

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line, line_pos = line + 1, i
            layout = first_on_line = True
            continue
        if c.isspace():
            i += 1
            layout = True
            continue
        if c == "%":
            while i < n and source[i] != "\n":
                i += 1
            layout = True
            continue
        start, col = i, i - line_pos + 1
        if c.isalpha() and c.islower():
            i += 1
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            kind, text = "atom", source[start:i]
        elif c.isalpha() or c == "_":
            i += 1
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            kind, text = "var", source[start:i]
        elif c.isdigit():
            while i < n and source[i].isdigit():
                i += 1
            kind, text = "num", source[start:i]
        elif c == "'":
            i += 1
            buf = []
            closed = False
            while i < n:
                ch = source[i]
                if ch == "'":
                    if i + 1 < n and source[i + 1] == "'":
                        buf.append("'")
                        i += 2
                        continue
                    i += 1
                    closed = True
                    break
                if ch == "\n":
                    break
                buf.append(ch)
                i += 1
            if not closed:
                fail(UnterminatedQuote, "unterminated quoted atom", start, line, col)
                layout = first_on_line = False
                continue
            kind, text = "qatom", "".join(buf)
        elif c in SOLO_CHARS:
            i += 1
            kind, text = "punct", c
        elif c in SYMBOL_CHARS:
            if c == "." and (i + 1 == n or source[i + 1].isspace() or source[i + 1] == "%"):
                i += 1
                kind, text = "punct", "."
            else:
                while i < n and source[i] in SYMBOL_CHARS:
                    # a trailing '.' followed by layout ends the clause
                    if source[i] == "." and i > start and (
                            i + 1 == n or source[i + 1].isspace() or source[i + 1] == "%"):
                        break
                    i += 1
                kind, text = "punct", source[start:i]
        else:
            fail(IllegalCharacter, f"illegal character {c!r}", start, line, col)
            i += 1
            layout = first_on_line = False
            continue
        toks.append(Token(kind, text, line, col, start, i, layout, first_on_line))
        layout = first_on_line = False
    return toks


# --------------------------------------------------------------------------
# source clauses

@dataclass(frozen=True)
class SourceClause:
    span: Span | None = field(default=None, compare=False, kw_only=True)

    def as_term(self) -> Term:
        raise NotImplementedError


@dataclass(frozen=True)
class HornRule(SourceClause):
    head: Term
    body: Term

    def as_term(self):
        return Compound("<=", (self.head, self.body))


@dataclass(frozen=True)
class PositiveFact(SourceClause):
    head: Term

    def as_term(self):
        return Compound("+", (self.head,))


@dataclass(frozen=True)
class DualRule(SourceClause):
    head: Term
    body: Term

    def as_term(self):
        return Compound("=>", (self.head, self.body))


@dataclass(frozen=True)
class NegativeFact(SourceClause):
    head: Term

    def as_term(self):
        return Compound("-", (self.head,))


@dataclass(frozen=True)
class Denial(SourceClause):
    body: Term

    def as_term(self):
        return Compound("<=", (Atom("false"), self.body))


@dataclass(frozen=True)
class DualAssertion(SourceClause):
    body: Term

    def as_term(self):
        return Compound("=>", (Atom("true"), self.body))


def same_clause(a: SourceClause, b: SourceClause) -> bool:
    """Structural identity up to variable renaming, ignoring positions."""
    from .terms import variant
    return type(a) is type(b) and variant(a.as_term(), b.as_term())


# --------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, tokens: list[Token], file: str | None = None):
        self.toks = tokens
        self.pos = 0
        self.file = file
        self.varmap: dict[str, Var] = {}

    def peek(self, k: int = 0) -> Token | None:
        j = self.pos + k
        return self.toks[j] if j < len(self.toks) else None

    def error(self, msg: str, tok: Token | None = None, hint: str | None = None):
        tok = tok or self.peek() or (self.toks[-1] if self.toks else None)
        line, col = (tok.line, tok.col) if tok else (0, 0)
        return ParseError(msg, line, col, hint, self.file)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "punct" or tok.text != text:
            got = "end of input" if tok is None else f"'{tok}'"
            raise self.error(f"unexpected {got}", tok, repr(text))
        self.pos += 1
        return tok

    def _starts_term(self, tok: Token | None) -> bool:
        if tok is None or tok.kind == "error":
            return False
        if tok.kind == "punct":
            if tok.text in ("(",) or tok.text in PREFIX_OPS:
                return True
            return tok.text not in INFIX_OPS and tok.text not in (")", ".", ",", ";")
        return True

    def parse(self, max_prec: int) -> tuple[Term, int]:
        left, left_prec = self.primary(max_prec)
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "punct" or tok.text not in INFIX_OPS:
                break
            prec, typ = INFIX_OPS[tok.text]
            if prec > max_prec:
                break
            left_max = prec if typ == "yfx" else prec - 1
            if left_prec > left_max:
                if typ == "xfx":
                    raise self.error(f"operator priority clash: '{tok.text}' is non-associative", tok)
                raise self.error(f"operator priority clash at '{tok.text}'", tok)
            self.pos += 1
            right_max = prec if typ == "xfy" else prec - 1
            right, _ = self.parse(right_max)
            left, left_prec = Compound(tok.text, (left, right)), prec
        return left, left_prec

    def primary(self, max_prec: int) -> tuple[Term, int]:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input", None, "a term")
        if tok.kind == "error":
            raise self.error("damaged token", tok)
        self.pos += 1
        if tok.kind == "num":
            return Number(int(tok.text)), 0
        if tok.kind == "var":
            if tok.text == "_":
                return Var.fresh("_"), 0
            v = self.varmap.get(tok.text)
            if v is None:
                v = self.varmap[tok.text] = Var.fresh(tok.text)
            return v, 0
        if tok.kind in ("atom", "qatom"):
            return self.after_name(tok, max_prec)
        # punct
        if tok.text == "(":
            inner, _ = self.parse(1200)
            self.expect(")")
            return inner, 0
        if tok.text == "-":
            nxt = self.peek()
            if nxt is not None and nxt.kind == "num" and not nxt.layout_before:
                self.pos += 1
                return Number(-int(nxt.text)), 0
        if tok.text in (")", ".", ",", ";", "|"):
            raise self.error(f"unexpected '{tok.text}'", tok, "a term")
        return self.after_name(tok, max_prec)

    def after_name(self, tok: Token, max_prec: int) -> tuple[Term, int]:
        name = tok.text
        nxt = self.peek()
        if nxt is not None and nxt.kind == "punct" and nxt.text == "(" and not nxt.layout_before:
            self.pos += 1
            args = [self.parse(ARG_PREC)[0]]
            while True:
                t = self.peek()
                if t is not None and t.kind == "punct" and t.text == ",":
                    self.pos += 1
                    args.append(self.parse(ARG_PREC)[0])
                    continue
                self.expect(")")
                break
            return Compound(name, tuple(args)), 0
        if tok.kind == "punct" and name in PREFIX_OPS and self._starts_term(nxt):
            prec, typ = PREFIX_OPS[name]
            if prec > max_prec:
                raise self.error(f"operator priority clash at prefix '{name}'", tok)
            arg_max = prec if typ == "fy" else prec - 1
            arg, _ = self.parse(arg_max)
            return Compound(name, (arg,)), prec
        return Atom(name), 0


def parse_term(text: str, file: str | None = None) -> Term:
    """Parse a single term; a trailing ``.`` is optional."""
    toks = tokenize(text, file=file)
    p = _Parser(toks, file)
    t, _ = p.parse(1200)
    if p.peek() is not None and p.peek().kind == "punct" and p.peek().text == ".":
        p.pos += 1
    if p.peek() is not None:
        raise p.error(f"unexpected '{p.peek()}'", p.peek(), "end of term")
    return t


@dataclass(frozen=True)
class Directive:
    goal: Term
    span: Span | None = None


def _is_head(t: Term) -> bool:
    if isinstance(t, Atom):
        return t.name not in ("true", "false")
    if isinstance(t, Compound):
        return (t.functor, len(t.args)) not in ((",", 2), (";", 2), (":", 2), ("not", 1))
    return False


def classify(term: Term, span: Span | None = None, first: Token | None = None,
             file: str | None = None) -> SourceClause | Directive:
    """Turn a parsed clause term into one of the SourceClause forms."""
    line, col = (first.line, first.col) if first else (0, 0)

    def bad(msg):
        return ParseError(msg, line, col, file=file)

    def head(h):
        if not _is_head(h):
            raise bad(f"clause head must be an atom or compound term, got {format_term(h)}")
        return h

    if isinstance(term, Compound):
        f, n = term.functor, len(term.args)
        if f == ":-" and n == 1:
            return Directive(term.args[0], span)
        if f == "<=" and n == 2:
            h, b = term.args
            if h == Atom("false"):
                return Denial(b, span=span)
            if b == Atom("true"):
                return PositiveFact(head(h), span=span)
            return HornRule(head(h), b, span=span)
        if f == "=>" and n == 2:
            h, b = term.args
            if h == Atom("true"):
                return DualAssertion(b, span=span)
            if b == Atom("false"):
                return NegativeFact(head(h), span=span)
            return DualRule(head(h), b, span=span)
        if f == "+" and n == 1:
            return PositiveFact(head(term.args[0]), span=span)
        if f == "-" and n == 1:
            return NegativeFact(head(term.args[0]), span=span)
        if f == ":-" and n == 2:
            raise bad("plain Prolog rule; write Horn rules with '<=' and dual rules with '=>'")
    raise bad(f"not a SymLP clause: {format_term(term)} (facts need a '+' or '-' marker)")


def _span_of(toks: list[Token], file: str | None) -> Span:
    a, b = toks[0], toks[-1]
    end_col = b.col + max(0, b.end - b.start - 1)
    return Span(a.line, a.col, b.line, end_col, file)


def parse_clause(tokens: list[Token], file: str | None = None) -> SourceClause | Directive:
    """Parse the tokens of exactly one clause, including its final ``.``."""
    if not tokens:
        raise ParseError("empty clause", file=file)
    p = _Parser(tokens, file)
    term, _ = p.parse(1200)
    end = p.peek()
    if end is None:
        raise p.error("clause is missing its final '.'", tokens[-1], "'.'")
    if end.kind != "punct" or end.text != ".":
        raise p.error(f"unexpected '{end}'", end, "an operator or '.'")
    if p.pos != len(tokens) - 1:
        raise p.error("tokens after end of clause", tokens[p.pos + 1])
    return classify(term, _span_of(tokens, file), tokens[0], file)


def split_clauses(tokens: list[Token]) -> list[list[Token]]:
    """Group tokens into clauses at every end token; a trailing partial group is kept."""
    out, cur = [], []
    for t in tokens:
        cur.append(t)
        if t.kind == "punct" and t.text == ".":
            out.append(cur)
            cur = []
    if cur:
        out.append(cur)
    return out


@dataclass
class ParseResult:
    clauses: list[SourceClause]
    diagnostics: list[Diagnostic]
    directives: list[Directive] = field(default_factory=list)

    def __iter__(self):
        # allows `clauses, diags = parse_program(...)`
        return iter((self.clauses, self.diagnostics))


def parse_program(source: str, mode: str = "strict", file: str | None = None) -> ParseResult:
    """Parse a whole program.

    Strict mode raises on the first error. Lenient mode reports every error as
    a diagnostic, skips the broken clause and carries on after its ``.``; a
    clause accidentally ended by ``;`` right before a new line is split there.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"unknown parse mode {mode!r}")
    lenient = mode == "lenient"
    diags: list[Diagnostic] = []
    toks = tokenize(source, diags if lenient else None, file)
    clauses: list[SourceClause] = []
    directives: list[Directive] = []

    def accept(item):
        if isinstance(item, Directive):
            directives.append(item)
            g = item.goal
            if isinstance(g, Compound) and g.functor == "include":
                msg = f"directive {format_term(g)} ignored; the SymLP compiler is built in"
            else:
                msg = f"directive {format_term(g)} ignored"
            sp = item.span
            diags.append(Diagnostic("note", msg, sp.start_line if sp else 0,
                                    sp.start_col if sp else 0, file))
        else:
            clauses.append(item)

    for group in split_clauses(toks):
        if lenient and any(t.kind == "error" for t in group):
            continue  # already reported by the tokenizer
        if lenient:
            _parse_lenient(group, file, accept, diags)
        else:
            accept(parse_clause(group, file))
    return ParseResult(clauses, diags, directives)


def _parse_lenient(group: list[Token], file, accept, diags: list[Diagnostic]) -> None:
    while group:
        try:
            accept(parse_clause(group, file))
            return
        except ParseError as err:
            # look for a ';' that ends a line right before the failure point
            fail_at = next((k for k, t in enumerate(group)
                            if (t.line, t.col) == (err.line, err.col)), len(group))
            cut = None
            for k in range(min(fail_at, len(group) - 1) - 1, 0, -1):
                t = group[k]
                if t.kind == "punct" and t.text == ";" and group[k + 1].line_start:
                    cut = k
                    break
            if cut is not None:
                semi = group[cut]
                end = Token("punct", ".", semi.line, semi.col, semi.start, semi.end)
                try:
                    item = parse_clause(group[:cut] + [end], file)
                except ParseError:
                    item = None
                if item is not None:
                    diags.append(Diagnostic(
                        "warning", "clause ended with ';' instead of '.'; treated as '.'",
                        semi.line, semi.col, file))
                    accept(item)
                    group = group[cut + 1:]
                    continue
            diags.append(err.diagnostic())
            return


# --------------------------------------------------------------------------
# printing

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


def atom_needs_quotes(name: str) -> bool:
    if _PLAIN_ATOM.match(name):
        return False
    if name and all(c in SYMBOL_CHARS for c in name) and not name.endswith("."):
        return False
    return True


def quote_atom(name: str) -> str:
    if not atom_needs_quotes(name):
        return name
    return "'" + name.replace("'", "''") + "'"


def format_var(v: Var) -> str:
    return v.name if v.name != "_" else f"_G{v.id}"


def format_term(t: Term, max_prec: int = 1200, var_name=format_var) -> str:
    """Render a term in SymLP syntax, parenthesising where precedence needs it."""
    if isinstance(t, Var):
        return var_name(t)
    if isinstance(t, Number):
        return str(t.value)
    if isinstance(t, Atom):
        s = quote_atom(t.name)
        if t.name in INFIX_OPS or t.name in PREFIX_OPS:
            return f"({s})"
        return s
    f, args = t.functor, t.args
    if len(args) == 2 and f in INFIX_OPS:
        prec, typ = INFIX_OPS[f]
        lmax = prec if typ == "yfx" else prec - 1
        rmax = prec if typ == "xfy" else prec - 1
        left = format_term(args[0], lmax, var_name)
        right = format_term(args[1], rmax, var_name)
        if f == ",":
            s = f"{left}, {right}"
        elif f == ":" and right[:1] not in SYMBOL_CHARS:
            s = f"{left}:{right}"
        else:
            s = f"{left} {f} {right}"
        return f"({s})" if prec > max_prec else s
    if len(args) == 1 and f in PREFIX_OPS:
        prec, typ = PREFIX_OPS[f]
        arg = format_term(args[0], prec if typ == "fy" else prec - 1, var_name)
        sep = " " if (arg[:1] in SYMBOL_CHARS or arg[:1] == "(" or arg[:1].isdigit()) else ""
        s = f"{f}{sep}{arg}"
        return f"({s})" if prec > max_prec else s
    inner = ", ".join(format_term(a, ARG_PREC, var_name) for a in args)
    return f"{quote_atom(f)}({inner})"


def format_clause(c: SourceClause) -> str:
    return format_term(c.as_term()) + "."
