"""Exception hierarchy and diagnostics shared by every layer."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """Source region of a clause, 1-based lines and columns, end inclusive."""

    start_line: int
    start_col: int
    end_line: int
    end_col: int
    file: str | None = None

    def contains(self, line: int, col: int) -> bool:
        if line < self.start_line or line > self.end_line:
            return False
        if line == self.start_line and col < self.start_col:
            return False
        if line == self.end_line and col > self.end_col:
            return False
        return True

    def __str__(self) -> str:
        where = f"{self.start_line}:{self.start_col}-{self.end_line}:{self.end_col}"
        return f"{self.file}:{where}" if self.file else where


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "note"
    message: str
    line: int = 0
    col: int = 0
    file: str | None = None

    def __str__(self) -> str:
        loc = f"{self.line}:{self.col}"
        if self.file:
            loc = f"{self.file}:{loc}"
        return f"{loc}: {self.severity}: {self.message}"


class SymLPError(Exception):
    pass


# reader

class ParseError(SymLPError):
    def __init__(self, message: str, line: int = 0, col: int = 0, hint: str | None = None,
                 file: str | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.hint = hint
        self.file = file
        text = f"{line}:{col}: {message}"
        if hint:
            text += f" (expected {hint})"
        super().__init__(text)

    def diagnostic(self) -> Diagnostic:
        msg = self.message if not self.hint else f"{self.message} (expected {self.hint})"
        return Diagnostic("error", msg, self.line, self.col, self.file)


class UnterminatedQuote(ParseError):
    pass


class IllegalCharacter(ParseError):
    pass


# compiler

class CompileError(SymLPError):
    def __init__(self, message: str, span: Span | None = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class VariableHead(CompileError):
    pass


class NafInDualBody(CompileError):
    pass


class QualifiedGoalInDualBody(CompileError):
    pass


class NonPropositional(CompileError):
    pass


# engines

class EngineError(SymLPError):
    pass


class DepthLimitExceeded(EngineError):
    def __init__(self, limit: int, answers: int = 0):
        self.limit = limit
        self.answers = answers
        super().__init__(f"depth limit {limit} exceeded; search was truncated")


class NonGroundNaf(EngineError):
    def __init__(self, goal_text: str):
        self.goal_text = goal_text
        super().__init__(f"negation-as-failure goal is not ground at call time: {goal_text}")


class TraceUnavailable(EngineError):
    pass


class CrossModuleCall(EngineError):
    pass


class NafGoal(EngineError):
    pass


class NotPropositional(EngineError):
    def __init__(self, spans: list):
        self.spans = list(spans)
        where = ", ".join(str(s) for s in self.spans)
        super().__init__(f"program is not propositional; clauses with variables at: {where}")


class UnknownAtom(EngineError):
    def __init__(self, atom_text: str):
        self.atom_text = atom_text
        super().__init__(f"unknown atom: {atom_text}")


class NonStratified(EngineError):
    def __init__(self, cycle: list):
        # cycle: list of (module, atom text, negative edge to next?) triples
        self.cycle = list(cycle)
        path = " -> ".join(f"{'not ' if neg else ''}{m}:{a}" for m, a, neg in self.cycle)
        super().__init__(f"program is not stratified; negative cycle: {path}")
