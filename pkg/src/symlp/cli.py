"""Command line front end and REPL."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import prop
from .compiler import KnowledgeBase, compile_program
from .engine import (Answer, EngineConfig, QAnd, QCall, QNaf, Query, QueryError, explain,
                     solve, succeeds)
from .errors import (CompileError, DepthLimitExceeded, Diagnostic, EngineError, NonStratified,
                     NotPropositional, ParseError, SymLPError)
from .metaint import metaint, to_diff_clauses
from .reader import format_term, parse_program
from .terms import Var, is_ground

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_ENGINE = 0, 1, 2, 3


def print_answer(a: Answer) -> str:
    """One answer as ``V = term`` lines; ``true`` when nothing is worth showing."""
    parts = []
    for name, value in a.bindings.items():
        if name.startswith("_"):
            continue
        if isinstance(value, Var) and value.name == name:
            continue  # left unbound
        parts.append(f"{name} = {format_term(value, 699)}")
    return ",\n".join(parts) if parts else "true"


def print_answers(answers: list[Answer]) -> str:
    """All answers joined by `` ;``, ``.`` after the last one, ``false`` if none."""
    if not answers:
        return "false"
    texts = [print_answer(a) for a in answers]
    out = " ;\n".join(texts)
    if texts[-1] != "true":
        out += "."
    return out


@dataclass
class Session:
    cfg: EngineConfig = field(default_factory=EngineConfig)
    mode: str = "strict"
    engine: str = "auto"  # auto | sld | prop
    explain: bool = False
    trace_format: str = "text"
    files: dict = field(default_factory=dict)  # path -> list of SourceClause
    diagnostics: list = field(default_factory=list)
    kb: KnowledgeBase = field(default_factory=KnowledgeBase)
    _models: object = None
    out: object = None
    err: object = None

    def __post_init__(self):
        self.out = self.out or sys.stdout
        self.err = self.err or sys.stderr

    def load(self, path: str) -> list[Diagnostic]:
        """Parse a file and rebuild the knowledge base. On a parse error in
        strict mode nothing changes."""
        text = Path(path).read_text(encoding="utf-8")
        parsed = parse_program(text, self.mode, file=Path(path).name)
        files = dict(self.files)
        files[path] = parsed.clauses
        clauses = [c for cs in files.values() for c in cs]
        res = compile_program(clauses, strict=(self.mode == "strict"))
        self.files = files
        self.kb = res.kb
        self._models = None
        diags = parsed.diagnostics + res.diagnostics
        self.diagnostics.extend(diags)
        return diags

    def models(self):
        if self._models is None:
            p = prop.ground_check(self.kb)
            self._models = (p, prop.stratified_eval(p))
        return self._models

    def _emit_trace(self, ev):
        self.err.write((ev.json() if self.trace_format == "json" else ev.text()) + "\n")

    def query(self, text: str) -> tuple[str, int]:
        """Answer text and exit code for one query; errors become exit codes."""
        text = text.strip()
        if text.startswith("?-"):
            text = text[2:]
        try:
            q = Query.parse(text, self.cfg.default_module)
        except (ParseError, QueryError) as e:
            return f"error: {e}", EXIT_USAGE
        visible = [v for v in q.variables if not v.name.startswith("_")]
        try:
            if not visible and not self.cfg.trace and not self.explain:
                ok = self._ground_query(q)
                return ("true" if ok else "false"), (EXIT_OK if ok else EXIT_NO)
            return self._enumerate(q)
        except EngineError as e:
            return f"error: {e}", EXIT_ENGINE

    def _ground_query(self, q: Query) -> bool:
        if self.engine != "sld" and _ground_leaves(q.goal) is not None:
            try:
                p, ms = self.models()
            except (NotPropositional, NonStratified):
                if self.engine == "prop":
                    raise
            else:
                return _eval_ground(q.goal, ms)
        elif self.engine == "prop":
            raise EngineError("the propositional engine needs a ground query of atoms, ',' and not/1")
        return succeeds(self.kb, q, self.cfg)

    def _enumerate(self, q: Query) -> tuple[str, int]:
        if self.engine == "prop":
            raise EngineError("the propositional engine only answers ground queries")
        cfg = self.cfg
        if self.explain and not cfg.trace:
            cfg = EngineConfig(cfg.depth_limit, cfg.occurs_check, True, cfg.default_module)
        on_event = self._emit_trace if self.cfg.trace else None
        answers: list[Answer] = []
        try:
            for a in solve(self.kb, q, cfg, on_event):
                answers.append(a)
        except DepthLimitExceeded as e:
            shown = print_answers(answers) + "\n" if answers else ""
            return f"{shown}error: {e}", EXIT_ENGINE
        text = print_answers(answers)
        if self.explain:
            text += "\n" + "\n".join(explain(a) for a in answers)
        return text, (EXIT_OK if answers else EXIT_NO)


def _ground_leaves(g):
    """The goal tree if it is a ground conjunction of calls and negations, else None."""
    if isinstance(g, (QCall, QNaf)):
        return g if is_ground(g.goal) else None
    if isinstance(g, QAnd):
        return g if all(_ground_leaves(x) is not None for x in g.goals) else None
    return None


def _eval_ground(g, ms) -> bool:
    if isinstance(g, QCall):
        return prop.entails(ms[g.module], g.goal)
    if isinstance(g, QNaf):
        return not prop.entails(ms[g.module], g.goal)
    return all(_eval_ground(x, ms) for x in g.goals)


# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("files", nargs="*", metavar="FILE")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lenient", dest="mode", action="store_const", const="lenient",
                   help="recover from parse errors and report them")
    g.add_argument("--strict", dest="mode", action="store_const", const="strict",
                   help="stop at the first parse error (default)")
    p.set_defaults(mode="strict")
    p.add_argument("--trace", action="store_true", help="print resolution events on stderr")
    p.add_argument("--trace-format", choices=("text", "json"), default="text")
    p.add_argument("--explain", action="store_true", help="print a proof tree per answer")
    p.add_argument("--depth-limit", type=int, default=None, metavar="N")
    p.add_argument("--occurs-check", action="store_true")
    p.add_argument("--default-module", choices=("true", "false"), default="true")
    p.add_argument("--engine", choices=("auto", "sld", "prop"), default="auto",
                   help="auto sends ground queries on ground programs to the model engine")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symlp", description="Horn and dual Horn clause programs")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="answer queries in batch")
    _common(p)
    p.add_argument("-q", "--query", action="append", required=True)
    p.add_argument("--dump-compiled", action="store_true")
    _common(sub.add_parser("repl", help="interactive loop"))
    p = sub.add_parser("model", help="print the minimal models")
    _common(p)
    p.add_argument("--instantiate", action="store_true",
                   help="ground first-order clauses over the program's constants first")
    _common(sub.add_parser("compile", help="dump the compiled Horn program"))
    p = sub.add_parser("check", help="check stratification and integrity constraints")
    _common(p)
    p.add_argument("--instantiate", action="store_true")
    p = sub.add_parser("oracle", help="run a query through the difference-list metainterpreter")
    _common(p)
    p.add_argument("-q", "--query", action="append", required=True)
    return ap


def _session(args, out, err) -> Session:
    if args.depth_limit is not None and args.depth_limit < 1:
        raise SystemExit("--depth-limit must be positive")
    cfg = EngineConfig(args.depth_limit, args.occurs_check, args.trace, args.default_module)
    return Session(cfg, args.mode, args.engine, args.explain, args.trace_format, out=out, err=err)


def run(argv=None, out=None, err=None, stdin=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        s = _session(args, out, err)
    except (SystemExit, ValueError) as e:
        err.write(f"{e}\n")
        return EXIT_USAGE
    try:
        for f in args.files:
            for d in s.load(f):
                err.write(f"{d}\n")
    except ParseError as e:
        err.write(f"{e.diagnostic()}\n")
        return EXIT_USAGE
    except CompileError as e:
        where = f"{e.span}: " if e.span is not None else ""
        err.write(f"{where}error: {e.message}\n")
        return EXIT_USAGE
    except OSError as e:
        err.write(f"error: {e}\n")
        return EXIT_USAGE

    cmd = args.command
    if cmd == "run":
        if args.dump_compiled:
            out.write(s.kb.dump())
        code = EXIT_OK
        for qtext in args.query:
            text, c = s.query(qtext)
            _write(out, err, text)
            code = max(code, c)
        return code
    if cmd == "compile":
        out.write(s.kb.dump())
        return EXIT_OK
    if cmd == "model":
        return _cmd_model(s, args, out, err)
    if cmd == "check":
        return _cmd_check(s, args, out, err)
    if cmd == "oracle":
        code = EXIT_OK
        for qtext in args.query:
            text, c = oracle_query(s, qtext)
            _write(out, err, text)
            code = max(code, c)
        return code
    if cmd == "repl":
        return repl(s, stdin or sys.stdin, out)
    return EXIT_USAGE


def _write(out, err, text: str) -> None:
    lines = text.split("\n")
    for line in lines:
        (err if line.startswith("error:") else out).write(line + "\n")


def _ground_program(s: Session, instantiate: bool):
    kb = prop.instantiate(s.kb) if instantiate else s.kb
    return prop.ground_check(kb)


def _cmd_model(s: Session, args, out, err) -> int:
    try:
        p = _ground_program(s, args.instantiate)
        ms = prop.stratified_eval(p)
    except EngineError as e:
        err.write(f"error: {e}\n")
        return EXIT_ENGINE
    for m in ("true", "false"):
        for name in ms[m].names():
            out.write(f"{m}:{name}\n")
    return EXIT_OK


def _cmd_check(s: Session, args, out, err) -> int:
    try:
        p = _ground_program(s, args.instantiate)
        strata = prop.stratify(p)
        ms = prop.stratified_eval(p)
    except NonStratified as e:
        out.write(f"not stratified: {e}\n")
        return EXIT_ENGINE
    except EngineError as e:
        err.write(f"error: {e}\n")
        return EXIT_ENGINE
    n = len(set(strata.values())) if strata else 0
    out.write(f"stratified: {n} strat{'um' if n == 1 else 'a'}\n")
    report = prop.check_constraints(p, ms)
    out.write(report.render())
    return EXIT_OK if report.ok else EXIT_NO


def oracle_query(s: Session, text: str) -> tuple[str, int]:
    """Run a single-module query through the metainterpreter."""
    text = text.strip()
    if text.startswith("?-"):
        text = text[2:]
    try:
        q = Query.parse(text, s.cfg.default_module)
    except (ParseError, QueryError) as e:
        return f"error: {e}", EXIT_USAGE
    goals = []
    stack = [q.goal]
    while stack:
        g = stack.pop(0)
        if isinstance(g, QAnd):
            stack[:0] = list(g.goals)
        elif isinstance(g, QCall):
            goals.append(g)
        else:
            return "error: the oracle takes conjunctions of positive goals only", EXIT_USAGE
    modules = {g.module for g in goals}
    if len(modules) > 1:
        return "error: the oracle runs one module at a time", EXIT_USAGE
    module = modules.pop() if modules else s.cfg.default_module
    try:
        dcs = to_diff_clauses(s.kb.module_clauses(module), module)
        sols = []
        for sol in metaint([g.goal for g in goals], dcs, s.cfg):
            sols.append(Answer(sol))
            if not [v for v in q.variables if not v.name.startswith("_")]:
                break
    except DepthLimitExceeded as e:
        return f"error: {e}", EXIT_ENGINE
    except EngineError as e:
        return f"error: {e}", EXIT_ENGINE
    if not [v for v in q.variables if not v.name.startswith("_")]:
        return ("true", EXIT_OK) if sols else ("false", EXIT_NO)
    return print_answers(sols), (EXIT_OK if sols else EXIT_NO)


HELP = """\
:load FILE       load (or reload) a program file
:model           print the minimal models
:trace on|off    toggle resolution tracing
:quit            leave
Anything else is a query, e.g. false:p. or true:fly(X).
"""


def repl(s: Session, stdin, out) -> int:
    interactive = hasattr(stdin, "isatty") and stdin.isatty()
    while True:
        if interactive:
            out.write("?- ")
            out.flush()
        line = stdin.readline()
        if not line:
            return EXIT_OK
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        if line.startswith(":") and not line.startswith(":-"):
            cmd, _, rest = line[1:].partition(" ")
            rest = rest.strip().rstrip(".")
            if cmd in ("quit", "q", "halt"):
                return EXIT_OK
            if cmd == "load":
                try:
                    for d in s.load(rest):
                        s.err.write(f"{d}\n")
                except (SymLPError, OSError) as e:
                    out.write(f"error: {e}\n")
            elif cmd == "model":
                _cmd_model(s, argparse.Namespace(instantiate=False), out, s.err)
            elif cmd == "trace":
                s.cfg.trace = rest == "on"
            elif cmd == "help":
                out.write(HELP)
            else:
                out.write(f"unknown directive :{cmd}\n")
            continue
        text, _ = s.query(line)
        out.write(text + "\n")


def main() -> None:
    sys.exit(run())
