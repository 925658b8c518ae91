"""SymLP: Horn clauses for verification, dual Horn clauses for falsification."""

from importlib.resources import files

from .compiler import KnowledgeBase, compile_program, compile_source, flip
from .engine import EngineConfig, Query, explain, solve, succeeds, unfalsifiable, unverifiable
from .reader import format_clause, format_term, parse_program, parse_term, tokenize
from .terms import Atom, Bindings, Compound, Number, Var, apply, unify

__version__ = "0.1.0"


def corpus_path(name: str):
    """Path of a bundled example program, e.g. ``corpus_path("birds")``."""
    if not name.endswith((".symlp", ".pro")):
        name += ".symlp"
    return files(__name__) / "corpus" / name


def load_corpus(name: str, mode: str = "strict"):
    """Compile a bundled program; returns ``(kb, diagnostics)``."""
    p = corpus_path(name)
    return compile_source(p.read_text(encoding="utf-8"), mode, file=p.name)


CORPUS = ("dual1", "horn1", "birds", "gravity", "stocks", "legal", "constraints", "nuclear")
