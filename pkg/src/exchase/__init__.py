"""Forward-chaining engine and analysis toolkit for existential rules.

Implements the oblivious, semi-oblivious, restricted and equivalent chase
variants (with optional Datalog-first priority), three rule normalisation
procedures (single-piece, one-way atomic, two-way atomic), a derivation-graph
termination explorer, BCQ entailment with budgets, and a compiler from
deterministic Turing machines to rule sets that drive the restricted chase.
"""

from .core import (
    Atom,
    Const,
    Derivation,
    FactBase,
    KnowledgeBase,
    Null,
    Rule,
    Trigger,
    Var,
)
from .chase import ChaseVariant, run_chase

__all__ = [
    "Atom",
    "ChaseVariant",
    "Const",
    "Derivation",
    "FactBase",
    "KnowledgeBase",
    "Null",
    "Rule",
    "Trigger",
    "Var",
    "run_chase",
]

__version__ = "0.1.0"
