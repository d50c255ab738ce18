"""Immutable value objects for existential-rule knowledge bases.

Terms, atoms, rules, fact bases, triggers and derivations. Everything is
hashable and safe to share between threads; fact bases lazily cache their
per-predicate indexes (plain dict writes, safe because instances are frozen).

Canonical ordering: constants sort before nulls, nulls before variables;
atoms sort by predicate name then argument order. All iteration and
serialization in the package follows this order so runs are reproducible.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Union


@dataclass(frozen=True, slots=True)
class Const:
    """A named individual; rigid under homomorphisms."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Null:
    """A labelled fresh witness minted by a trigger for an existential variable.

    Two nulls are equal iff their labels are equal; a null is never equal to
    a constant.
    """

    label: str

    def __str__(self) -> str:
        return "_" + self.label


@dataclass(frozen=True, slots=True)
class Var:
    """A rule/query variable; never occurs in a stored fact base."""

    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Const, Null, Var]


def term_key(t: Term) -> tuple:
    """Total order on terms: constants < nulls < variables, then by name."""
    if isinstance(t, Const):
        return (0, t.name)
    if isinstance(t, Null):
        return (1, t.label)
    return (2, t.name)


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def key(self) -> tuple:
        return (self.pred, tuple(term_key(a) for a in self.args))

    def substitute(self, mapping: Mapping[Term, Term]) -> "Atom":
        return Atom(self.pred, tuple(mapping.get(a, a) for a in self.args))

    def variables(self) -> frozenset[str]:
        return frozenset(a.name for a in self.args if isinstance(a, Var))

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return "%s(%s)" % (self.pred, ",".join(str(a) for a in self.args))


def atom(pred: str, *args: Term) -> Atom:
    return Atom(pred, tuple(args))


def sort_atoms(atoms: Iterable[Atom]) -> tuple[Atom, ...]:
    return tuple(sorted(atoms, key=Atom.key))


class RuleError(ValueError):
    """A rule violates the body/frontier/existential well-formedness contract."""


@dataclass(frozen=True)
class Rule:
    """body -> exists z. head, with the frontier/existential split derived.

    The frontier is vars(body) & vars(head); existential variables are
    vars(head) - vars(body). Body and head are stored canonically sorted.
    """

    id: str
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", sort_atoms(self.body))
        object.__setattr__(self, "head", sort_atoms(self.head))
        if not self.body or not self.head:
            raise RuleError("rule %r needs a non-empty body and head" % self.id)
        for a in self.body + self.head:
            for t in a.args:
                if isinstance(t, Null):
                    raise RuleError("rule %r contains a null term" % self.id)

    @cached_property
    def body_vars(self) -> frozenset[str]:
        return frozenset().union(*(a.variables() for a in self.body))

    @cached_property
    def head_vars(self) -> frozenset[str]:
        return frozenset().union(*(a.variables() for a in self.head))

    @cached_property
    def frontier(self) -> frozenset[str]:
        return self.body_vars & self.head_vars

    @cached_property
    def existentials(self) -> frozenset[str]:
        return self.head_vars - self.body_vars

    @property
    def is_datalog(self) -> bool:
        return not self.existentials

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.body)
        head = ", ".join(str(a) for a in self.head)
        ex = ""
        if self.existentials:
            ex = "exists %s. " % ",".join(sorted(self.existentials))
        return "[%s] %s -> %s%s." % (self.id, body, ex, head)


def frontier_of(rule: Rule) -> frozenset[str]:
    """Variables shared between a rule's body and head."""
    return rule.frontier


class FactBaseError(ValueError):
    """A fact base contains an unbound variable."""


@dataclass(frozen=True)
class FactBase:
    """A finite atom set over constants and nulls, with cached indexes."""

    atoms: frozenset[Atom]

    def __post_init__(self) -> None:
        if not isinstance(self.atoms, frozenset):
            object.__setattr__(self, "atoms", frozenset(self.atoms))
        for a in self.atoms:
            for t in a.args:
                if isinstance(t, Var):
                    raise FactBaseError("fact base atom %s contains variable %s" % (a, t))

    @staticmethod
    def of(atoms: Iterable[Atom] = ()) -> "FactBase":
        return FactBase(frozenset(atoms))

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, a: Atom) -> bool:
        return a in self.atoms

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.sorted_atoms)

    @cached_property
    def sorted_atoms(self) -> tuple[Atom, ...]:
        return sort_atoms(self.atoms)

    @cached_property
    def by_pred(self) -> dict[str, tuple[Atom, ...]]:
        index: dict[str, list[Atom]] = {}
        for a in self.sorted_atoms:
            index.setdefault(a.pred, []).append(a)
        return {p: tuple(atoms) for p, atoms in index.items()}

    @cached_property
    def by_pred_pos(self) -> dict[tuple[str, int, Term], tuple[Atom, ...]]:
        """Index (predicate, argument position, term) -> atoms, for joins."""
        index: dict[tuple[str, int, Term], list[Atom]] = {}
        for a in self.sorted_atoms:
            for i, t in enumerate(a.args):
                index.setdefault((a.pred, i, t), []).append(a)
        return {k: tuple(v) for k, v in index.items()}

    @cached_property
    def signature(self) -> frozenset[str]:
        return frozenset(a.pred for a in self.atoms)

    @cached_property
    def terms(self) -> frozenset[Term]:
        out: set[Term] = set()
        for a in self.atoms:
            out.update(a.args)
        return frozenset(out)

    @cached_property
    def nulls(self) -> frozenset[Null]:
        return frozenset(t for t in self.terms if isinstance(t, Null))

    def union(self, extra: Iterable[Atom]) -> "FactBase":
        extra = frozenset(extra)
        if extra <= self.atoms:
            return self
        return FactBase(self.atoms | extra)

    def restrict(self, signature: Iterable[str]) -> "FactBase":
        sig = frozenset(signature)
        return FactBase(frozenset(a for a in self.atoms if a.pred in sig))


class KnowledgeBaseError(ValueError):
    """Rule ids clash or a predicate is used with two arities."""


@dataclass(frozen=True)
class KnowledgeBase:
    rules: tuple[Rule, ...]
    facts: FactBase

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise KnowledgeBaseError("duplicate rule ids: %s" % ", ".join(dup))
        arities: dict[str, int] = {}
        for a in self._all_atoms():
            seen = arities.setdefault(a.pred, a.arity)
            if seen != a.arity:
                raise KnowledgeBaseError(
                    "predicate %r used with arities %d and %d" % (a.pred, seen, a.arity)
                )

    def _all_atoms(self) -> Iterator[Atom]:
        for r in self.rules:
            yield from r.body
            yield from r.head
        yield from self.facts.atoms

    @cached_property
    def datalog_rules(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.is_datalog)

    @cached_property
    def existential_rules(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if not r.is_datalog)

    @cached_property
    def signature(self) -> frozenset[str]:
        return frozenset(a.pred for a in self._all_atoms())

    def rule_by_id(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)


Match = tuple[tuple[str, Term], ...]


def make_match(mapping: Mapping[str, Term]) -> Match:
    return tuple(sorted(mapping.items()))


def _match_digest(rule_id: str, match: Match) -> str:
    """Deterministic fingerprint of (rule, body match).

    Null labels are minted from this digest, so a trigger's output is a pure
    function of the rule and its match: re-enumerating the same trigger later
    (or in another derivation from the same KB) yields identical atoms, and
    distinct triggers mint disjoint labels.
    """
    parts = [rule_id]
    for name, t in match:
        k = term_key(t)
        parts.append("%s=%d:%s" % (name, k[0], k[1]))
    return hashlib.sha1("|".join(parts).encode("utf-8")).hexdigest()[:10]


@dataclass(frozen=True)
class Trigger:
    """A rule plus a total homomorphism from its body into some fact base.

    `serial` records creation order for provenance; it plays no role in null
    labelling, which depends only on (rule id, match, variable name).
    """

    rule: Rule
    match: Match
    serial: int = 0

    @cached_property
    def mapping(self) -> dict[str, Term]:
        return dict(self.match)

    @cached_property
    def support(self) -> tuple[Atom, ...]:
        m = self.mapping
        return sort_atoms(
            Atom(a.pred, tuple(m[t.name] if isinstance(t, Var) else t for t in a.args))
            for a in self.rule.body
        )

    @cached_property
    def _extended(self) -> dict[str, Term]:
        m = dict(self.mapping)
        if self.rule.existentials:
            digest = _match_digest(self.rule.id, self.match)
            for z in sorted(self.rule.existentials):
                m[z] = Null("%s#%s.%s" % (self.rule.id, digest, z))
        return m

    @cached_property
    def output(self) -> tuple[Atom, ...]:
        m = self._extended
        return sort_atoms(
            Atom(a.pred, tuple(m[t.name] if isinstance(t, Var) else t for t in a.args))
            for a in self.rule.head
        )

    @cached_property
    def output_nulls(self) -> frozenset[Null]:
        return frozenset(
            t for t in self._extended.values() if isinstance(t, Null)
        ) - frozenset(t for t in self.mapping.values() if isinstance(t, Null))

    @cached_property
    def body_key(self) -> tuple:
        return (self.rule.id, tuple((n, term_key(t)) for n, t in self.match))

    @cached_property
    def frontier_key(self) -> tuple:
        fr = self.rule.frontier
        return (
            self.rule.id,
            tuple((n, term_key(t)) for n, t in self.match if n in fr),
        )

    def __str__(self) -> str:
        binding = ",".join("%s->%s" % (n, t) for n, t in self.match)
        return "(%s, {%s})" % (self.rule.id, binding)


def trigger_support(t: Trigger) -> tuple[Atom, ...]:
    return t.support


def trigger_output(t: Trigger) -> tuple[Atom, ...]:
    return t.output


TERMINATED_FAIR = "terminated_fair"
TERMINATED_UNFAIR = "terminated_unfair"
BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class Derivation:
    """A sequence of trigger applications with the fact base after each step."""

    initial: FactBase
    steps: tuple[tuple[Trigger, FactBase], ...]
    variant: str
    verdict: str

    @property
    def result(self) -> FactBase:
        if self.steps:
            return self.steps[-1][1]
        return self.initial

    def __len__(self) -> int:
        return len(self.steps)

    def factbases(self) -> Iterator[FactBase]:
        yield self.initial
        for _, fb in self.steps:
            yield fb

    def deltas(self) -> list[tuple[Atom, ...]]:
        """Per-step newly added atoms, in canonical order."""
        out = []
        prev = self.initial
        for _, fb in self.steps:
            out.append(sort_atoms(fb.atoms - prev.atoms))
            prev = fb
        return out
