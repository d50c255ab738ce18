"""Derivation-graph exploration, terminating-derivation search, budgeted BCQ
entailment, and corpus classification.

The explorer walks the graph whose nodes are fact bases and whose edges are
applicable triggers, deduplicating states up to isomorphism. Exhausting the
graph within budget proves that *every* derivation of the chosen variant is
finite; finding a path deeper than the depth budget yields a growth witness
(a non-termination certificate only for atomic-head rule sets, where unfair
infinite derivations imply fair ones).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import hom, normalize
from .core import (
    TERMINATED_FAIR,
    Atom,
    Derivation,
    FactBase,
    KnowledgeBase,
    Trigger,
    sort_atoms,
)
from .chase import (
    ChaseState,
    ChaseVariant,
    DatalogFirst,
    FIFO,
    Phased,
    Scripted,
    Strategy,
    applicable_edges,
    run_chase,
)

ALL_FINITE = "all_finite"
GROWTH = "growth"
BUDGET_EXCEEDED = "budget_exceeded"

CERTIFIED = "non-termination certified"
UNCERTIFIED = "unbounded derivation found (fairness not certified)"


@dataclass(frozen=True)
class ExplorationReport:
    verdict: str  # all_finite | growth | budget_exceeded
    nodes: int
    max_len: Optional[int] = None
    witness: Optional[tuple[tuple[Atom, ...], ...]] = None  # per-step deltas
    witness_label: Optional[str] = None
    frontier: Optional[int] = None
    dedup_hits: int = 0
    budgets: dict = field(default_factory=dict)


class _Budget(Exception):
    pass


class _Growth(Exception):
    def __init__(self, witness):
        self.witness = witness


def explore_all(
    kb: KnowledgeBase,
    variant: ChaseVariant,
    max_depth: int,
    max_nodes: int,
    *,
    dedup: bool = True,
    hom_budget: Optional[int] = None,
) -> ExplorationReport:
    """Exhaustive expansion of the derivation graph from kb.facts.

    Depth-first in canonical edge order, so a diverging system yields a
    growth witness after about `max_depth` expansions instead of after the
    whole breadth-first frontier. States are deduplicated up to isomorphism;
    a state reached again at a *smaller* depth is re-expanded, which keeps
    the all-finite verdict sound (every derivation of length <= max_depth
    is still covered)."""
    if max_depth <= 0 or max_nodes <= 0:
        raise ValueError("budgets must be positive")
    budgets = {"max_depth": max_depth, "max_nodes": max_nodes}
    atomic_only = all(len(r.head) == 1 for r in kb.rules)
    seen_depth: dict[bytes, int] = {}
    state = {"expansions": 0, "dedup_hits": 0, "max_len": 0, "frontier": 0}

    def visit(fb: FactBase, depth: int, deltas: list[tuple[Atom, ...]]) -> None:
        state["expansions"] += 1
        state["max_len"] = max(state["max_len"], depth)
        if state["expansions"] > max_nodes:
            raise _Budget()
        for t in applicable_edges(kb, fb, variant, hom_budget=hom_budget):
            child = fb.union(t.output)
            delta = sort_atoms(child.atoms - fb.atoms)
            if depth + 1 > max_depth:
                raise _Growth(tuple(deltas) + (delta,))
            if dedup:
                code = hom.canonical_code(child)
                prev = seen_depth.get(code)
                if prev is not None and prev <= depth + 1:
                    state["dedup_hits"] += 1
                    continue
                seen_depth[code] = depth + 1
            deltas.append(delta)
            state["frontier"] += 1
            visit(child, depth + 1, deltas)
            state["frontier"] -= 1
            deltas.pop()

    try:
        if dedup:
            seen_depth[hom.canonical_code(kb.facts)] = 0
        visit(kb.facts, 0, [])
    except _Growth as g:
        return ExplorationReport(
            verdict=GROWTH,
            nodes=state["expansions"],
            witness=g.witness,
            witness_label=CERTIFIED if atomic_only else UNCERTIFIED,
            dedup_hits=state["dedup_hits"],
            budgets=budgets,
        )
    except _Budget:
        return ExplorationReport(
            verdict=BUDGET_EXCEEDED,
            nodes=state["expansions"],
            frontier=state["frontier"],
            dedup_hits=state["dedup_hits"],
            budgets=budgets,
        )
    return ExplorationReport(
        verdict=ALL_FINITE,
        nodes=state["expansions"],
        max_len=state["max_len"],
        dedup_hits=state["dedup_hits"],
        budgets=budgets,
    )


def find_terminating(
    kb: KnowledgeBase,
    variant: ChaseVariant,
    max_steps: int,
    pool: Sequence[Strategy] = (),
    *,
    deepening: bool = True,
    hom_budget: Optional[int] = None,
) -> Optional[Derivation]:
    """First fairly-terminating derivation found: the strategy pool first,
    then iterative deepening over trigger choices. Absence is not a proof."""
    strategies: list[Strategy] = [FIFO(), DatalogFirst()]
    strategies.extend(pool)
    for strat in strategies:
        outcome = run_chase(kb, variant, strat, max_steps, hom_budget=hom_budget)
        if outcome.verdict == TERMINATED_FAIR:
            return outcome.derivation
    if not deepening:
        return None
    dead: dict[bytes, int] = {}

    def dfs(fb: FactBase, depth_left: int, path: list[tuple[Trigger, FactBase]]):
        edges = list(applicable_edges(kb, fb, variant, hom_budget=hom_budget))
        if not edges:
            return list(path)
        if depth_left == 0:
            return None
        code = hom.canonical_code(fb)
        if dead.get(code, -1) >= depth_left:
            return None
        for t in edges:
            child = fb.union(t.output)
            path.append((t, child))
            found = dfs(child, depth_left - 1, path)
            if found is not None:
                return found
            path.pop()
        dead[code] = depth_left
        return None

    for budget in range(1, max_steps + 1):
        dead.clear()
        found = dfs(kb.facts, budget, [])
        if found is not None:
            return Derivation(
                initial=kb.facts,
                steps=tuple(found),
                variant=variant.label,
                verdict=TERMINATED_FAIR,
            )
    return None


@dataclass(frozen=True)
class TriState:
    kind: str  # yes | no | unknown
    witness: Optional[dict] = None

    @property
    def is_yes(self) -> bool:
        return self.kind == "yes"


def entails(
    kb: KnowledgeBase,
    query: Iterable[Atom],
    variant: ChaseVariant,
    max_steps: int,
    strategy: Optional[Strategy] = None,
    hom_budget: Optional[int] = None,
) -> TriState:
    """Budgeted BCQ entailment via the chase.

    Yes as soon as the query maps into the current fact base (sound for the
    monotone variants even mid-run); No only on fair termination without a
    match; Unknown when the step budget runs out first.
    """
    query = tuple(query)
    strategy = strategy or DatalogFirst()
    strategy.reset()
    state = ChaseState(kb=kb, variant=variant, fb=kb.facts, hom_budget=hom_budget)
    witness = hom.entails(state.fb, query)
    if witness is not None:
        return TriState("yes", witness)
    steps = 0
    try:
        while steps < max_steps:
            t = strategy.choose(state)
            if t is None:
                if strategy.exhausted_early() and state.first_applicable() is not None:
                    return TriState("unknown")
                return TriState("no")
            state.apply(t)
            steps += 1
            witness = hom.entails(state.fb, query)
            if witness is not None:
                return TriState("yes", witness)
    except hom.HomBudgetExceeded:
        return TriState("unknown")
    if state.first_applicable() is None:
        return TriState("no")
    return TriState("unknown")


# --- corpus classification --------------------------------------------------


class FixtureError(ValueError):
    """A fixture file is malformed or references unknown material."""


_TRANSFORMS = {
    None: lambda rules: rules,
    "sp": lambda rules: normalize.single_piece(rules).output_rules,
    "1ad": lambda rules: normalize.one_way(rules).output_rules,
    "2ad": lambda rules: normalize.two_way(rules).output_rules,
}


@dataclass
class Fixture:
    id: str
    kb: KnowledgeBase
    budgets: dict
    expect: list[dict]
    strategies: list[Strategy]
    source: str


def _strategy_from_spec(spec) -> Strategy:
    if isinstance(spec, dict) and "phased" in spec:
        return Phased([(tuple(ids), mode) for ids, mode in spec["phased"]])
    if isinstance(spec, dict) and "scripted" in spec:
        return Scripted([tuple(s) if isinstance(s, list) else s for s in spec["scripted"]])
    raise FixtureError("unknown strategy spec: %r" % (spec,))


def load_fixture(path: Path) -> Fixture:
    from . import textio

    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise FixtureError("%s: %s" % (path, e))
    try:
        fixture_id = raw["id"]
        erl = raw["erl"]
        budgets = raw["budgets"]
        expect = raw["expect"]
    except KeyError as e:
        raise FixtureError("%s: missing key %s" % (path, e))
    erl_path = path.parent / erl
    doc = textio.parse_document(erl_path.read_text())
    rules = _TRANSFORMS[raw.get("transform")](tuple(doc.rules))
    kb = KnowledgeBase(tuple(rules), doc.factbase())
    strategies = [_strategy_from_spec(s) for s in raw.get("strategies", [])]
    for entry in expect:
        if entry.get("mode") not in ("forall", "exists"):
            raise FixtureError("%s: bad mode in %r" % (path, entry))
        ChaseVariant.parse(entry.get("variant", ""))
    return Fixture(fixture_id, kb, budgets, expect, strategies, str(erl_path.name))


def classify_fixture(fixture: Fixture) -> list[dict]:
    rows = []
    b = fixture.budgets
    for entry in fixture.expect:
        variant = ChaseVariant.parse(entry["variant"])
        mode = entry["mode"]
        expected = entry["verdict"]
        if mode == "forall":
            report = explore_all(
                fixture.kb,
                variant,
                max_depth=b.get("max_depth", 12),
                max_nodes=b.get("max_nodes", 5000),
            )
            observed = report.verdict
        else:
            derivation = find_terminating(
                fixture.kb,
                variant,
                max_steps=b.get("max_steps", 20),
                pool=fixture.strategies,
                deepening=b.get("deepening", True),
            )
            observed = "terminating" if derivation is not None else "none_found"
        rows.append(
            {
                "fixture": fixture.id,
                "variant": variant.label,
                "mode": mode,
                "expected": expected,
                "observed": observed,
                "budget": dict(b),
                "pass": expected == observed,
            }
        )
    return rows


def classify(fixture_dir: Path) -> list[dict]:
    """Run every fixture's expectations; one row per (fixture, variant, mode)."""
    fixture_dir = Path(fixture_dir)
    paths = sorted(fixture_dir.glob("*.json"))
    if not paths:
        raise FixtureError("no fixture files in %s" % fixture_dir)
    rows: list[dict] = []
    for path in paths:
        rows.extend(classify_fixture(load_fixture(path)))
    return rows
