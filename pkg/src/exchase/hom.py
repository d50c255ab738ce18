"""Backtracking search for homomorphisms, retractions and isomorphisms.

A homomorphism between atom sets maps variables and nulls to terms and fixes
constants pointwise. A retraction into a subset additionally fixes every term
of the subset. The equivalent-chase test moves *all* nulls of the source, so
callers control which terms are frozen.

`canonical_code` produces an isomorphism-invariant, isomorphism-complete byte
string via colour refinement with individualization, used by the derivation
explorer to deduplicate states.
"""
from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .core import Atom, Const, FactBase, Term, sort_atoms, term_key


class HomBudgetExceeded(Exception):
    """The per-check node budget ran out before the search finished."""


def _target_index(target) -> dict[str, tuple[Atom, ...]]:
    if isinstance(target, FactBase):
        return target.by_pred
    index: dict[str, list[Atom]] = {}
    for a in sorted(target, key=Atom.key):
        index.setdefault(a.pred, []).append(a)
    return {p: tuple(v) for p, v in index.items()}


def _movable(t: Term, frozen: frozenset[Term]) -> bool:
    return not isinstance(t, Const) and t not in frozen


class _Search:
    """Most-constrained-atom-first backtracking with forward pruning."""

    def __init__(self, source, target, fixed, frozen, injective, budget, stats):
        self.atoms = list(source)
        self.fb = target if isinstance(target, FactBase) else None
        self.index = _target_index(target)
        self.frozen = frozen
        self.injective = injective
        self.budget = budget
        self.nodes = 0
        self.assignment: dict[Term, Term] = dict(fixed or {})
        self.used: set[Term] = set(self.assignment.values()) if injective else set()
        if stats is not None:
            stats["hom_calls"] = stats.get("hom_calls", 0) + 1

    def _image(self, t: Term) -> Optional[Term]:
        if isinstance(t, Const) or t in self.frozen:
            return t
        return self.assignment.get(t)

    def _pool(self, a: Atom) -> tuple[Atom, ...]:
        """Smallest candidate bucket, using the positional index when some
        argument already has an image."""
        pool = self.index.get(a.pred, ())
        if self.fb is None or not pool:
            return pool
        for i, s in enumerate(a.args):
            img = self._image(s)
            if img is not None:
                bucket = self.fb.by_pred_pos.get((a.pred, i, img), ())
                if len(bucket) < len(pool):
                    pool = bucket
        return pool

    def _candidates(self, a: Atom) -> list[tuple[Atom, list[tuple[Term, Term]]]]:
        out = []
        for cand in self._pool(a):
            if cand.arity != a.arity:
                continue
            binds: list[tuple[Term, Term]] = []
            ok = True
            local: dict[Term, Term] = {}
            for s, t in zip(a.args, cand.args):
                img = self._image(s)
                if img is None:
                    img = local.get(s)
                if img is not None:
                    if img != t:
                        ok = False
                        break
                else:
                    if self.injective and (t in self.used or t in local.values()):
                        ok = False
                        break
                    local[s] = t
                    binds.append((s, t))
            if ok:
                out.append((cand, binds))
        return out

    def run(self) -> Iterator[dict[Term, Term]]:
        yield from self._extend(self.atoms)

    def _extend(self, remaining: list[Atom]) -> Iterator[dict[Term, Term]]:
        self.nodes += 1
        if self.budget is not None and self.nodes > self.budget:
            raise HomBudgetExceeded()
        if not remaining:
            yield dict(self.assignment)
            return
        best_i = 0
        best_cands = None
        for i, a in enumerate(remaining):
            cands = self._candidates(a)
            if best_cands is None or len(cands) < len(best_cands):
                best_i, best_cands = i, cands
                if not cands:
                    return
                if len(cands) == 1:
                    break
        rest = remaining[:best_i] + remaining[best_i + 1 :]
        for _, binds in best_cands:
            for s, t in binds:
                self.assignment[s] = t
                if self.injective:
                    self.used.add(t)
            yield from self._extend(rest)
            for s, t in binds:
                del self.assignment[s]
                if self.injective:
                    self.used.discard(t)


def iter_homomorphisms(
    source: Iterable[Atom],
    target,
    fixed: Optional[Mapping[Term, Term]] = None,
    frozen: frozenset[Term] = frozenset(),
    injective: bool = False,
    budget: Optional[int] = None,
    stats: Optional[dict] = None,
) -> Iterator[dict[Term, Term]]:
    """All extensions of `fixed` mapping the source atoms into the target.

    `frozen` terms map to themselves; constants always do. The returned
    assignments cover only the movable terms that actually occur.
    """
    if fixed:
        for k, v in fixed.items():
            if isinstance(k, Const) and k != v:
                raise ValueError("cannot remap constant %s" % k)
    search = _Search(source, target, fixed, frozen, injective, budget, stats)
    return search.run()


def find_homomorphism(
    source: Iterable[Atom],
    target,
    fixed: Optional[Mapping[Term, Term]] = None,
    frozen: frozenset[Term] = frozenset(),
    injective: bool = False,
    budget: Optional[int] = None,
    stats: Optional[dict] = None,
) -> Optional[dict[Term, Term]]:
    """First solution of `iter_homomorphisms`, or None if none exists."""
    for h in iter_homomorphisms(source, target, fixed, frozen, injective, budget, stats):
        return h
    return None


def exists_retraction(
    whole: Iterable[Atom],
    part: Iterable[Atom],
    budget: Optional[int] = None,
    stats: Optional[dict] = None,
) -> bool:
    """True iff a homomorphism whole -> part fixes every term of `part`."""
    part_atoms = frozenset(part)
    part_fb = part_atoms if not isinstance(part, FactBase) else part
    frozen_terms: set[Term] = set()
    for a in part_atoms:
        frozen_terms.update(a.args)
    pending = [a for a in whole if a not in part_atoms]
    for a in list(pending):
        if all(isinstance(t, Const) or t in frozen_terms for t in a.args):
            return False  # atom is rigid but missing from the part
    return (
        find_homomorphism(
            pending, part_fb, frozen=frozenset(frozen_terms), budget=budget, stats=stats
        )
        is not None
    )


def entails(fb: FactBase, query: Iterable[Atom], stats: Optional[dict] = None):
    """Witness homomorphism from the query into the fact base, or None.

    For atom sets over constants and nulls this is exactly BCQ entailment:
    F entails Q iff Q maps homomorphically into F.
    """
    return find_homomorphism(query, fb, stats=stats)


def are_isomorphic(left, right, stats: Optional[dict] = None) -> bool:
    """True iff a bijective renaming of nulls/variables maps left onto right."""
    la = frozenset(left.atoms if isinstance(left, FactBase) else left)
    ra = frozenset(right.atoms if isinstance(right, FactBase) else right)
    if len(la) != len(ra):
        return False
    lprofile = sorted((a.pred, a.arity) for a in la)
    rprofile = sorted((a.pred, a.arity) for a in ra)
    if lprofile != rprofile:
        return False
    lterms: set[Term] = set().union(*(a.args for a in la)) if la else set()
    rterms: set[Term] = set().union(*(a.args for a in ra)) if ra else set()
    lconsts = {t for t in lterms if isinstance(t, Const)}
    rconsts = {t for t in rterms if isinstance(t, Const)}
    if lconsts != rconsts or len(lterms) != len(rterms):
        return False
    # An injective term mapping with h(left) <= right and |left| = |right|
    # is onto, and its inverse is then a homomorphism as well.
    return find_homomorphism(la, ra, injective=True, stats=stats) is not None


# --- canonical codes -------------------------------------------------------


def _refine(atoms: Sequence[Atom], colors: dict[Term, tuple]) -> dict[Term, tuple]:
    while True:
        sigs: dict[Term, tuple] = {}
        for t in colors:
            occ = []
            for a in atoms:
                if t in a.args:
                    positions = tuple(i for i, x in enumerate(a.args) if x == t)
                    argcolors = tuple(
                        ("c", x.name) if isinstance(x, Const) else colors[x]
                        for x in a.args
                    )
                    occ.append((a.pred, positions, argcolors))
            sigs[t] = (colors[t], tuple(sorted(occ)))
        ranking = {sig: i for i, sig in enumerate(sorted(set(sigs.values())))}
        new = {t: ("r", ranking[sigs[t]]) for t in colors}
        if new == colors:
            return colors
        colors = new


def _code_bytes(atoms: Sequence[Atom], order: dict[Term, int]) -> bytes:
    lines = []
    for a in atoms:
        parts = []
        for t in a.args:
            if isinstance(t, Const):
                parts.append("c:" + t.name)
            else:
                parts.append("n%d" % order[t])
        lines.append("%s(%s)" % (a.pred, ",".join(parts)))
    return "\n".join(sorted(lines)).encode("utf-8")


def _orbit_representatives(
    atoms: Sequence[Atom], colors: dict[Term, tuple], split: Sequence[Term]
) -> list[Term]:
    """One member per automorphism orbit of the split class.

    Terms in the same orbit of the colour-preserving automorphism group give
    branches with identical codes, so exploring one representative is enough;
    highly symmetric fact bases would otherwise branch factorially. Colours
    are made part of the structure via virtual unary atoms so the pinned
    automorphism search respects the current partition."""
    rank = {c: i for i, c in enumerate(sorted(set(colors.values())))}
    augmented = list(atoms) + [
        Atom("\x00color%d" % rank[c], (t,)) for t, c in colors.items()
    ]
    reps: list[Term] = []
    for t in sorted(split, key=term_key):
        equivalent = False
        for rep in reps:
            try:
                auto = find_homomorphism(
                    augmented, augmented, fixed={rep: t}, injective=True, budget=20000
                )
            except HomBudgetExceeded:
                auto = None
            if auto is not None:
                equivalent = True
                break
        if not equivalent:
            reps.append(t)
    return reps


def _canonical_search(atoms: Sequence[Atom], colors: dict[Term, tuple]) -> bytes:
    classes: dict[tuple, list[Term]] = {}
    for t, c in colors.items():
        classes.setdefault(c, []).append(t)
    split = None
    for c in sorted(classes):
        if len(classes[c]) > 1:
            split = classes[c]
            break
    if split is None:
        # Discrete partition: colours are unique, so ordering by colour is
        # label-independent.
        ranked = sorted(colors.items(), key=lambda item: item[1])
        order = {t: i for i, (t, _) in enumerate(ranked)}
        return _code_bytes(atoms, order)
    best: Optional[bytes] = None
    for t in _orbit_representatives(atoms, colors, split):
        branch = dict(colors)
        branch[t] = ("i", branch[t])
        refined = _refine(atoms, branch)
        code = _canonical_search(atoms, refined)
        if best is None or code < best:
            best = code
    return best


def canonical_code(fb) -> bytes:
    """Iso-invariant, iso-complete byte code for an atom set.

    Colour refinement on the atom-term incidence structure; when the
    partition stalls with non-singleton classes, individualize and recurse,
    keeping the lexicographically smallest code.
    """
    atoms = sort_atoms(fb.atoms if isinstance(fb, FactBase) else fb)
    movables: set[Term] = set()
    for a in atoms:
        movables.update(t for t in a.args if not isinstance(t, Const))
    if not movables:
        return _code_bytes(atoms, {})
    colors = _refine(atoms, {t: ("r", 0) for t in movables})
    return _canonical_search(atoms, colors)
