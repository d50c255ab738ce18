import random

import pytest

from exchase.core import (
    Atom,
    Const,
    FactBase,
    FactBaseError,
    KnowledgeBase,
    KnowledgeBaseError,
    Null,
    Rule,
    RuleError,
    Trigger,
    Var,
    frontier_of,
    make_match,
    term_key,
)

from conftest import load_doc


def V(*names):
    return tuple(Var(n) for n in names)


def test_term_ordering_and_equality():
    assert term_key(Const("a")) < term_key(Null("z")) < term_key(Var("X"))
    assert Null("n1") == Null("n1")
    assert Null("n1") != Null("n2")
    assert Const("a") != Null("a")


def test_frontier_rule6():
    # R(x,y) -> exists z,u. P(x,z), A(z), A(u), P(x,y): frontier is {x, y}
    rule = Rule(
        "r6",
        (Atom("r", V("X", "Y")),),
        (Atom("p", V("X", "Z")), Atom("a", V("Z")), Atom("a", V("U")), Atom("p", V("X", "Y"))),
    )
    assert frontier_of(rule) == {"X", "Y"}
    assert rule.existentials == {"Z", "U"}
    assert not rule.is_datalog


def test_frontier_datalog_all_head_vars_shared():
    rule = Rule("d", (Atom("p", V("X")),), (Atom("q", V("X")),))
    assert frontier_of(rule) == {"X"}
    assert rule.is_datalog


def test_frontier_single_existential():
    rule = Rule("su", (Atom("a", V("X")),), (Atom("p", V("X", "Z")),))
    assert frontier_of(rule) == {"X"}
    assert rule.existentials == {"Z"}


def test_rule_partition_invariant():
    rule = Rule("x", (Atom("p", V("X", "Y")),), (Atom("p", V("Y", "Z")), Atom("p", V("Z", "Y"))))
    assert rule.frontier | rule.existentials == rule.head_vars
    assert rule.frontier <= rule.body_vars
    assert not (rule.frontier & rule.existentials)


def test_rule_rejects_empty_parts_and_nulls():
    with pytest.raises(RuleError):
        Rule("bad", (), (Atom("p", V("X")),))
    with pytest.raises(RuleError):
        Rule("bad", (Atom("p", (Null("n"),)),), (Atom("q", V("X")),))


def test_trigger_output_example1():
    rule = Rule(
        "R", (Atom("p", V("X", "Y")),), (Atom("p", V("Y", "Z")), Atom("p", V("Z", "Y")))
    )
    t1 = Trigger(rule, make_match({"X": Const("a"), "Y": Const("b")}))
    assert t1.support == (Atom("p", (Const("a"), Const("b"))),)
    out = t1.output
    assert len(out) == 2
    (z,) = t1.output_nulls
    assert set(out) == {Atom("p", (Const("b"), z)), Atom("p", (z, Const("b")))}
    # querying the same trigger twice yields identical labels
    t1_again = Trigger(rule, make_match({"X": Const("a"), "Y": Const("b")}), serial=99)
    assert t1_again.output == out

    # t2 = (R, {x -> b, y -> z_t1}) -> {P(z_t1, z_t2), P(z_t2, z_t1)}
    t2 = Trigger(rule, make_match({"X": Const("b"), "Y": z}))
    (z2,) = t2.output_nulls
    assert z2 != z
    assert set(t2.output) == {Atom("p", (z, z2)), Atom("p", (z2, z))}


def test_trigger_output_datalog():
    rule = Rule("d", (Atom("p", V("X")),), (Atom("q", V("X")),))
    t = Trigger(rule, make_match({"X": Const("a")}))
    assert t.output == (Atom("q", (Const("a"),)),)
    assert not t.output_nulls


def test_null_freshness_across_distinct_triggers():
    rule = Rule("su", (Atom("a", V("X")),), (Atom("p", V("X", "Z")),))
    rng = random.Random(7)
    seen = set()
    for name in "abcdefgh":
        t = Trigger(rule, make_match({"X": Const(name)}), serial=rng.randint(0, 100))
        (z,) = t.output_nulls
        assert z not in seen
        seen.add(z)


def test_factbase_rejects_variables_and_dedups():
    with pytest.raises(FactBaseError):
        FactBase.of([Atom("p", V("X"))])
    fb = FactBase.of([Atom("p", (Const("a"),)), Atom("p", (Const("a"),))])
    assert len(fb) == 1


def test_factbase_union_and_restrict():
    a = Atom("p", (Const("a"), Const("b")))
    b = Atom("q", (Const("a"),))
    fb = FactBase.of([a])
    fb2 = fb.union([b])
    assert fb2.signature == {"p", "q"}
    assert fb2.restrict({"p"}).atoms == frozenset([a])
    assert fb.union([a]) is fb  # no-op unions return the same value


def test_kb_duplicate_ids_and_arity_clash():
    r1 = Rule("r", (Atom("p", V("X")),), (Atom("q", V("X")),))
    r2 = Rule("r", (Atom("q", V("X")),), (Atom("p", V("X")),))
    with pytest.raises(KnowledgeBaseError):
        KnowledgeBase((r1, r2), FactBase.of([]))
    r3 = Rule("r3", (Atom("p", V("X", "Y")),), (Atom("q", V("X")),))
    with pytest.raises(KnowledgeBaseError):
        KnowledgeBase((r1, r3), FactBase.of([]))


def test_derivation_replay_determinism():
    """Replaying a derivation step by step reproduces the identical fact base."""
    from exchase.chase import ChaseVariant, FIFO, run_chase

    kb = load_doc("t2f.erl").knowledge_base()
    out = run_chase(kb, ChaseVariant.parse("r"), FIFO(), 12)
    fb = kb.facts
    for t, after in out.derivation.steps:
        replayed = Trigger(t.rule, t.match)
        assert set(replayed.support) <= fb.atoms
        fb = fb.union(replayed.output)
        assert fb.atoms == after.atoms
    assert fb.atoms == out.result.atoms


def test_derivation_monotone_and_novel():
    from exchase.chase import ChaseVariant, FIFO, run_chase

    kb = load_doc("ex1.erl").knowledge_base()
    out = run_chase(kb, ChaseVariant.parse("o"), FIFO(), 10)
    prev = kb.facts
    for t, fb in out.derivation.steps:
        assert prev.atoms < fb.atoms  # strict growth: out(t) not within F
        assert not set(t.output) <= prev.atoms
        prev = fb
