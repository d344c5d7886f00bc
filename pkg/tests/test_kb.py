from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from embodiedqa.kb import (Entity, KBParseError, Triplet, build_kb, facts_about, infer_closure, normalize,
                           parse_triplets, query_entities, replay_provenance, singularize, try_resolve)


def closure_oracle(base: set[tuple[str, str, str]], max_hops: int) -> set[tuple[str, str, str]]:
    """Fixed point over hop-bounded IsA reachability, then one lifted fact."""
    isa = {(a, b) for a, r, b in base if r == "IsA"}
    nodes = {a for a, _ in isa}
    reach = {(a, a) for a in nodes}  # zero hops
    frontier = set(reach)
    within = set()
    for _ in range(max_hops):
        frontier = {(a, c) for a, b in frontier for b2, c in isa if b == b2}
        within |= frontier
    derived = set()
    for a, b in within:
        if a == b:
            continue
        for e1, r, e2 in base:
            if e1 == b and r != "IsA":
                derived.add((a, r, e2))
    return derived - base


def test_basketball_two_hop_derivation_is_verbatim(kb):
    t = kb.triplets[("basketball", "ReceivesAction", "purchased at a sporting goods store")]
    assert t.derived
    assert t.provenance == (
        ("basketball", "IsA", "basketball equipment"),
        ("basketball equipment", "IsA", "sports equipment"),
        ("sports equipment", "ReceivesAction", "purchased at a sporting goods store"),
    )
    assert replay_provenance(t) == t.key
    assert kb.name("basketball") == "Basketball"


def test_default_kb_has_no_unreplayable_derivations(kb):
    for t in kb.derived:
        assert replay_provenance(t) == t.key


triplet_sets = st.sets(
    st.tuples(st.sampled_from("abcdef"), st.sampled_from(["IsA", "IsA", "UsedFor", "AtLocation"]),
              st.sampled_from("abcdefxyz")),
    max_size=18)


@settings(max_examples=100, deadline=None)
@given(triplet_sets, st.integers(0, 4))
def test_closure_matches_fixed_point_oracle(base, hops):
    kb = build_kb({}, [Triplet(*t) for t in base], 0)
    closed = infer_closure(kb, hops)
    derived = {t.key for t in closed.derived}
    assert derived == closure_oracle(set(base), hops)
    assert {t.key for t in closed.base} == set(base)


@settings(max_examples=50, deadline=None)
@given(triplet_sets)
def test_closure_is_monotone_in_hops(base):
    kb = build_kb({}, [Triplet(*t) for t in base], 0)
    sizes = [len(infer_closure(kb, h).triplets) for h in range(4)]
    assert sizes == sorted(sizes)


def test_isa_cycle_terminates_with_warning():
    kb = build_kb({}, [Triplet("a", "IsA", "b"), Triplet("b", "IsA", "a"), Triplet("b", "UsedFor", "x")], 0)
    closed = infer_closure(kb, 5)
    assert ("a", "UsedFor", "x") in closed.triplets
    assert closed.warnings


def test_negative_hops_rejected():
    with pytest.raises(ValueError):
        infer_closure(build_kb({}, [], 0), -1)


def test_parse_triplets_reports_bad_lines():
    with pytest.raises(KBParseError) as exc:
        parse_triplets("a\tIsA\tb\nbroken line\n")
    assert exc.value.line_no == 2
    rows, rejected, n = parse_triplets("a\tIsA\tb\nc\tRelatedTo\td\n")
    assert len(rows) == 1 and rejected == [(2, "RelatedTo")] and n == 2


@pytest.mark.parametrize("word,expected", [("apples", "apple"), ("loaves", "loaf"), ("knives", "knife"),
                                           ("boxes", "box"), ("lettuce", "lettuce"), ("glasses", "glasses")])
def test_singularize(word, expected):
    assert singularize(word) == expected


def test_normalize_strips_articles_and_case():
    assert normalize("The  Sports Equipment") == "sports equipment"
    assert normalize("a game") == "game"


def test_resolution_and_lookup(kb):
    assert try_resolve(kb, "a game") is not None
    assert try_resolve(kb, "no such thing at all") is None
    assert "basketball" in query_entities(kb, "UsedFor", try_resolve(kb, "a game"))
    assert ("IsA", "basketball equipment") in facts_about(kb, "basketball")


def test_aliases_resolve():
    kb = build_kb({"tv": Entity("tv", "Television", ("telly",))}, [Triplet("tv", "UsedFor", "watching")], 0)
    assert try_resolve(kb, "the telly") == "tv"
    assert try_resolve(kb, "Television") == "tv"
