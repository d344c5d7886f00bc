from __future__ import annotations

import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from embodiedqa.catalog import CATEGORIES, entity_name
from embodiedqa.query.parser import parse_question
from embodiedqa.questions.ast import (Bool, Count, Enumeration, KBClause, ObjectFilter, QuestionAst,
                                      QuestionRecord, SceneClause)
from embodiedqa.questions.balance import InsufficientPool, audit, balance, default_targets, prune_families
from embodiedqa.questions.dataset import build_dataset, generate_pool, load_dataset, save_dataset, scene_facts
from embodiedqa.questions.generate import compute_answer, random_ast, sample_question
from embodiedqa.questions.grammar import realize_text
from embodiedqa.questions.tags import answer_field, family, subtag, tag
from embodiedqa.recon.graph import SceneGraph, SceneObject
from embodiedqa.recon.relations import Relation
from embodiedqa.geometry import Box
from embodiedqa.scene.truth import ground_truth_scene_graph


def answer_oracle(ast: QuestionAst, graph: SceneGraph, kb) -> object:
    """Evaluate every filter on every object by scanning relations and triplets directly."""
    cat_of = {o.object_id: o.category for o in graph.objects}

    def selects(f, o):
        if not CATEGORIES[o.category].pickupable:
            return False
        if f.category is not None:
            ok = o.category == f.category
        else:
            ok = (entity_name(o.category), f.kb.relation, f.kb.entity) in kb.triplets
        if ok and f.scene is not None:
            ok = any(s == o.object_id and r == f.scene.relation and cat_of[x] == f.scene.anchor
                     for s, r, x in graph.relations)
        return ok

    groups = [[{o.object_id for o in graph.objects if selects(f, o)} for f in g] for g in ast.groups]
    union = [set().union(*g) for g in groups]
    if ast.qtype == "Existence":
        return Bool(all(groups[0]) if ast.connector == "and" else bool(union[0]))
    if ast.qtype == "Counting":
        return Count(len(union[0]))
    if ast.qtype == "Comparing":
        a, b = len(union[0]), len(union[1])
        return Bool(a > b if ast.compare_word == "more" else a < b)
    return Enumeration.of(Counter(cat_of[i] for i in union[0]))


def _f(cat, rel=None, anchor=None):
    return ObjectFilter(cat, None, SceneClause(rel, anchor) if rel else None)


@pytest.mark.parametrize("ast,answer,expected", [
    (QuestionAst("Comparing", ((_f("Apple", Relation.NEAR, "Bed"),), (_f("Pen", Relation.ABOVE, "Bed"),)),
                 None, "less"), Bool(False), "COMPARE_less_1_1_No_near_above"),
    (QuestionAst("Counting", ((_f("Pen"),),)), Count(0), "COUNTING_1_0"),
    (QuestionAst("Existence", ((_f("Pen"),),)), Bool(True), "EXISTENCE_1_Yes"),
])
def test_tags(ast, answer, expected):
    assert subtag(ast, answer) == expected
    assert tag(ast, answer) == expected.split("_near")[0]


def test_existence_realization_with_knowledge_and_scene_clause(kb):
    from embodiedqa.kb import try_resolve
    ent = try_resolve(kb, "cut food")
    ast = QuestionAst("Existence", ((ObjectFilter(None, KBClause("UsedFor", ent, "cut food"),
                                                  SceneClause(Relation.NEAR, "SaltShaker")),),))
    texts = {realize_text(ast, np.random.default_rng(s), kb) for s in range(200)}
    assert "Is there an object used to cut food near a salt shaker somewhere nearby?" in texts


def test_minimal_counting_realization(kb):
    ast = QuestionAst("Counting", ((_f("Pen"),),))
    texts = {realize_text(ast, np.random.default_rng(s), kb) for s in range(100)}
    assert "How many pens are there in the room?" in texts


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["KEQA", "KEQAExtension"]))
def test_realized_text_parses_back(kb, seed, split):
    rng = np.random.default_rng(seed)
    ast = random_ast(rng, kb, split)
    assert parse_question(realize_text(ast, rng, kb), kb) == ast


def test_answers_match_exhaustive_oracle(kb, scenes):
    rng = np.random.default_rng(0)
    for s in scenes:
        graph = ground_truth_scene_graph(s)
        for _ in range(150):
            ast = random_ast(rng, kb, ["KEQA", "KEQAExtension"][int(rng.integers(2))], s.room_type)
            assert compute_answer(ast, graph, kb) == answer_oracle(ast, graph, kb)


def test_counting_in_empty_scene_is_zero(kb):
    rng = np.random.default_rng(1)
    for _ in range(50):
        ast = random_ast(rng, kb)
        if ast.qtype == "Counting":
            assert compute_answer(ast, SceneGraph(), kb) == Count(0)


def test_fruit_on_table_enumeration(kb):
    from embodiedqa.query.engine import format_answer
    table = SceneObject("DiningTable#0", "DiningTable", Box((1, 1, 0), (2, 2, 0.75)))
    items = [("Apple", 0), ("Apple", 1), ("Bread", 2), ("Tomato", 3)]
    objs = [table] + [SceneObject(f"{c}#{i}", c, Box((1.05 + 0.2 * i, 1.4, 0.75), (1.15 + 0.2 * i, 1.5, 0.85)))
                      for c, i in items]
    graph = SceneGraph.from_objects(objs)
    from embodiedqa.kb import try_resolve
    eat = try_resolve(kb, "eat")
    f = ObjectFilter(None, KBClause("ReceivesAction", eat, "eat"), SceneClause(Relation.ON, "DiningTable"))
    ans = compute_answer(QuestionAst("Enumerating", ((f,),)), graph, kb)
    assert ans == Enumeration.of({"Apple": 2, "Bread": 1, "Tomato": 1})
    assert format_answer(ans) == "A loaf of bread, a tomato and 2 apples"


def test_sampling_is_deterministic(kb, bedroom):
    facts = scene_facts(bedroom, kb)
    a = [sample_question(bedroom.scene_id, facts, kb, np.random.default_rng(7)) for _ in range(3)]
    b = [sample_question(bedroom.scene_id, facts, kb, np.random.default_rng(7)) for _ in range(3)]
    assert a == b


def test_keqa_split_uses_single_filters(kb, scenes):
    pool = generate_pool(scenes, kb, "KEQA", seed=0, per_type=30)
    assert {r.ast.qtype for r in pool} == {"Existence", "Counting", "Comparing", "Enumerating"}
    for r in pool:
        assert all(len(g) == 1 for g in r.ast.groups) and r.ast.connector is None
        assert r.answer == compute_answer(r.ast, ground_truth_scene_graph(
            next(s for s in scenes if s.scene_id == r.scene_id)), kb)
        assert (r.tag, r.subtag) == (tag(r.ast, r.answer), subtag(r.ast, r.answer))


def test_extension_split_uses_connectors(kb, scenes):
    pool = generate_pool(scenes, kb, "KEQAExtension", seed=0, per_type=20)
    assert any(r.ast.connector == "and" for r in pool)
    assert all(r.ast.connector != "and" or r.ast.qtype == "Existence" for r in pool)
    assert all(1 <= len(g) <= 3 for r in pool for g in r.ast.groups)


def _rec(scene, ast, answer, i=0):
    return QuestionRecord(scene, f"q{i}", ast, answer, tag(ast, answer), subtag(ast, answer), "KEQA")


def test_family_pruned_to_equal_answers():
    ast = QuestionAst("Existence", ((_f("Pen"),),))
    pool = [_rec("s", ast, Bool(True), i) for i in range(10)] + [_rec("s", ast, Bool(False), i) for i in range(6)]
    kept = prune_families(pool, np.random.default_rng(0))
    assert Counter(answer_field(r.answer) for r in kept) == {"Yes": 6, "No": 6}


def test_starved_pool_names_the_tag():
    ast = QuestionAst("Existence", ((_f("Pen"),),))
    pool = [_rec("s", ast, Bool(True)), _rec("s", ast, Bool(False))]
    with pytest.raises(InsufficientPool) as exc:
        balance(pool, default_targets("KEQA", per_type=20))
    assert exc.value.starved


def test_default_targets_are_split_evenly():
    t = default_targets("KEQA", per_type=500)
    assert t["EXISTENCE_1_Yes"] == t["EXISTENCE_1_No"] == 250
    assert sum(v for k, v in t.items() if k.startswith("COUNTING")) == 500


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_balanced_random_pools_are_uniform(seed):
    rng = np.random.default_rng(seed)
    asts = [QuestionAst("Existence", ((_f(c, r, "Bed"),),)) for c in ("Pen", "Apple")
            for r in (None, Relation.NEAR)]
    pool = []
    for i in range(400):
        a = asts[int(rng.integers(len(asts)))]
        pool.append(_rec(f"s{i % 5}", a, Bool(bool(rng.integers(2))), i))
    pruned = prune_families(pool, rng)
    per_fam: dict = {}
    for r in pruned:
        per_fam.setdefault(family(r.ast), Counter())[answer_field(r.answer)] += 1
    assert all(c["Yes"] == c["No"] for c in per_fam.values())


def test_released_dataset_is_balanced_and_round_trips(tmp_path, train_dataset):
    recs = train_dataset.records
    report = audit(recs, default_targets("KEQA", per_type=len(recs) // 4))
    assert report["ok"], report
    save_dataset(recs, tmp_path / "d.jsonl")
    assert load_dataset(tmp_path / "d.jsonl") == recs
    json.loads((tmp_path / "d.jsonl").read_text().splitlines()[0])


def test_dataset_build_is_deterministic(kb, world):
    a = build_dataset(world.train[:40], kb, "KEQA", seed=3, per_scene=None, per_type_target=20)
    b = build_dataset(world.train[:40], kb, "KEQA", seed=3, per_scene=None, per_type_target=20)
    assert a.records == b.records
