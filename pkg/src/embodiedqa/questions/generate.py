"""Question sampling and ground-truth answering."""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from ..catalog import CATEGORIES, PICKUPABLES, entity_name, pickupables_for
from ..config import QuestionConfig
from ..kb import KnowledgeBase, facts_about, query_entities, try_resolve
from ..recon.graph import SceneGraph
from ..recon.relations import Relation
from ..scene.layout import PLACEMENT
from .ast import (SCENE_RELATIONS, Answer, Bool, Count, Enumeration, KBClause, ObjectFilter,
                  QTYPES, QuestionAst, QuestionRecord, SceneClause)
from .grammar import KB_WORDS, kb_phrase, realize_text
from .tags import answer_in_domain, subtag, tag

log = logging.getLogger(__name__)

_KIND_RELATION = {"on": Relation.ON, "in": Relation.IN, "near": Relation.NEAR}
KB_RELATIONS = ("UsedFor",) + tuple(KB_WORDS)


class GraphIndex:
    """Lookup tables over one scene graph for repeated filter evaluation."""

    def __init__(self, graph: SceneGraph):
        self.graph = graph
        cats = {o.object_id: o.category for o in graph.objects}
        self.targets: dict[str, list[str]] = defaultdict(list)
        for o in graph.objects:
            if CATEGORIES[o.category].pickupable:
                self.targets[o.category].append(o.object_id)
        self.clauses: dict[str, set[tuple[Relation, str]]] = defaultdict(set)
        for s, r, o in graph.relations:
            self.clauses[s].add((r, cats[o]))


def _kb_categories(kb: KnowledgeBase, clause: KBClause) -> set[str]:
    ent = clause.entity if clause.entity in kb.entities else try_resolve(kb, clause.phrase or clause.entity)
    if ent is None:
        log.warning("knowledge phrase %r does not resolve; the filter matches nothing",
                    clause.phrase or clause.entity)
        return set()
    ents = query_entities(kb, clause.relation, ent)
    return {c for c in PICKUPABLES if entity_name(c) in ents}


def filter_matches(f: ObjectFilter, index: GraphIndex, kb: KnowledgeBase) -> set[str]:
    """Ids of target objects selected by one filter."""
    cats = {f.category} if f.category is not None else _kb_categories(kb, f.kb)
    out = set()
    for c in cats:
        for oid in index.targets.get(c, ()):
            if f.scene is None or (f.scene.relation, f.scene.anchor) in index.clauses.get(oid, ()):
                out.add(oid)
    return out


def group_matches(group, index: GraphIndex, kb: KnowledgeBase) -> list[set[str]]:
    return [filter_matches(f, index, kb) for f in group]


def compute_answer(ast: QuestionAst, graph: SceneGraph | GraphIndex, kb: KnowledgeBase) -> Answer:
    """Ground-truth answer of ``ast`` over a scene graph.

    A group's objects are the instance-level union of its filters.  Under
    "and" (Existence only) every filter must select something.
    """
    index = graph if isinstance(graph, GraphIndex) else GraphIndex(graph)
    sets = [group_matches(g, index, kb) for g in ast.groups]
    union = [set().union(*s) for s in sets]
    if ast.qtype == "Existence":
        if ast.connector == "and":
            return Bool(all(sets[0]))
        return Bool(bool(union[0]))
    if ast.qtype == "Counting":
        return Count(len(union[0]))
    if ast.qtype == "Comparing":
        a, b = len(union[0]), len(union[1])
        return Bool(a > b if ast.compare_word == "more" else a < b)
    cats = {o.object_id: o.category for o in index.graph.objects}
    return Enumeration.of(Counter(cats[i] for i in union[0]))


@dataclass
class SceneFacts:
    """Precomputed per-scene sampling tables."""
    room_type: str
    index: GraphIndex
    scene_clauses: dict[str, list[tuple[Relation, str]]]
    kb_facts: dict[str, list[tuple[str, str]]]

    @classmethod
    def build(cls, room_type: str, graph: SceneGraph, kb: KnowledgeBase,
              furniture: set[str] | None = None) -> "SceneFacts":
        index = GraphIndex(graph)
        present = {o.category for o in graph.objects}
        furniture = present if furniture is None else furniture
        clauses: dict[str, set] = defaultdict(set)
        for cat, ids in index.targets.items():
            for oid in ids:
                clauses[cat].update(c for c in index.clauses.get(oid, ()) if c[0] in SCENE_RELATIONS)
        # plausible clauses from the placement table, so absent targets can get one too
        for cat, spots in PLACEMENT.get(room_type, {}).items():
            for kind, furn in spots:
                if furn in furniture:
                    clauses[cat].add((_KIND_RELATION[kind], furn))
        kb_facts = {}
        for cat in pickupables_for(room_type):
            ent = entity_name(cat)
            kb_facts[cat] = [(r, e) for r, e in facts_about(kb, ent)
                             if r in KB_RELATIONS and e in kb.entities] if ent in kb.entities else []
        ordered = {c: sorted(v, key=lambda x: (x[0].value, x[1])) for c, v in clauses.items()}
        return cls(room_type, index, ordered, kb_facts)


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def filter_counts(qtype: str, split: str, rng) -> tuple[int, ...]:
    if split == "KEQA":
        return (1, 1) if qtype == "Comparing" else (1,)
    if qtype == "Comparing":
        return _pick(rng, [(1, 2), (2, 1), (2, 2)])
    return (int(rng.integers(2, 4)),)


def sample_filter(facts: SceneFacts, kb: KnowledgeBase, rng, cfg: QuestionConfig) -> ObjectFilter:
    cat = _pick(rng, pickupables_for(facts.room_type))
    kb_clause = None
    if rng.random() < cfg.kb_probability:
        options = facts.kb_facts.get(cat, [])
        if options:
            rel, ent = _pick(rng, options)
            kb_clause = KBClause(rel, ent, kb_phrase(kb, ent))
        else:
            log.debug("no knowledge fact for %s; using the category", cat)
    scene = None
    if rng.random() < cfg.scene_probability:
        options = facts.scene_clauses.get(cat, [])
        if options:
            r, anchor = _pick(rng, options)
            scene = SceneClause(r, anchor)
    if kb_clause is not None:
        return ObjectFilter(None, kb_clause, scene)
    return ObjectFilter(cat, None, scene)


def sample_ast(facts: SceneFacts, kb: KnowledgeBase, rng, split: str = "KEQA",
               qtype: str | None = None, cfg: QuestionConfig | None = None) -> QuestionAst:
    cfg = cfg or QuestionConfig()
    qtype = qtype or _pick(rng, QTYPES)
    counts = filter_counts(qtype, split, rng)
    connector = None
    if max(counts) > 1:
        connector = _pick(rng, ("and", "or")) if qtype == "Existence" else "or"
    word = _pick(rng, ("more", "less")) if qtype == "Comparing" else None
    groups = tuple(tuple(sample_filter(facts, kb, rng, cfg) for _ in range(n)) for n in counts)
    return QuestionAst(qtype, groups, connector, word)


def sample_question(scene_id: str, facts: SceneFacts, kb: KnowledgeBase, rng,
                    split: str = "KEQA", qtype: str | None = None,
                    cfg: QuestionConfig | None = None) -> QuestionRecord | None:
    """One question whose answer lies in the released answer range; None if attempts run out."""
    cfg = cfg or QuestionConfig()
    for _ in range(cfg.max_attempts):
        ast = sample_ast(facts, kb, rng, split, qtype, cfg)
        ans = compute_answer(ast, facts.index, kb)
        if not answer_in_domain(ast, ans, cfg.max_count):
            continue
        text = realize_text(ast, rng, kb)
        return QuestionRecord(scene_id, text, ast, ans, tag(ast, ans), subtag(ast, ans), split)
    return None


def random_ast(rng, kb: KnowledgeBase, split: str = "KEQA", room_type: str | None = None,
               cfg: QuestionConfig | None = None) -> QuestionAst:
    """An AST with no scene behind it: anchors and facts drawn from the whole vocabulary."""
    from ..catalog import vocabulary_for, ROOM_TYPES
    cfg = cfg or QuestionConfig(kb_probability=0.5, scene_probability=0.5)
    room_type = room_type or _pick(rng, ROOM_TYPES)
    vocab = vocabulary_for(room_type)
    clauses = {c: [(r, a) for r in SCENE_RELATIONS for a in vocab] for c in pickupables_for(room_type)}
    facts = SceneFacts(room_type, GraphIndex(SceneGraph()), clauses, {})
    for cat in pickupables_for(room_type):
        ent = entity_name(cat)
        facts.kb_facts[cat] = ([(r, e) for r, e in facts_about(kb, ent) if r in KB_RELATIONS]
                               if ent in kb.entities else [])
    return sample_ast(facts, kb, rng, split, None, cfg)
