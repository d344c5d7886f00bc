"""Question syntax trees to answering and planning programs."""
from __future__ import annotations

from ..catalog import noun, with_article
from ..kb import KnowledgeBase
from ..questions.ast import ObjectFilter, QuestionAst
from .ir import (Aggregate, And, CategoryOf, Compare, EntityOf, Eq, Filter, InSet, Intersect, Join,
                 Or, Project, QueryProgram, Scan, Union_, check_program)
from .parser import parse_question


def _kb_entities(f: ObjectFilter) -> Project:
    """entity1 of knowledge rows (entity1, relation, phrase entity)."""
    pred = And((Eq("relation", f.kb.relation), Eq("entity2", EntityOf(f.kb.phrase or f.kb.entity))))
    return Project(Filter(Scan("kb_relations"), pred), ("entity1",))


def _anchored_subjects(f: ObjectFilter) -> Project:
    """Subjects standing in the filter's relation to some object of the anchor category."""
    joined = Join(Scan("object_relations"), Scan("objects"), "object", "id", prefix="anchor_")
    pred = And((Eq("relation", f.scene.relation.value),
                Eq("anchor_category", CategoryOf(with_article(f.scene.anchor)))))
    return Project(Filter(joined, pred), ("subject",))


def answer_branch(f: ObjectFilter):
    """Target objects selected by one filter, as (id, category) rows."""
    preds = [Eq("pickupable", True)]
    if f.category is not None:
        preds.append(Eq("category", CategoryOf(noun(f.category, 2))))
    else:
        preds.append(InSet("entity", _kb_entities(f), "entity1"))
    if f.scene is not None:
        preds.append(InSet("id", _anchored_subjects(f), "subject"))
    return Project(Filter(Scan("objects"), And(tuple(preds))), ("id", "category"))


def _group(group):
    branches = tuple(answer_branch(f) for f in group)
    return branches[0] if len(branches) == 1 else Union_(branches)


def answering_program(ast: QuestionAst) -> QueryProgram:
    q = ast.qtype
    if q == "Existence":
        if ast.connector == "and":
            # each branch collapses to one empty row iff it selects something
            plan = Aggregate(Intersect(tuple(Project(answer_branch(f), ()) for f in ast.groups[0])),
                             "exists")
        else:
            plan = Aggregate(_group(ast.groups[0]), "exists")
    elif q == "Counting":
        plan = Aggregate(_group(ast.groups[0]), "count")
    elif q == "Comparing":
        plan = Compare(Aggregate(_group(ast.groups[0]), "count"),
                       Aggregate(_group(ast.groups[1]), "count"), ast.compare_word)
    else:
        plan = Aggregate(_group(ast.groups[0]), "group_count", "category")
    return QueryProgram("Answering", plan, q)


def plan_branches(f: ObjectFilter) -> list:
    """Prior-table predicates for one filter: the target itself, then its anchor."""
    if f.category is not None:
        target = [Eq("category1", CategoryOf(noun(f.category, 2)))]
    else:
        target = [InSet("entity1", _kb_entities(f), "entity1")]
    if f.scene is None:
        return [target[0]]
    anchor = CategoryOf(with_article(f.scene.anchor))
    clause = And(tuple(target) + (Eq("relation", f.scene.relation.value), Eq("category2", anchor)))
    # where the anchor itself tends to be, so the search can find it first
    return [clause, Eq("category1", anchor)]


def planning_program(ast: QuestionAst) -> QueryProgram:
    preds = []
    for f in ast.filters:
        for p in plan_branches(f):
            if p not in preds:
                preds.append(p)
    pred = preds[0] if len(preds) == 1 else Or(tuple(preds))
    plan = Project(Filter(Scan("priors"), pred), ("category1", "relation", "category2"))
    return QueryProgram("Planning", plan, ast.qtype)


def compile_ast(ast: QuestionAst) -> tuple[QueryProgram, QueryProgram]:
    ans, plan = answering_program(ast), planning_program(ast)
    check_program(ans)
    check_program(plan)
    return ans, plan


def translate_question(text: str, kb: KnowledgeBase | None = None) -> tuple[QueryProgram, QueryProgram]:
    """(answering program, planning program) for a grammar question."""
    return compile_ast(parse_question(text, kb))
