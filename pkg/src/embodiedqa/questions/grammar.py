"""Surface grammar shared by the realizer and the parser.

Every phrase table here is read in both directions: ``realize_text`` picks one
variant at random and the query parser accepts any of them.
"""
from __future__ import annotations

import numpy as np

from ..catalog import category, noun, with_article
from ..kb import KnowledgeBase
from ..recon.relations import Relation
from .ast import ObjectFilter, QuestionAst

ARTICLES = ("a", "an", "the")
LOCATIONS = ("in the room", "somewhere nearby", "around here", "in this room")

SCENE_WORDS: dict[Relation, tuple[str, ...]] = {
    Relation.NEAR: ("near", "next to"),
    Relation.ABOVE: ("above",),
    Relation.BELOW: ("below", "under"),
    Relation.ON: ("on",),
    Relation.IN: ("in", "inside"),
}

# knowledge clause lead-ins per relation: (singular head, plural head)
KB_WORDS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "IsA": (("that is a kind of", "that is a type of"), ("that are a kind of", "that are a type of")),
    "ReceivesAction": (("that can be",), ("that can be",)),
    "CapableOf": (("that can",), ("that can",)),
    "AtLocation": (("that is usually found at the",), ("that are usually found at the",)),
    "HasProperty": (("that is",), ("that are",)),
    "MadeOf": (("made of",), ("made of",)),
    "PartOf": (("that is part of",), ("that are part of",)),
}
# UsedFor depends on the phrase: noun phrases take "for", verb phrases take "to"
USED_FOR_NOUN = ("used for",)
USED_FOR_VERB = ("used to", "which you can use to")

OBJECT_SG = "an object"
OBJECT_PL = "objects"


def kb_lead_ins(relation: str, plural: bool, phrase: str) -> tuple[str, ...]:
    if relation == "UsedFor":
        first = phrase.split(" ", 1)[0]
        return USED_FOR_NOUN if first in ARTICLES else USED_FOR_VERB
    sg, pl = KB_WORDS[relation]
    return pl if plural else sg


def _choice(rng: np.random.Generator, options):
    return options[int(rng.integers(len(options)))]


def kb_phrase(kb: KnowledgeBase | None, entity: str) -> str:
    if kb is not None and entity in kb.entities:
        return kb.surface(entity)
    return entity


def realize_filter(f: ObjectFilter, plural: bool, rng: np.random.Generator,
                   kb: KnowledgeBase | None) -> str:
    if f.category is not None:
        words = [noun(f.category, 2) if plural else with_article(f.category)]
    else:
        phrase = f.kb.phrase or kb_phrase(kb, f.kb.entity)
        lead = _choice(rng, kb_lead_ins(f.kb.relation, plural, phrase))
        words = [OBJECT_PL if plural else OBJECT_SG, lead, phrase]
    if f.scene is not None:
        words += [_choice(rng, SCENE_WORDS[f.scene.relation]), with_article(f.scene.anchor)]
    return " ".join(words)


def realize_group(group, plural: bool, connector: str | None, rng, kb) -> str:
    joiner = f" {connector} " if connector else " "
    return joiner.join(realize_filter(f, plural, rng, kb) for f in group)


def realize_text(ast: QuestionAst, rng: np.random.Generator | None = None,
                 kb: KnowledgeBase | None = None) -> str:
    """English question for ``ast``; synonyms are drawn from ``rng``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    loc = _choice(rng, LOCATIONS)
    q = ast.qtype
    if q == "Existence":
        if rng.random() < 0.5:
            body = realize_group(ast.groups[0], False, ast.connector, rng, kb)
            return f"Is there {body} {loc}?"
        body = realize_group(ast.groups[0], True, ast.connector, rng, kb)
        return f"Are there any {body} {loc}?"
    if q == "Counting":
        body = realize_group(ast.groups[0], True, ast.connector, rng, kb)
        if rng.random() < 0.5:
            return f"How many {body} are there {loc}?"
        return f"Please tell me how many {body} are {loc}?"
    if q == "Comparing":
        a = realize_group(ast.groups[0], True, ast.connector, rng, kb)
        b = realize_group(ast.groups[1], True, ast.connector, rng, kb)
        return f"Are there {ast.compare_word} {a} than {b} {loc}?"
    body = realize_group(ast.groups[0], True, ast.connector, rng, kb)
    return f"There are some {body} {loc}. What are they?"


def category_forms(name: str) -> tuple[str, str]:
    c = category(name)
    return with_article(name), c.plural
