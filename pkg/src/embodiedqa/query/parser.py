"""Backtracking parser for the question grammar.

The parser reads the same phrase tables the realizer writes from, so every
generated question parses back to its syntax tree.  Knowledge phrases are
open-ended spans; they are tried shortest first and only spans that resolve
to a knowledge-base entity are accepted.
"""
from __future__ import annotations

import re
from functools import lru_cache

from ..catalog import CATEGORIES, PICKUPABLES, category
from ..kb import KnowledgeBase, try_resolve
from ..questions.ast import KBClause, ObjectFilter, QuestionAst, SceneClause
from ..questions.grammar import (KB_WORDS, LOCATIONS, OBJECT_PL, OBJECT_SG, SCENE_WORDS,
                                 USED_FOR_NOUN, USED_FOR_VERB, kb_lead_ins)


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at token {position})")
        self.position = position


class UnknownTokenError(ParseError):
    def __init__(self, token: str, position: int):
        super().__init__(f"unknown word {token!r}", position)
        self.token = token


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(re.findall(r"[a-z0-9']+|[?.,]", text.lower()))


def _toks(phrase: str) -> tuple[str, ...]:
    return tuple(phrase.split())


@lru_cache(maxsize=1)
def _category_forms():
    """(tokens, category, plural) for every category surface form."""
    forms = []
    for name in CATEGORIES:
        c = category(name)
        forms.append((_toks(f"{c.article} {c.singular}"), name, False))
        forms.append((_toks(c.plural), name, True))
    return tuple(forms)


def _kb_leads():
    out = []
    for rel, (sg, pl) in KB_WORDS.items():
        for lead in sg:
            out.append((_toks(lead), rel, False))
        for lead in pl:
            out.append((_toks(lead), rel, True))
    for lead in USED_FOR_NOUN + USED_FOR_VERB:
        out.append((_toks(lead), "UsedFor", None))
    # longer lead-ins first so that "that is a kind of" is tried before "that is"
    return tuple(sorted(out, key=lambda x: -len(x[0])))


_KB_LEADS = _kb_leads()
_SCENE = tuple(sorted(((_toks(w), r) for r, ws in SCENE_WORDS.items() for w in ws),
                      key=lambda x: -len(x[0])))
_LOCS = tuple(_toks(x) for x in LOCATIONS)
MAX_SPAN = 8


class _Parser:
    def __init__(self, tokens: tuple[str, ...], kb: KnowledgeBase | None):
        self.t = tokens
        self.kb = kb
        self.furthest = 0

    def _see(self, pos: int) -> None:
        self.furthest = max(self.furthest, pos)

    def lit(self, pos: int, words: tuple[str, ...]):
        n = len(words)
        if self.t[pos:pos + n] == words:
            self._see(pos + n)
            return pos + n
        return None

    def entity_spans(self, pos: int, relation: str, lead, plural: bool):
        for end in range(pos + 1, min(len(self.t), pos + MAX_SPAN) + 1):
            phrase = " ".join(self.t[pos:end])
            if " ".join(lead) not in kb_lead_ins(relation, plural, phrase):
                continue
            if self.kb is None:
                yield phrase, phrase, end
                continue
            ent = try_resolve(self.kb, phrase)
            if ent is not None:
                yield ent, phrase, end

    def head(self, pos: int, plural: bool):
        """Yield (category, kb clause, next position)."""
        for toks, name, pl in _category_forms():
            if pl == plural and name in PICKUPABLES:
                end = self.lit(pos, toks)
                if end is not None:
                    yield name, None, end
        obj = _toks(OBJECT_PL if plural else OBJECT_SG)
        p = self.lit(pos, obj)
        if p is None:
            return
        for lead, rel, pl in _KB_LEADS:
            if pl is not None and pl != plural:
                continue
            q = self.lit(p, lead)
            if q is None:
                continue
            for ent, phrase, end in self.entity_spans(q, rel, lead, plural):
                yield None, KBClause(rel, ent, phrase), end

    def scene(self, pos: int):
        yield None, pos
        for words, rel in _SCENE:
            p = self.lit(pos, words)
            if p is None:
                continue
            for toks, name, pl in _category_forms():
                if not pl:
                    end = self.lit(p, toks)
                    if end is not None:
                        yield SceneClause(rel, name), end

    def filter(self, pos: int, plural: bool):
        for cat, kbc, p in self.head(pos, plural):
            for sc, end in self.scene(p):
                yield ObjectFilter(cat, kbc, sc), end

    def group(self, pos: int, plural: bool, connector: str | None):
        """Yield (filters, connector, next position); one connector per question."""
        for f, p in self.filter(pos, plural):
            yield (f,), connector, p
            for conn in ("and", "or") if connector is None else (connector,):
                q = self.lit(p, (conn,))
                if q is None:
                    continue
                for rest, c, end in self.group(q, plural, conn):
                    yield (f,) + rest, c, end

    def location(self, pos: int):
        for loc in _LOCS:
            end = self.lit(pos, loc)
            if end is not None:
                yield end

    def finish(self, pos: int, tail: tuple[str, ...]) -> bool:
        return self.lit(pos, tail) is not None and pos + len(tail) == len(self.t)

    def question(self):
        t = self.t
        for start, plural in ((("is", "there"), False), (("are", "there", "any"), True)):
            p = self.lit(0, start)
            if p is None:
                continue
            for g, conn, q in self.group(p, plural, None):
                for e in self.location(q):
                    if self.finish(e, ("?",)):
                        yield QuestionAst("Existence", (g,), conn)
        for start, mid in ((("how", "many"), ("are", "there")),
                           (("please", "tell", "me", "how", "many"), ("are",))):
            p = self.lit(0, start)
            if p is None:
                continue
            for g, conn, q in self.group(p, True, None):
                r = self.lit(q, mid)
                if r is None:
                    continue
                for e in self.location(r):
                    if self.finish(e, ("?",)) and conn != "and":
                        yield QuestionAst("Counting", (g,), conn)
        p = self.lit(0, ("are", "there"))
        if p is not None and p < len(t) and t[p] in ("more", "less"):
            word = t[p]
            self._see(p + 1)
            for g1, c1, q in self.group(p + 1, True, None):
                r = self.lit(q, ("than",))
                if r is None:
                    continue
                for g2, c2, s in self.group(r, True, c1):
                    conn = c1 or c2
                    if conn == "and":
                        continue
                    for e in self.location(s):
                        if self.finish(e, ("?",)):
                            yield QuestionAst("Comparing", (g1, g2), conn, word)
        p = self.lit(0, ("there", "are", "some"))
        if p is not None:
            for g, conn, q in self.group(p, True, None):
                for e in self.location(q):
                    if self.finish(e, (".", "what", "are", "they", "?")) and conn != "and":
                        yield QuestionAst("Enumerating", (g,), conn)


def known_words(kb: KnowledgeBase | None) -> set[str]:
    words = {"is", "there", "are", "any", "how", "many", "please", "tell", "me", "more", "less",
             "than", "some", "what", "they", "and", "or", "?", ".", ","}
    for toks, _, _ in _category_forms():
        words.update(toks)
    for phrase in LOCATIONS + (OBJECT_SG, OBJECT_PL):
        words.update(phrase.split())
    for toks, _, _ in _KB_LEADS:
        words.update(toks)
    for toks, _ in _SCENE:
        words.update(toks)
    if kb is not None:
        for e in kb.entities.values():
            for phrase in (e.canonical_name,) + tuple(e.aliases):
                words.update(tokenize(phrase))
            words.update(e.id.split())
    return words


def parse_question(text: str, kb: KnowledgeBase | None = None) -> QuestionAst:
    """Syntax tree of ``text``.

    Raises UnknownTokenError for out-of-vocabulary words and ParseError with
    the furthest position reached otherwise.
    """
    tokens = tokenize(text)
    parser = _Parser(tokens, kb)
    for ast in parser.question():
        return ast
    vocab = known_words(kb)
    for i, tok in enumerate(tokens):
        if tok not in vocab:
            raise UnknownTokenError(tok, i)
    raise ParseError("question does not match the grammar", parser.furthest)
