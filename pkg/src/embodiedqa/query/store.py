"""Scene graph and knowledge graph as relational tables."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..catalog import CATEGORIES, category_phrases, entity_name
from ..kb import KnowledgeBase, normalize
from ..priors import ScenePriors, kb_candidates
from ..recon.graph import SceneGraph
from .ir import TABLES


class IntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class RelationalStore:
    """Rows are tuples in the column order of ``ir.TABLES``.

    ``category_words`` and ``entity_words`` back the two phrase builtins; both
    map normalized phrases to ids.
    """
    tables: dict = field(default_factory=dict)
    category_words: dict = field(default_factory=dict)
    entity_words: dict = field(default_factory=dict)

    def rows(self, table: str) -> tuple:
        return self.tables.get(table, ())

    def category_of(self, phrase: str) -> str | None:
        key = phrase.strip().lower()
        return self.category_words.get(key) or self.category_words.get(normalize(phrase))

    def entity_of(self, phrase: str) -> str | None:
        return self.entity_words.get(normalize(phrase)) if phrase.strip() else None

    def to_json(self) -> dict:
        return {"tables": {t: [list(r) for r in rows] for t, rows in self.tables.items()},
                "category_words": self.category_words, "entity_words": self.entity_words}

    @classmethod
    def from_json(cls, d: dict) -> "RelationalStore":
        return cls({t: tuple(tuple(r) for r in rows) for t, rows in d["tables"].items()},
                   dict(d["category_words"]), dict(d["entity_words"]))


def _category_words() -> dict[str, str]:
    words = {}
    for phrase, name in category_phrases().items():
        words[phrase] = name
        words[normalize(phrase)] = name
        c = CATEGORIES[name]
        words[f"{c.article} {c.singular}"] = name
        words[name.lower()] = name
    return words


_KB_TABLES: dict[int, tuple] = {}


def _kb_tables(kb: KnowledgeBase | None):
    if kb is None:
        return (), (), {}
    hit = _KB_TABLES.get(id(kb))
    if hit is None or hit[0] is not kb:
        entities = tuple(sorted((e.id, e.canonical_name) for e in kb.entities.values()))
        rels = tuple(sorted((t.entity1, t.relation, t.entity2, bool(t.derived))
                            for t in kb.triplets.values()))
        words = {p: next(iter(ids)) for p, ids in kb._phrases.items() if len(ids) == 1}
        # the kb reference keeps the id from being reused while cached
        hit = _KB_TABLES[id(kb)] = (kb, (entities, rels, words))
    return hit[1]


def prior_rows(priors: ScenePriors | None, kb: KnowledgeBase | None, min_count: int = 1,
               relations=None, kb_candidates_on: bool = True) -> tuple:
    """Prior table rows; knowledge-suggested triples the scenes never showed get count 0."""
    rows = []
    seen = set()
    if priors is not None:
        for (a, r, b), n in priors.triples(min_count, relations):
            rows.append((a, r.value, b, n, entity_name(a), "scenes"))
            seen.add((a, r, b))
    if kb is not None and kb_candidates_on:
        mask = set(relations) if relations is not None else None
        for a, r, b in sorted(kb_candidates(kb), key=lambda k: (k[0], k[1].value, k[2])):
            if (a, r, b) not in seen and (mask is None or r in mask):
                rows.append((a, r.value, b, 0, entity_name(a), "kb"))
    return tuple(rows)


def build_store(graph: SceneGraph | None, kb: KnowledgeBase | None = None,
                priors: ScenePriors | None = None, min_count: int = 1, relations=None,
                kb_candidates_on: bool = True) -> RelationalStore:
    """Materialize tables; identical inputs give identical tables."""
    entities, kb_rels, entity_words = _kb_tables(kb)
    known = {e[0] for e in entities}
    objects = []
    relations_rows = []
    if graph is not None:
        for o in sorted(graph.objects, key=lambda o: o.object_id):
            b = o.box
            ent = entity_name(o.category)
            objects.append((o.object_id, o.category, ent if ent in known else None,
                            CATEGORIES[o.category].pickupable,
                            *(float(v) for v in b.lo), *(float(v) for v in b.hi),
                            float(o.mean_confidence)))
        relations_rows = sorted((s, r.value, t) for s, r, t in graph.relations)
    tables = {
        "objects": tuple(objects),
        "entities": entities,
        "object_relations": tuple(relations_rows),
        "kb_relations": kb_rels,
        "priors": prior_rows(priors, kb, min_count, relations, kb_candidates_on),
    }
    return RelationalStore(tables, _category_words(), dict(entity_words))


def check_integrity(store: RelationalStore) -> None:
    """Every foreign key resolves to a row of its base table."""
    ids = {r[0] for r in store.rows("objects")}
    ents = {r[0] for r in store.rows("entities")}
    for s, _, o in store.rows("object_relations"):
        if s not in ids or o not in ids:
            raise IntegrityError(f"relation row ({s}, {o}) references a missing object")
    for e1, _, e2, _ in store.rows("kb_relations"):
        if e1 not in ents or e2 not in ents:
            raise IntegrityError(f"kb row ({e1}, {e2}) references a missing entity")
    for row in store.rows("objects"):
        if row[2] is not None and row[2] not in ents:
            raise IntegrityError(f"object {row[0]} references a missing entity")
    for t, rows in store.tables.items():
        width = len(TABLES[t])
        if any(len(r) != width for r in rows):
            raise IntegrityError(f"table {t} has rows of the wrong width")


def dump_store(store: RelationalStore, path: str | Path) -> None:
    Path(path).write_text(json.dumps(store.to_json()), encoding="utf-8")


def load_store(path: str | Path) -> RelationalStore:
    return RelationalStore.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
