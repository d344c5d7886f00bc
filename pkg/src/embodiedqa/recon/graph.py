"""Scene-graph value types shared by ground truth and reconstruction."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..config import RelationConfig
from ..geometry import Box
from .relations import Relation, pairwise_relations

Triple = tuple[str, Relation, str]


@dataclass(frozen=True)
class SceneObject:
    object_id: str
    category: str
    box: Box
    member_voxels: frozenset = field(default=frozenset(), compare=False, repr=False)
    mean_confidence: float = 1.0


@dataclass(frozen=True)
class SceneGraph:
    objects: tuple[SceneObject, ...] = ()
    relations: frozenset = frozenset()

    @classmethod
    def from_objects(cls, objects, cfg: RelationConfig | None = None) -> "SceneGraph":
        cfg = cfg or RelationConfig()
        objects = tuple(objects)
        rels = pairwise_relations(((o.object_id, o.category, o.box) for o in objects), cfg)
        return cls(objects, frozenset(rels))

    def by_id(self) -> dict[str, SceneObject]:
        return {o.object_id: o for o in self.objects}

    def category_counts(self) -> Counter:
        return Counter(o.category for o in self.objects)

    def category_triples(self) -> Counter:
        """Relation triples lifted to category level, with multiplicity."""
        cats = {o.object_id: o.category for o in self.objects}
        return Counter((cats[s], r, cats[o]) for s, r, o in self.relations)

    def to_json(self) -> dict:
        return {
            "objects": [
                {"id": o.object_id, "category": o.category, "box": o.box.to_json(),
                 "confidence": round(o.mean_confidence, 6)}
                for o in self.objects
            ],
            "relations": sorted([s, r.value, o] for s, r, o in self.relations),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SceneGraph":
        objects = tuple(
            SceneObject(d["id"], d["category"], Box.from_json(d["box"]),
                        mean_confidence=d.get("confidence", 1.0))
            for d in data["objects"]
        )
        rels = frozenset((s, Relation(r), o) for s, r, o in data["relations"])
        return cls(objects, rels)


def dump_graph(graph: SceneGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph.to_json(), indent=1), encoding="utf-8")


def load_graph(path: str | Path) -> SceneGraph:
    return SceneGraph.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def match_graphs(truth: SceneGraph, recon: SceneGraph) -> dict:
    """Compare two graphs at category level.

    Object ids differ between ground truth and reconstruction, so relations are
    compared as category-level triples with multiplicity.
    """
    t_rel = truth.category_triples()
    r_rel = recon.category_triples()
    matched = sum((t_rel & r_rel).values())
    total = sum(t_rel.values())
    return {
        "categories_equal": truth.category_counts() == recon.category_counts(),
        "relations_total": total,
        "relations_matched": matched,
        "relations_extra": sum((r_rel - t_rel).values()),
        "relation_recall": matched / total if total else 1.0,
    }
