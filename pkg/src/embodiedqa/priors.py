"""Category-level relation counts harvested from training scenes."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .catalog import FURNITURE, PICKUPABLES, entity_name
from .config import RelationConfig
from .kb import KnowledgeBase
from .recon.relations import Relation

Key = tuple[str, Relation, str]


@dataclass(frozen=True)
class ScenePriors:
    counts: dict = field(default_factory=dict)  # (cat1, Relation, cat2) -> int >= 1
    scene_count: int = 0

    def __post_init__(self) -> None:
        if any(n < 1 for n in self.counts.values()):
            raise ValueError("prior counts must be positive")

    def __add__(self, other: "ScenePriors") -> "ScenePriors":
        total = Counter(self.counts)
        total.update(other.counts)
        return ScenePriors(dict(total), self.scene_count + other.scene_count)

    def __contains__(self, key: Key) -> bool:
        return key in self.counts

    def triples(self, min_count: int = 1, relations: Iterable[Relation] | None = None) -> list[tuple[Key, int]]:
        """Stored keys passing the count threshold and the relation mask, sorted."""
        mask = set(relations) if relations is not None else None
        rows = [(k, n) for k, n in self.counts.items()
                if n >= min_count and (mask is None or k[1] in mask)]
        return sorted(rows, key=lambda kn: (kn[0][0], kn[0][1].value, kn[0][2]))


def priors_from_graphs(graphs: Iterable) -> ScenePriors:
    total: Counter = Counter()
    n = 0
    for g in graphs:
        total.update(g.category_triples())
        n += 1
    return ScenePriors(dict(total), n)


def build_priors(scenes: Iterable, cfg: RelationConfig | None = None) -> ScenePriors:
    """Aggregate ground-truth relation triples over ``scenes`` at category level."""
    from .scene.truth import ground_truth_scene_graph
    return priors_from_graphs(ground_truth_scene_graph(s, cfg) for s in scenes)


# a "found at" fact only says the object is somewhere around the furniture
KB_PLACEMENTS = (Relation.NEAR,)


def kb_candidates(kb: KnowledgeBase, pickupables: Iterable[str] = PICKUPABLES,
                  furniture: Iterable[str] = FURNITURE) -> set[Key]:
    """(pickupable, relation, furniture) triples suggested by AtLocation facts."""
    ents = {entity_name(f): f for f in furniture}
    out = set()
    for c in pickupables:
        e = entity_name(c)
        if e not in kb.entities:
            continue
        for t in kb.triplets.values():
            if t.entity1 == e and t.relation == "AtLocation" and t.entity2 in ents:
                out.update((c, r, ents[t.entity2]) for r in KB_PLACEMENTS)
    return out


def save_priors(priors: ScenePriors, path: str | Path) -> None:
    lines = [f"# scenes\t{priors.scene_count}"]
    lines += [f"{a}\t{r.value}\t{b}\t{n}" for (a, r, b), n in priors.triples()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_priors(path: str | Path) -> ScenePriors:
    counts = {}
    scenes = 0
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split("\t")
            if parts[0].strip() == "scenes":
                scenes = int(parts[1])
            continue
        a, r, b, n = line.split("\t")
        counts[(a, Relation(r), b)] = int(n)
    return ScenePriors(counts, scenes)
