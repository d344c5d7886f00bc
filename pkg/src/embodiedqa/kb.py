"""Knowledge base of (entity, relation, entity) triplets.

Supports ConceptNet-style ingestion restricted to a vocabulary, IsA-lifting
closure with provenance, and phrase -> entity resolution.
"""
from __future__ import annotations

import fnmatch
import logging
import re
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

log = logging.getLogger(__name__)

RELATIONS = ("IsA", "UsedFor", "ReceivesAction", "CapableOf", "AtLocation",
             "HasProperty", "MadeOf", "PartOf")

_ARTICLES = ("a", "an", "the")
_IRREGULAR = {
    "loaves": "loaf", "knives": "knife", "shelves": "shelf", "leaves": "leaf",
    "tomatoes": "tomato", "potatoes": "potato", "people": "person",
    "children": "child", "men": "man", "women": "woman", "feet": "foot",
    "teeth": "tooth", "mice": "mouse", "dishes": "dish", "boxes": "box",
    "glasses": "glass", "brushes": "brush", "matches": "match",
}
_INVARIANT = {"news", "clothes", "series", "species", "goods", "scissors",
              "glasses", "pants", "is", "was", "has", "this", "gas", "bus", "lettuce"}


class KBParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnresolvedPhrase(KeyError):
    pass


class AmbiguousPhrase(ValueError):
    def __init__(self, phrase: str, candidates: Iterable[str]):
        self.candidates = tuple(sorted(candidates))
        super().__init__(f"{phrase!r} matches several entities: {', '.join(self.candidates)}")


def singularize(word: str) -> str:
    if word in _INVARIANT:
        return word
    if word in _IRREGULAR:
        return _IRREGULAR[word]
    if len(word) > 4 and word.endswith("ies"):
        return word[:-3] + "y"
    if word.endswith(("ches", "shes", "sses", "xes")):
        return word[:-2]
    if len(word) > 3 and word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def _split_camel(text: str) -> str:
    text = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", text)
    return re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1 \2", text)


def normalize(phrase: str) -> str:
    """Canonical lookup key: lowercase, no leading article, last word singular."""
    words = _split_camel(phrase.strip()).lower().replace("_", " ").split()
    while len(words) > 1 and words[0] in _ARTICLES:
        words = words[1:]
    if words:
        words[-1] = singularize(words[-1])
    return " ".join(words)


@dataclass(frozen=True)
class Entity:
    id: str
    canonical_name: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class Triplet:
    entity1: str
    relation: str
    entity2: str
    weight: float = field(default=1.0, compare=False)
    derived: bool = field(default=False, compare=False)
    # base triplets whose chaining produced this one (IsA links, then the lifted fact)
    provenance: tuple = field(default=(), compare=False, repr=False)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.entity1, self.relation, self.entity2)


@dataclass(frozen=True)
class ImportSummary:
    lines: int = 0
    kept: int = 0
    dropped_vocabulary: int = 0
    excluded: int = 0
    rejected: tuple[tuple[int, str], ...] = ()  # (line number, unknown relation label)


@dataclass(frozen=True)
class KnowledgeBase:
    entities: Mapping[str, Entity]
    triplets: Mapping[tuple[str, str, str], Triplet]
    closure_hops: int = 0
    relations: tuple[str, ...] = RELATIONS
    summary: ImportSummary = field(default_factory=ImportSummary, compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)
    _phrases: Mapping[str, frozenset] = field(default=MappingProxyType({}), compare=False, repr=False)
    _by_rel_obj: Mapping = field(default=MappingProxyType({}), compare=False, repr=False)

    @property
    def base(self) -> list[Triplet]:
        return [t for t in self.triplets.values() if not t.derived]

    @property
    def derived(self) -> list[Triplet]:
        return [t for t in self.triplets.values() if t.derived]

    def __len__(self) -> int:
        return len(self.triplets)

    def name(self, entity_id: str) -> str:
        return self.entities[entity_id].canonical_name

    def surface(self, entity_id: str) -> str:
        """Preferred phrase for putting an entity into a question."""
        ent = self.entities[entity_id]
        return ent.aliases[0] if ent.aliases else ent.canonical_name.lower()


def _entity_key(token: str) -> tuple[str, str]:
    token = token.strip()
    if token.startswith("/c/"):
        parts = token.split("/")
        token = parts[3] if len(parts) > 3 else token
    token = token.replace("_", " ")
    return normalize(token), token


def _relation_label(token: str) -> str:
    token = token.strip()
    return token[3:] if token.startswith("/r/") else token


def build_kb(entities: Mapping[str, Entity], triplets: Iterable[Triplet], closure_hops: int,
             relations: tuple[str, ...] = RELATIONS, summary: ImportSummary | None = None,
             warnings: tuple[str, ...] = ()) -> KnowledgeBase:
    trip = {t.key: t for t in triplets}
    ents = dict(entities)
    for t in trip.values():
        for e in (t.entity1, t.entity2):
            if e not in ents:
                ents[e] = Entity(e, e)
    phrases: dict[str, set] = defaultdict(set)
    for e in ents.values():
        phrases[e.id].add(e.id)
        phrases[normalize(e.canonical_name)].add(e.id)
        for a in e.aliases:
            phrases[normalize(a)].add(e.id)
    by_rel_obj: dict[tuple[str, str], set] = defaultdict(set)
    for t in trip.values():
        by_rel_obj[(t.relation, t.entity2)].add(t.entity1)
    return KnowledgeBase(
        MappingProxyType(dict(sorted(ents.items()))),
        MappingProxyType(dict(sorted(trip.items()))),
        closure_hops, relations, summary or ImportSummary(), warnings,
        MappingProxyType({k: frozenset(v) for k, v in phrases.items()}),
        MappingProxyType({k: frozenset(v) for k, v in by_rel_obj.items()}),
    )


def _read_lines(source) -> list[str]:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8").splitlines()
    if isinstance(source, str):
        if source and "\n" not in source and "\t" not in source and Path(source).is_file():
            return Path(source).read_text(encoding="utf-8").splitlines()
        return source.splitlines()
    return list(source)


def parse_triplets(source, relations: tuple[str, ...] = RELATIONS):
    """Parse a triplet file.  Returns (triplets, rejected labels, line count)."""
    out: list[tuple[int, str, str, str, str, str, float]] = []
    rejected: list[tuple[int, str]] = []
    lines = _read_lines(source)
    for no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (3, 4) or not all(p.strip() for p in parts[:3]):
            raise KBParseError(no, f"expected 3 or 4 tab-separated fields, got {line!r}")
        weight = 1.0
        if len(parts) == 4 and parts[3].strip():
            try:
                weight = float(parts[3])
            except ValueError:
                raise KBParseError(no, f"bad weight {parts[3]!r}") from None
            if weight < 0:
                raise KBParseError(no, f"negative weight {weight}")
        rel = _relation_label(parts[1])
        if rel not in relations:
            rejected.append((no, rel))
            continue
        e1, n1 = _entity_key(parts[0])
        e2, n2 = _entity_key(parts[2])
        out.append((no, e1, n1, rel, e2, n2, weight))
    return out, rejected, len(lines)


def parse_aliases(source) -> dict[str, list[str]]:
    table: dict[str, list[str]] = defaultdict(list)
    for no, raw in enumerate(_read_lines(source), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise KBParseError(no, f"expected entity<TAB>alias, got {raw!r}")
        ent = normalize(parts[0])
        alias = parts[1].strip()
        if alias not in table[ent]:
            table[ent].append(alias)
    return dict(table)


def parse_exclusions(source) -> list[tuple[str, ...]]:
    """Entity patterns (one field) or triplet patterns (three tab-separated fields)."""
    pats = []
    for raw in _read_lines(source):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in raw.split("\t")]
        if len(fields) == 3:
            pats.append((normalize(fields[0]) if fields[0] != "*" else "*",
                         _relation_label(fields[1]),
                         normalize(fields[2]) if fields[2] != "*" else "*"))
        else:
            pats.append((normalize(fields[0]) if fields[0] != "*" else "*",))
    return pats


def _excluded(e1: str, rel: str, e2: str, patterns) -> bool:
    for p in patterns:
        if len(p) == 1:
            if fnmatch.fnmatchcase(e1, p[0]) or fnmatch.fnmatchcase(e2, p[0]):
                return True
        elif (fnmatch.fnmatchcase(e1, p[0]) and fnmatch.fnmatchcase(rel, p[1])
              and fnmatch.fnmatchcase(e2, p[2])):
            return True
    return False


def isa_ancestors(isa: Mapping[str, Iterable[str]], roots: Iterable[str], max_hops: int) -> set[str]:
    """Entities reachable from ``roots`` along at most ``max_hops`` IsA links (roots included)."""
    seen = set(roots)
    frontier = list(seen)
    for _ in range(max_hops):
        nxt = []
        for e in frontier:
            for p in isa.get(e, ()):
                if p not in seen:
                    seen.add(p)
                    nxt.append(p)
        frontier = nxt
    return seen


def import_kb(source, vocabulary: Iterable[str], aliases=None, exclusions=None,
              closure_hops: int = 3, relations: tuple[str, ...] = RELATIONS) -> KnowledgeBase:
    """Load a triplet file, keeping only triplets that touch the vocabulary.

    A triplet is kept when either end is a vocabulary entity or an IsA
    ancestor of one within ``closure_hops`` links.  The result is closed.
    """
    vocab = {normalize(v) for v in vocabulary}
    if not vocab:
        raise ValueError("vocabulary must be nonempty")
    rows, rejected, n_lines = parse_triplets(source, relations)
    patterns = parse_exclusions(exclusions) if exclusions is not None else []
    alias_table = parse_aliases(aliases) if aliases is not None else {}

    excluded = 0
    usable = []
    for row in rows:
        _, e1, _, rel, e2, _, _ = row
        if _excluded(e1, rel, e2, patterns):
            excluded += 1
            continue
        usable.append(row)
    isa = defaultdict(list)
    for _, e1, _, rel, e2, _, _ in usable:
        if rel == "IsA":
            isa[e1].append(e2)
    reach = isa_ancestors(isa, vocab, closure_hops)

    names: dict[str, str] = {}
    kept = []
    for _, e1, n1, rel, e2, n2, w in usable:
        if e1 in reach or e2 in reach:
            kept.append(Triplet(e1, rel, e2, w))
            names.setdefault(e1, n1)
            names.setdefault(e2, n2)
    for v in vocabulary:
        names.setdefault(normalize(v), _split_camel(v.strip()))
    entities = {
        eid: Entity(eid, name, tuple(alias_table.get(eid, ())))
        for eid, name in names.items()
    }
    summary = ImportSummary(n_lines, len(kept), len(usable) - len(kept), excluded, tuple(rejected))
    if rejected:
        log.info("rejected %d triplets with unknown relation labels", len(rejected))
    kb = build_kb(entities, kept, 0, relations, summary)
    return infer_closure(kb, closure_hops)


def infer_closure(kb: KnowledgeBase, max_hops: int) -> KnowledgeBase:
    """Lift every non-IsA fact of an entity to its IsA descendants.

    For a chain e0 -IsA-> ... -IsA-> ek (k <= max_hops) and base (ek, R, x)
    with R != IsA, add derived (e0, R, x).  Provenance is the shortest chain.
    """
    if max_hops < 0:
        raise ValueError("max_hops must be >= 0")
    base = {t.key: t for t in kb.base}
    isa: dict[str, list[Triplet]] = defaultdict(list)
    facts: dict[str, list[Triplet]] = defaultdict(list)
    for t in sorted(base.values(), key=lambda t: t.key):
        (isa if t.relation == "IsA" else facts)[t.entity1].append(t)

    derived: dict[tuple, Triplet] = {}
    cyclic: set[str] = set()
    for e0 in sorted(isa):
        chain_to = {e0: ()}
        queue = deque([e0])
        while queue:
            e = queue.popleft()
            chain = chain_to[e]
            if len(chain) >= max_hops:
                continue
            for link in isa[e]:
                nxt = link.entity2
                if nxt == e0:
                    cyclic.add(e0)
                if nxt in chain_to:
                    continue
                chain_to[nxt] = chain + (link,)
                queue.append(nxt)
        for ek, chain in chain_to.items():
            if not chain:
                continue
            for fact in facts.get(ek, ()):
                key = (e0, fact.relation, fact.entity2)
                if key in base or key in derived:
                    continue
                steps = chain + (fact,)
                derived[key] = Triplet(e0, fact.relation, fact.entity2,
                                       min(s.weight for s in steps), True,
                                       tuple(s.key for s in steps))
    warnings = ()
    if cyclic:
        msg = "IsA cycle through " + ", ".join(sorted(cyclic))
        log.warning(msg)
        warnings = (msg,)
    return build_kb(kb.entities, list(base.values()) + list(derived.values()), max_hops,
                    kb.relations, kb.summary, warnings)


def replay_provenance(t: Triplet) -> tuple[str, str, str] | None:
    """Re-derive a triplet from its provenance chain; None if the chain is broken."""
    if not t.provenance:
        return None
    *links, fact = t.provenance
    cur = t.entity1
    for e1, rel, e2 in links:
        if rel != "IsA" or e1 != cur:
            return None
        cur = e2
    if fact[0] != cur or fact[1] == "IsA":
        return None
    return (t.entity1, fact[1], fact[2])


def resolve_phrase(kb: KnowledgeBase, phrase: str) -> str:
    if not phrase or not phrase.strip():
        raise ValueError("phrase must be nonempty")
    hits = kb._phrases.get(normalize(phrase))
    if not hits:
        raise UnresolvedPhrase(phrase)
    if len(hits) > 1:
        raise AmbiguousPhrase(phrase, hits)
    return next(iter(hits))


def try_resolve(kb: KnowledgeBase, phrase: str) -> str | None:
    try:
        return resolve_phrase(kb, phrase)
    except (UnresolvedPhrase, AmbiguousPhrase, ValueError):
        return None


def query_entities(kb: KnowledgeBase, relation: str, entity2: str) -> set[str]:
    if relation not in kb.relations:
        raise ValueError(f"relation {relation!r} not in vocabulary")
    return set(kb._by_rel_obj.get((relation, entity2), ()))


def facts_about(kb: KnowledgeBase, entity1: str) -> list[tuple[str, str]]:
    """(relation, entity2) pairs that hold for ``entity1`` in base or derived triplets."""
    return sorted((t.relation, t.entity2) for t in kb.triplets.values() if t.entity1 == entity1)


def empty_kb() -> KnowledgeBase:
    return build_kb({}, [], 0)


def write_triplets(kb: KnowledgeBase, path: str | Path, include_derived: bool = False) -> None:
    rows = [t for t in kb.triplets.values() if include_derived or not t.derived]
    lines = [f"{kb.name(t.entity1)}\t{t.relation}\t{kb.name(t.entity2)}\t{t.weight:g}" for t in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


DATA_DIR = Path(__file__).resolve().parent / "data"


def category_vocabulary() -> list[str]:
    from .catalog import CATEGORIES
    return [c.entity for c in CATEGORIES.values()]


def default_kb(closure_hops: int = 3, path: str | Path | None = None) -> KnowledgeBase:
    """The shipped curated knowledge base restricted to the category vocabulary."""
    source = Path(path) if path is not None else DATA_DIR / "kb.tsv"
    aliases = source.with_name(source.stem + "_aliases.tsv")
    exclusions = source.with_name(source.stem + "_exclusions.txt")
    return import_kb(source, category_vocabulary(),
                     aliases if aliases.is_file() else None,
                     exclusions if exclusions.is_file() else None, closure_hops)
