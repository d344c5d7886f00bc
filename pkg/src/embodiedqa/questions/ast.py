"""Question syntax trees, answers and dataset records."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..recon.relations import Relation

QTYPES = ("Existence", "Counting", "Comparing", "Enumerating")
SPLITS = ("KEQA", "KEQAExtension")
# spatial relations a question may attach to a target object
SCENE_RELATIONS = (Relation.NEAR, Relation.ABOVE, Relation.BELOW, Relation.ON, Relation.IN)


@dataclass(frozen=True)
class SceneClause:
    relation: Relation
    anchor: str  # category

    def to_json(self) -> list:
        return [self.relation.value, self.anchor]


@dataclass(frozen=True)
class KBClause:
    relation: str
    entity: str  # entity id
    # surface phrase as it appears in the text; resolution is by the builtin
    phrase: str = field(default="", compare=False)

    def to_json(self) -> list:
        return [self.relation, self.entity, self.phrase]


@dataclass(frozen=True)
class ObjectFilter:
    category: str | None = None
    kb: KBClause | None = None
    scene: SceneClause | None = None

    def __post_init__(self) -> None:
        if self.category is None and self.kb is None:
            raise ValueError("a filter needs a category or a knowledge clause")

    def to_json(self) -> dict:
        return {"category": self.category,
                "kb": self.kb.to_json() if self.kb else None,
                "scene": self.scene.to_json() if self.scene else None}

    @classmethod
    def from_json(cls, d: dict) -> "ObjectFilter":
        kb = KBClause(*d["kb"]) if d.get("kb") else None
        sc = SceneClause(Relation(d["scene"][0]), d["scene"][1]) if d.get("scene") else None
        return cls(d.get("category"), kb, sc)


@dataclass(frozen=True)
class QuestionAst:
    qtype: str
    groups: tuple[tuple[ObjectFilter, ...], ...]
    connector: str | None = None  # "and" | "or"; None when every group has one filter
    compare_word: str | None = None  # "more" | "less", Comparing only

    def __post_init__(self) -> None:
        if self.qtype not in QTYPES:
            raise ValueError(f"unknown question type {self.qtype!r}")
        n = 2 if self.qtype == "Comparing" else 1
        if len(self.groups) != n or any(not g for g in self.groups):
            raise ValueError(f"{self.qtype} needs {n} nonempty group(s)")
        multi = any(len(g) > 1 for g in self.groups)
        if multi != (self.connector is not None):
            raise ValueError("connector must be set exactly when a group has several filters")
        if self.connector == "and" and self.qtype != "Existence":
            raise ValueError("'and' only joins Existence filters")
        if self.connector not in (None, "and", "or"):
            raise ValueError(f"bad connector {self.connector!r}")
        if (self.qtype == "Comparing") != (self.compare_word in ("more", "less")):
            raise ValueError("compare_word is required for Comparing and only there")

    @property
    def filters(self) -> tuple[ObjectFilter, ...]:
        return tuple(f for g in self.groups for f in g)

    def to_json(self) -> dict:
        return {"qtype": self.qtype, "groups": [[f.to_json() for f in g] for g in self.groups],
                "connector": self.connector, "compare_word": self.compare_word}

    @classmethod
    def from_json(cls, d: dict) -> "QuestionAst":
        groups = tuple(tuple(ObjectFilter.from_json(f) for f in g) for g in d["groups"])
        return cls(d["qtype"], groups, d.get("connector"), d.get("compare_word"))


@dataclass(frozen=True)
class Bool:
    value: bool

    def key(self) -> str:
        return "Yes" if self.value else "No"


@dataclass(frozen=True)
class Count:
    value: int

    def key(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Enumeration:
    """Category -> instance count, stored sorted by category."""
    items: tuple[tuple[str, int], ...]

    @classmethod
    def of(cls, counts) -> "Enumeration":
        return cls(tuple(sorted((c, int(n)) for c, n in dict(counts).items() if n > 0)))

    @property
    def total(self) -> int:
        return sum(n for _, n in self.items)

    def as_dict(self) -> dict[str, int]:
        return dict(self.items)

    def key(self) -> str:
        return ",".join(f"{c}:{n}" for c, n in self.items)


Answer = Union[Bool, Count, Enumeration]


def answer_to_json(a: Answer):
    if isinstance(a, Bool):
        return {"bool": a.value}
    if isinstance(a, Count):
        return {"count": a.value}
    return {"enum": [list(p) for p in a.items]}


def answer_from_json(d) -> Answer:
    if "bool" in d:
        return Bool(bool(d["bool"]))
    if "count" in d:
        return Count(int(d["count"]))
    return Enumeration(tuple((c, int(n)) for c, n in d["enum"]))


@dataclass(frozen=True)
class QuestionRecord:
    scene_id: str
    text: str
    ast: QuestionAst
    answer: Answer
    tag: str
    subtag: str
    split: str = "KEQA"
    question_id: str = ""

    def to_json(self) -> dict:
        return {"id": self.question_id, "scene": self.scene_id, "text": self.text,
                "ast": self.ast.to_json(), "answer": answer_to_json(self.answer),
                "tag": self.tag, "subtag": self.subtag, "split": self.split}

    @classmethod
    def from_json(cls, d: dict) -> "QuestionRecord":
        return cls(d["scene"], d["text"], QuestionAst.from_json(d["ast"]),
                   answer_from_json(d["answer"]), d["tag"], d["subtag"], d["split"],
                   d.get("id", ""))
