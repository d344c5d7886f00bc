"""Relational query plans.

Plans are trees of frozen dataclasses.  They serialize to JSON, print as an
indented operator tree and render to an SQL-like text for reading.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Union

TABLES: dict[str, tuple[str, ...]] = {
    "objects": ("id", "category", "entity", "pickupable", "x0", "y0", "z0", "x1", "y1", "z1",
                "confidence"),
    "entities": ("id", "name"),
    "object_relations": ("subject", "relation", "object"),
    "kb_relations": ("entity1", "relation", "entity2", "derived"),
    "priors": ("category1", "relation", "category2", "count", "entity1", "source"),
}


class QueryTypeError(TypeError):
    pass


# value expressions -------------------------------------------------------

@dataclass(frozen=True)
class CategoryOf:
    """Builtin: phrase -> scene object category."""
    phrase: str


@dataclass(frozen=True)
class EntityOf:
    """Builtin: phrase -> knowledge-graph entity."""
    phrase: str


Value = Union[str, int, float, bool, CategoryOf, EntityOf]


# predicates ----------------------------------------------------------------

@dataclass(frozen=True)
class Eq:
    column: str
    value: Any


@dataclass(frozen=True)
class InSet:
    column: str
    subplan: Any
    subcolumn: str


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


# operators -----------------------------------------------------------------

@dataclass(frozen=True)
class Scan:
    table: str


@dataclass(frozen=True)
class Filter:
    child: Any
    predicate: Any


@dataclass(frozen=True)
class Join:
    left: Any
    right: Any
    left_key: str
    right_key: str
    prefix: str = "r_"


@dataclass(frozen=True)
class Project:
    child: Any
    columns: tuple[str, ...]


@dataclass(frozen=True)
class Union_:
    children: tuple


@dataclass(frozen=True)
class Intersect:
    children: tuple


@dataclass(frozen=True)
class Aggregate:
    child: Any
    kind: str  # count | group_count | exists
    key: str | None = None


@dataclass(frozen=True)
class Compare:
    left: Any
    right: Any
    word: str  # more | less


@dataclass(frozen=True)
class QueryProgram:
    kind: str  # Answering | Planning
    plan: Any
    qtype: str | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "qtype": self.qtype, "plan": node_to_json(self.plan)}

    @classmethod
    def from_json(cls, d: dict) -> "QueryProgram":
        return cls(d["kind"], node_from_json(d["plan"]), d.get("qtype"))


_NODES = {c.__name__: c for c in (CategoryOf, EntityOf, Eq, InSet, And, Or, Scan, Filter, Join,
                                   Project, Union_, Intersect, Aggregate, Compare)}


def node_to_json(node):
    if isinstance(node, tuple):
        return [node_to_json(x) for x in node]
    if type(node).__name__ in _NODES and not isinstance(node, (str, int, float, bool)):
        out = {"op": type(node).__name__}
        for f in fields(node):
            out[f.name] = node_to_json(getattr(node, f.name))
        return out
    return node


def node_from_json(data):
    if isinstance(data, list):
        return tuple(node_from_json(x) for x in data)
    if isinstance(data, dict) and "op" in data:
        cls = _NODES[data["op"]]
        return cls(**{k: node_from_json(v) for k, v in data.items() if k != "op"})
    return data


# schema checking ---------------------------------------------------------

def output_columns(node) -> tuple[str, ...]:
    """Columns produced by ``node``; raises QueryTypeError on a bad reference."""
    if isinstance(node, Scan):
        if node.table not in TABLES:
            raise QueryTypeError(f"unknown table {node.table!r}")
        return TABLES[node.table]
    if isinstance(node, Filter):
        cols = output_columns(node.child)
        _check_predicate(node.predicate, cols)
        return cols
    if isinstance(node, Join):
        left, right = output_columns(node.left), output_columns(node.right)
        if node.left_key not in left or node.right_key not in right:
            raise QueryTypeError(f"join keys {node.left_key}/{node.right_key} missing")
        return left + tuple(node.prefix + c for c in right)
    if isinstance(node, Project):
        cols = output_columns(node.child)
        missing = [c for c in node.columns if c not in cols]
        if missing:
            raise QueryTypeError(f"projection of missing columns {missing}")
        return tuple(node.columns)
    if isinstance(node, (Union_, Intersect)):
        schemas = {output_columns(c) for c in node.children}
        if len(schemas) != 1:
            raise QueryTypeError("set operation over different schemas")
        return schemas.pop()
    if isinstance(node, Aggregate):
        cols = output_columns(node.child)
        if node.kind == "group_count":
            if node.key not in cols:
                raise QueryTypeError(f"group key {node.key!r} missing")
            return (node.key, "count")
        if node.kind not in ("count", "exists"):
            raise QueryTypeError(f"unknown aggregate {node.kind!r}")
        return (node.kind,)
    if isinstance(node, Compare):
        for side in (node.left, node.right):
            if output_columns(side) != ("count",):
                raise QueryTypeError("compare needs two counts")
        return ("result",)
    raise QueryTypeError(f"not an operator: {node!r}")


def _check_predicate(pred, cols) -> None:
    if isinstance(pred, Eq):
        if pred.column not in cols:
            raise QueryTypeError(f"predicate on missing column {pred.column!r}")
    elif isinstance(pred, InSet):
        if pred.column not in cols:
            raise QueryTypeError(f"predicate on missing column {pred.column!r}")
        if pred.subcolumn not in output_columns(pred.subplan):
            raise QueryTypeError(f"subquery lacks column {pred.subcolumn!r}")
    elif isinstance(pred, (And, Or)):
        for p in pred.items:
            _check_predicate(p, cols)
    else:
        raise QueryTypeError(f"not a predicate: {pred!r}")


def check_program(program: QueryProgram) -> tuple[str, ...]:
    cols = output_columns(program.plan)
    if program.kind == "Answering" and not isinstance(program.plan, (Aggregate, Compare)):
        raise QueryTypeError("answering programs end in an aggregate or a comparison")
    if program.kind == "Planning" and cols != ("category1", "relation", "category2"):
        raise QueryTypeError("planning programs end in a triplet projection")
    return cols


# rendering -----------------------------------------------------------------

def _value_sql(v) -> str:
    if isinstance(v, CategoryOf):
        return f"word_to_scene_object_category('{v.phrase}')"
    if isinstance(v, EntityOf):
        return f"word_to_knowledge_graph_entity('{v.phrase}')"
    if isinstance(v, str):
        return f"'{v}'"
    return str(v)


def _pred_sql(p, indent: int) -> str:
    pad = "  " * indent
    if isinstance(p, Eq):
        return f"{p.column} = {_value_sql(p.value)}"
    if isinstance(p, InSet):
        return f"{p.column} IN (\n{to_sql(p.subplan, indent + 1)}\n{pad})"
    joiner = " AND " if isinstance(p, And) else " OR "
    return "(" + joiner.join(_pred_sql(x, indent) for x in p.items) + ")"


def to_sql(node, indent: int = 0) -> str:
    """SQL-like text; meant for reading, not for a database."""
    pad = "  " * indent
    if isinstance(node, Scan):
        return f"{pad}SELECT * FROM {node.table}"
    if isinstance(node, Filter):
        if isinstance(node.child, Scan):
            src = node.child.table
        else:
            src = f"(\n{to_sql(node.child, indent + 1)}\n{pad})"
        return f"{pad}SELECT * FROM {src} WHERE {_pred_sql(node.predicate, indent)}"
    if isinstance(node, Join):
        return (f"{pad}SELECT * FROM (\n{to_sql(node.left, indent + 1)}\n{pad}) AS l JOIN (\n"
                f"{to_sql(node.right, indent + 1)}\n{pad}) AS {node.prefix.rstrip('_')} "
                f"ON l.{node.left_key} = {node.prefix.rstrip('_')}.{node.right_key}")
    if isinstance(node, Project):
        cols = ", ".join(node.columns) if node.columns else "1"
        return f"{pad}SELECT DISTINCT {cols} FROM (\n{to_sql(node.child, indent + 1)}\n{pad})"
    if isinstance(node, (Union_, Intersect)):
        word = "UNION" if isinstance(node, Union_) else "INTERSECT"
        return f"\n{pad}{word}\n".join(to_sql(c, indent) for c in node.children)
    if isinstance(node, Aggregate):
        inner = to_sql(node.child, indent + 1)
        if node.kind == "count":
            return f"{pad}SELECT COUNT(DISTINCT id) FROM (\n{inner}\n{pad})"
        if node.kind == "exists":
            return f"{pad}SELECT EXISTS (\n{inner}\n{pad})"
        return (f"{pad}SELECT {node.key}, COUNT(DISTINCT id) FROM (\n{inner}\n{pad}) "
                f"GROUP BY {node.key}")
    if isinstance(node, Compare):
        op = ">" if node.word == "more" else "<"
        return f"{pad}SELECT (\n{to_sql(node.left, indent + 1)}\n{pad}) {op} (\n{to_sql(node.right, indent + 1)}\n{pad})"
    raise QueryTypeError(f"cannot render {node!r}")


def format_tree(node, indent: int = 0) -> str:
    """Indented operator tree."""
    pad = "  " * indent
    if isinstance(node, Scan):
        return f"{pad}Scan {node.table}"
    if isinstance(node, Filter):
        return f"{pad}Filter {_pred_tree(node.predicate)}\n{format_tree(node.child, indent + 1)}"
    if isinstance(node, Join):
        return (f"{pad}Join {node.left_key} = {node.prefix}{node.right_key}\n"
                f"{format_tree(node.left, indent + 1)}\n{format_tree(node.right, indent + 1)}")
    if isinstance(node, Project):
        return f"{pad}Project {', '.join(node.columns) or '()'}\n{format_tree(node.child, indent + 1)}"
    if isinstance(node, (Union_, Intersect)):
        name = "Union" if isinstance(node, Union_) else "Intersect"
        return f"{pad}{name}\n" + "\n".join(format_tree(c, indent + 1) for c in node.children)
    if isinstance(node, Aggregate):
        key = f" by {node.key}" if node.key else ""
        return f"{pad}Aggregate {node.kind}{key}\n{format_tree(node.child, indent + 1)}"
    if isinstance(node, Compare):
        return (f"{pad}Compare {node.word}\n{format_tree(node.left, indent + 1)}\n"
                f"{format_tree(node.right, indent + 1)}")
    return f"{pad}{node!r}"


def _pred_tree(p) -> str:
    if isinstance(p, Eq):
        return f"{p.column} = {_value_sql(p.value)}"
    if isinstance(p, InSet):
        return f"{p.column} IN <{type(p.subplan).__name__} ... .{p.subcolumn}>"
    joiner = " and " if isinstance(p, And) else " or "
    return "(" + joiner.join(_pred_tree(x) for x in p.items) + ")"
