"""Tree-walking interpreter for query programs."""
from __future__ import annotations

import logging
from collections import Counter

from ..catalog import category, noun
from ..questions.ast import Answer, Bool, Count, Enumeration
from ..recon.relations import Relation
from .ir import (Aggregate, And, CategoryOf, Compare, EntityOf, Eq, Filter, InSet, Intersect,
                 Join, Or, Project, QueryProgram, QueryTypeError, Scan, Union_, output_columns)
from .store import RelationalStore

log = logging.getLogger(__name__)


class _Run:
    def __init__(self, store: RelationalStore, warnings: list | None):
        self.store = store
        self.warnings = warnings if warnings is not None else []
        self.values: dict = {}
        self.subsets: dict = {}

    def value(self, v):
        if isinstance(v, (CategoryOf, EntityOf)):
            if v not in self.values:
                got = (self.store.category_of(v.phrase) if isinstance(v, CategoryOf)
                       else self.store.entity_of(v.phrase))
                if got is None:
                    kind = "category" if isinstance(v, CategoryOf) else "entity"
                    msg = f"phrase {v.phrase!r} names no known {kind}; its branch is empty"
                    self.warnings.append(msg)
                    log.warning(msg)
                self.values[v] = got
            return self.values[v]
        return v

    def predicate(self, pred, cols):
        """Row -> bool closure; an unresolved builtin makes an equality false."""
        if isinstance(pred, Eq):
            i = cols.index(pred.column)
            target = self.value(pred.value)
            if target is None:
                return lambda row: False
            return lambda row: row[i] == target
        if isinstance(pred, InSet):
            i = cols.index(pred.column)
            key = id(pred)
            if key not in self.subsets:
                sub_cols = output_columns(pred.subplan)
                j = sub_cols.index(pred.subcolumn)
                self.subsets[key] = {r[j] for r in self.rows(pred.subplan)}
            members = self.subsets[key]
            return lambda row: row[i] in members
        if isinstance(pred, (And, Or)):
            parts = [self.predicate(p, cols) for p in pred.items]
            if isinstance(pred, And):
                return lambda row: all(p(row) for p in parts)
            return lambda row: any(p(row) for p in parts)
        raise QueryTypeError(f"not a predicate: {pred!r}")

    def rows(self, node) -> list[tuple]:
        if isinstance(node, Scan):
            return list(self.store.rows(node.table))
        if isinstance(node, Filter):
            test = self.predicate(node.predicate, output_columns(node.child))
            return [r for r in self.rows(node.child) if test(r)]
        if isinstance(node, Join):
            lcols, rcols = output_columns(node.left), output_columns(node.right)
            li, ri = lcols.index(node.left_key), rcols.index(node.right_key)
            index: dict = {}
            for r in self.rows(node.right):
                index.setdefault(r[ri], []).append(r)
            return [l + r for l in self.rows(node.left) for r in index.get(l[li], ())]
        if isinstance(node, Project):
            idx = [output_columns(node.child).index(c) for c in node.columns]
            return list(dict.fromkeys(tuple(r[i] for i in idx) for r in self.rows(node.child)))
        if isinstance(node, Union_):
            out: dict = {}
            for c in node.children:
                out.update(dict.fromkeys(self.rows(c)))
            return list(out)
        if isinstance(node, Intersect):
            sets = [self.rows(c) for c in node.children]
            common = set(sets[0]).intersection(*map(set, sets[1:]))
            return [r for r in sets[0] if r in common]
        if isinstance(node, Aggregate):
            rows = self.rows(node.child)
            if node.kind == "exists":
                return [(bool(rows),)]
            if node.kind == "count":
                return [(len(set(rows)),)]
            i = output_columns(node.child).index(node.key)
            counts = Counter(r[i] for r in set(rows))
            return sorted(counts.items())
        if isinstance(node, Compare):
            a = self.rows(node.left)[0][0]
            b = self.rows(node.right)[0][0]
            return [(a > b if node.word == "more" else a < b,)]
        raise QueryTypeError(f"cannot execute {node!r}")


def execute(program: QueryProgram, store: RelationalStore, warnings: list | None = None):
    """Answer for answering programs; a set of (category, Relation, category) for planning ones."""
    run = _Run(store, warnings)
    rows = run.rows(program.plan)
    if program.kind == "Planning":
        return {(a, Relation(r), b) for a, r, b in rows}
    plan = program.plan
    if isinstance(plan, Compare) or (isinstance(plan, Aggregate) and plan.kind == "exists"):
        return Bool(bool(rows[0][0]))
    if plan.kind == "count":
        return Count(int(rows[0][0]))
    return Enumeration.of(dict(rows))


def _item(name: str, n: int) -> str:
    c = category(name)
    return f"{c.article} {c.singular}" if n == 1 else f"{n} {noun(name, n)}"


def format_answer(answer: Answer) -> str:
    """Yes/No, digits, or a list such as "A loaf of bread, a tomato and 2 apples"."""
    if isinstance(answer, Bool):
        return answer.key()
    if isinstance(answer, Count):
        return str(answer.value)
    items = sorted(answer.as_dict().items(), key=lambda kv: (kv[1], category(kv[0]).singular))
    if not items:
        return "Nothing"
    parts = [_item(name, n) for name, n in items]
    text = parts[0] if len(parts) == 1 else ", ".join(parts[:-1]) + " and " + parts[-1]
    return text[0].upper() + text[1:]

