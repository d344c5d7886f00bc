"""Balancing keys: tags, sub-tags and answer domains."""
from __future__ import annotations

from .ast import Answer, Bool, Count, Enumeration, QuestionAst

_PREFIX = {"Existence": "EXISTENCE", "Counting": "COUNTING", "Comparing": "COMPARE",
           "Enumerating": "ENUMERATING"}


def structure(ast: QuestionAst) -> str:
    """Tag without the answer field, e.g. ``COMPARE_less_1_1``."""
    sizes = [len(g) for g in ast.groups]
    parts = [_PREFIX[ast.qtype]]
    if ast.qtype == "Existence" and ast.connector:
        parts.append(ast.connector)
    if ast.qtype == "Comparing":
        parts.append(ast.compare_word)
    parts += [str(n) for n in sizes]
    return "_".join(parts)


def answer_field(answer: Answer) -> str:
    if isinstance(answer, Bool):
        return answer.key()
    if isinstance(answer, Count):
        return str(answer.value)
    return str(answer.total)


def relation_words(ast: QuestionAst) -> tuple[str, ...]:
    return tuple(f.scene.relation.word for f in ast.filters if f.scene is not None)


def tag(ast: QuestionAst, answer: Answer) -> str:
    return f"{structure(ast)}_{answer_field(answer)}"


def subtag(ast: QuestionAst, answer: Answer) -> str:
    return "_".join((tag(ast, answer),) + relation_words(ast))


def family(ast: QuestionAst) -> str:
    """Sub-tag with the answer field blanked; members differ only in their answer."""
    return "_".join((structure(ast), "*") + relation_words(ast))


def answer_domain(qtype: str, max_count: int = 4) -> tuple[str, ...]:
    if qtype in ("Existence", "Comparing"):
        return ("No", "Yes")
    if qtype == "Counting":
        return tuple(str(i) for i in range(max_count + 1))
    return tuple(str(i) for i in range(1, max_count + 1))


def answer_in_domain(ast: QuestionAst, answer: Answer, max_count: int = 4) -> bool:
    if isinstance(answer, Enumeration) and not answer.items:
        return False
    return answer_field(answer) in answer_domain(ast.qtype, max_count)
