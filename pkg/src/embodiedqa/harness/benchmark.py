"""Benchmark drivers, the answer-prior baseline and accuracy/length reports."""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field

from ..config import Config
from ..kb import KnowledgeBase
from ..priors import ScenePriors
from ..questions.ast import QTYPES, Answer, QuestionRecord
from ..questions.dataset import by_scene
from .episode import Episode, EpisodeResult, Modes

log = logging.getLogger(__name__)


@dataclass
class TypeStats:
    n: int = 0
    correct: int = 0
    total_length: float = 0.0

    def add(self, correct: bool, length: float) -> None:
        self.n += 1
        self.correct += int(correct)
        self.total_length += length

    def merge(self, other: "TypeStats") -> "TypeStats":
        return TypeStats(self.n + other.n, self.correct + other.correct,
                         self.total_length + other.total_length)

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.n if self.n else 0.0

    @property
    def mean_length(self) -> float:
        return self.total_length / self.n if self.n else 0.0


@dataclass
class Report:
    """Per-type accuracy (percent) and mean path length, plus an overall row.

    Multi-turn runs also carry the summed length of each scene's turns, so
    both the per-question and the cumulative view are available.
    """
    label: str = ""
    rows: dict = field(default_factory=dict)  # qtype -> TypeStats
    episodes: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # (question_id, reason)
    cumulative: dict = field(default_factory=dict)  # scene_id -> summed length over its turns
    speedup: float | None = None

    def add(self, result: EpisodeResult) -> None:
        self.rows.setdefault(result.qtype, TypeStats()).add(result.correct, result.path_length)
        self.episodes.append(result)
        self.cumulative[result.scene_id] = self.cumulative.get(result.scene_id, 0) + result.path_length

    def merge(self, other: "Report") -> "Report":
        rows = dict(self.rows)
        for q, s in other.rows.items():
            rows[q] = rows[q].merge(s) if q in rows else s
        cum = dict(self.cumulative)
        for k, v in other.cumulative.items():
            cum[k] = cum.get(k, 0) + v
        return Report(self.label or other.label, rows, self.episodes + other.episodes,
                      self.skipped + other.skipped, cum)

    @property
    def overall(self) -> TypeStats:
        total = TypeStats()
        for s in self.rows.values():
            total = total.merge(s)
        return total

    @property
    def accuracy(self) -> float:
        return self.overall.accuracy

    @property
    def mean_length(self) -> float:
        return self.overall.mean_length

    @property
    def mean_cumulative_length(self) -> float:
        return sum(self.cumulative.values()) / len(self.cumulative) if self.cumulative else 0.0

    def with_speedup(self, baseline: "Report") -> "Report":
        """Set speedup = baseline mean length / this mean length."""
        self.speedup = baseline.mean_length / self.mean_length if self.mean_length > 0 else None
        return self

    def to_json(self) -> dict:
        return {"label": self.label,
                "types": {q: {"n": s.n, "correct": s.correct, "accuracy": s.accuracy,
                              "mean_length": s.mean_length} for q, s in self._ordered()},
                "overall": {"n": self.overall.n, "correct": self.overall.correct,
                            "accuracy": self.accuracy, "mean_length": self.mean_length,
                            "mean_cumulative_length": self.mean_cumulative_length},
                "speedup": self.speedup,
                "skipped": [list(s) for s in self.skipped],
                "episodes": [e.to_json() for e in self.episodes]}

    def _ordered(self):
        known = [q for q in QTYPES if q in self.rows]
        return [(q, self.rows[q]) for q in known + sorted(set(self.rows) - set(known))]

    def format_table(self) -> str:
        return format_reports([self])


def format_reports(reports: list[Report]) -> str:
    """Aligned plain-text table, one row per report, Acc./Len. per type."""
    qtypes = [q for q in QTYPES if any(q in r.rows for r in reports)]
    head = ["Method"] + [f"{q[:5]}. {m}" for q in qtypes for m in ("Acc.", "Len.")] + ["Overall Acc.", "Overall Len."]
    with_cum = any(len(r.episodes) > len(r.cumulative) for r in reports)
    if with_cum:
        head.append("Cum. Len.")
    with_speed = any(r.speedup is not None for r in reports)
    if with_speed:
        head.append("Speedup")
    lines = []
    for r in reports:
        row = [r.label or "-"]
        for q in qtypes:
            s = r.rows.get(q)
            row += [f"{s.accuracy:.1f}", f"{s.mean_length:.1f}"] if s else ["-", "-"]
        row += [f"{r.accuracy:.1f}", f"{r.mean_length:.1f}"]
        if with_cum:
            row.append(f"{r.mean_cumulative_length:.1f}")
        if with_speed:
            row.append(f"{r.speedup:.2f}" if r.speedup is not None else "-")
        lines.append(row)
    widths = [max(len(x) for x in col) for col in zip(head, *lines)]
    fmt = "  ".join(f"{{:<{w}}}" if i == 0 else f"{{:>{w}}}" for i, w in enumerate(widths))
    out = [fmt.format(*head), "  ".join("-" * w for w in widths)]
    out += [fmt.format(*row) for row in lines]
    for r in reports:
        for qid, reason in r.skipped:
            out.append(f"skipped {qid}: {reason}")
    return "\n".join(out)


def save_report(reports: list[Report], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_json() for r in reports], fh, indent=1)


def load_report_rows(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def select_questions(records: list[QuestionRecord], turns: int) -> dict[str, list[QuestionRecord]]:
    """The first ``turns`` questions of each scene, in dataset order."""
    return {sid: qs[:turns] for sid, qs in by_scene(records).items()}


def run_benchmark(records: list[QuestionRecord], scenes: dict, kb: KnowledgeBase | None,
                  priors: ScenePriors | None, cfg: Config | None = None, modes: Modes | None = None,
                  turns: int = 1, label: str = "", collect: list | None = None) -> Report:
    """Single-turn (``turns=1``) or multi-turn benchmark.

    Each scene gets one episode; its first ``turns`` questions are asked in
    order against the same memory and agent poses.  Scenes missing from
    ``scenes`` are skipped and noted in the report.  Finished episodes are
    appended to ``collect`` when given.
    """
    cfg = cfg or Config()
    modes = modes or Modes()
    report = Report(label)
    for sid, questions in select_questions(records, turns).items():
        scene = scenes.get(sid)
        if scene is None:
            report.skipped += [(q.question_id, f"scene {sid} not found") for q in questions]
            continue
        episode = Episode(scene, kb, priors, cfg, modes)
        for q in questions:
            result = episode.ask(q)
            log.info("%s turn %d: %s len=%d %s", q.question_id, result.turn, result.qtype,
                     result.path_length, "ok" if result.correct else "wrong")
            report.add(result)
        if collect is not None:
            collect.append(episode)
    return report


def answer_distribution(records: list[QuestionRecord]) -> dict[str, Counter]:
    """Answer counts per question type."""
    dist: dict[str, Counter] = {}
    for r in records:
        dist.setdefault(r.ast.qtype, Counter())[r.answer] += 1
    return dist


def priori_baseline(qtype: str, distribution: Counter) -> Answer | None:
    """Most frequent answer of a type; ties go to the lexicographically first key."""
    if not distribution:
        return None
    return min(distribution, key=lambda a: (-distribution[a], a.key()))


def priori_report(train: list[QuestionRecord], test: list[QuestionRecord], label: str = "Priori") -> Report:
    guesses = {q: priori_baseline(q, d) for q, d in answer_distribution(train).items()}
    report = Report(label)
    for r in test:
        report.add(EpisodeResult(r.question_id, r.scene_id, r.ast.qtype, guesses.get(r.ast.qtype),
                                 r.answer, 0, (0,), 0, 1, ("priori",)))
    return report
