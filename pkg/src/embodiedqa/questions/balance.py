"""Two-stage dataset balancing.

Stage 1 makes every sub-tag family answer-uniform.  Stage 2 picks how many
questions each family contributes so that every tag hits its target; with a
per-scene quota this is a small integer program.
"""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .ast import QuestionAst, QuestionRecord
from .tags import answer_domain, answer_field, family, structure

log = logging.getLogger(__name__)

# per-type question totals of the released splits (train, test)
FULL_TOTALS = {"train": 12500, "test": 2500}
STRUCTURES = {
    "KEQA": {
        "Existence": ["EXISTENCE_1"],
        "Counting": ["COUNTING_1"],
        "Comparing": ["COMPARE_less_1_1", "COMPARE_more_1_1"],
        "Enumerating": ["ENUMERATING_1"],
    },
    "KEQAExtension": {
        "Existence": ["EXISTENCE_and_2", "EXISTENCE_and_3", "EXISTENCE_or_2", "EXISTENCE_or_3"],
        "Counting": ["COUNTING_2", "COUNTING_3"],
        "Comparing": [f"COMPARE_{w}_{a}_{b}" for w in ("less", "more")
                      for a, b in ((1, 2), (2, 1), (2, 2))],
        "Enumerating": ["ENUMERATING_2", "ENUMERATING_3"],
    },
}


class InsufficientPool(ValueError):
    def __init__(self, starved: dict[str, tuple[int, int]]):
        self.starved = starved
        detail = ", ".join(f"{t} needs {n} has {a}" for t, (n, a) in sorted(starved.items()))
        super().__init__(f"pool cannot meet targets: {detail}")


def default_targets(split: str = "KEQA", per_type: int = 500, max_count: int = 4) -> dict[str, int]:
    """Per-tag counts: each type's total spread evenly over answers, then over structures."""
    targets = {}
    for qtype, structs in STRUCTURES[split].items():
        domain = answer_domain(qtype, max_count)
        if per_type % len(domain):
            raise ValueError(f"{per_type} questions cannot be spread evenly over {len(domain)} answers")
        per_answer = per_type // len(domain)
        base, extra = divmod(per_answer, len(structs))
        for i, s in enumerate(structs):
            n = base + (1 if i < extra else 0)
            for a in domain:
                targets[f"{s}_{a}"] = n
    return targets


def save_targets(targets: dict[str, int], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in sorted(targets):
            fh.write(f"{t}\t{targets[t]}\n")


def load_targets(path) -> dict[str, int]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                t, n = line.split("\t")
                out[t] = int(n)
    return out


def _qtype_of(struct: str) -> str:
    return {"EXISTENCE": "Existence", "COUNTING": "Counting", "COMPARE": "Comparing",
            "ENUMERATING": "Enumerating"}[struct.split("_")[0]]


def _structure_targets(targets: dict[str, int], max_count: int) -> dict[str, int]:
    """Per-structure count per answer; targets must be answer-uniform within a structure."""
    by_struct: dict[str, dict[str, int]] = defaultdict(dict)
    for t, n in targets.items():
        s, a = t.rsplit("_", 1)
        by_struct[s][a] = n
    out = {}
    for s, per in by_struct.items():
        domain = answer_domain(_qtype_of(s), max_count)
        vals = {per.get(a, 0) for a in domain}
        if len(vals) != 1 or set(per) - set(domain):
            raise ValueError(f"targets for {s} are not uniform over its answers {domain}")
        out[s] = vals.pop()
    return out


@dataclass
class BalanceResult:
    records: list[QuestionRecord]
    family_counts: dict[str, int] = field(default_factory=dict)
    method: str = ""


def prune_families(pool: list[QuestionRecord], rng: np.random.Generator,
                   max_count: int = 4) -> list[QuestionRecord]:
    """Stage 1 on its own: every family keeps min-count questions per answer.

    Families missing an answer of their domain are dropped entirely.
    """
    fams: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    for i, r in enumerate(pool):
        fams[family(r.ast)][answer_field(r.answer)].append(i)
    keep = []
    for f in sorted(fams):
        per = fams[f]
        first = next(iter(per.values()))[0]
        domain = answer_domain(pool[first].ast.qtype, max_count)
        if any(a not in per for a in domain):
            continue
        k = min(len(per[a]) for a in domain)
        for a in domain:
            idx = per[a]
            keep.extend(int(i) for i in rng.choice(idx, size=k, replace=False))
    return [pool[i] for i in sorted(keep)]


def balance(pool: list[QuestionRecord], targets: dict[str, int], rng: np.random.Generator | None = None,
            per_scene: int | None = None, max_count: int = 4, time_limit: float = 60.0) -> BalanceResult:
    """Select a subset whose families are answer-uniform and whose tags hit ``targets``.

    ``per_scene`` additionally fixes how many questions each scene in the pool
    contributes.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    struct_target = _structure_targets(targets, max_count)
    # cells: (scene, family, answer) -> pool indices
    cells: dict[tuple[str, str, str], list[int]] = defaultdict(list)
    fam_struct: dict[str, str] = {}
    fam_domain: dict[str, tuple[str, ...]] = {}
    for i, r in enumerate(pool):
        f = family(r.ast)
        s = structure(r.ast)
        if s not in struct_target:
            continue
        fam_struct[f] = s
        fam_domain[f] = answer_domain(r.ast.qtype, max_count)
        cells[(r.scene_id, f, answer_field(r.answer))].append(i)
    fam_avail: dict[str, Counter] = defaultdict(Counter)
    for (s, f, a), idx in cells.items():
        fam_avail[f][a] += len(idx)
    # stage 1 eligibility: the whole answer domain must be present
    cap = {f: min(fam_avail[f][a] for a in fam_domain[f]) for f in fam_avail}
    families = sorted(f for f, k in cap.items() if k > 0)
    starved = {}
    for st, need in struct_target.items():
        have = sum(cap[f] for f in families if fam_struct[f] == st)
        if have < need:
            starved[st] = (need, have)
    if starved:
        raise InsufficientPool(starved)
    if per_scene is None:
        counts = _greedy_counts(families, fam_struct, cap, struct_target, rng)
        method = "greedy"
        alloc = _spread(cells, families, fam_domain, counts, rng)
    else:
        alloc = _milp_alloc(cells, families, fam_struct, fam_domain, struct_target, per_scene,
                            rng, time_limit)
        method = "milp"
        counts = Counter()
        for (s, f, a), n in alloc.items():
            if a == fam_domain[f][0]:
                counts[f] += n
    chosen: dict[str, list[int]] = defaultdict(list)
    for key in sorted(alloc):
        n = alloc[key]
        if n:
            idx = cells[key]
            chosen[key[0]].extend(int(i) for i in rng.choice(idx, size=n, replace=False))
    records = []
    for scene in sorted(chosen):
        picks = list(chosen[scene])
        rng.shuffle(picks)
        for k, i in enumerate(picks):
            r = pool[i]
            records.append(QuestionRecord(r.scene_id, r.text, r.ast, r.answer, r.tag, r.subtag,
                                          r.split, f"{scene}_q{k}"))
    return BalanceResult(records, dict(counts), method)


def _greedy_counts(families, fam_struct, cap, struct_target, rng) -> dict[str, int]:
    counts = {}
    for st, need in sorted(struct_target.items()):
        fams = [f for f in families if fam_struct[f] == st]
        order = [fams[i] for i in rng.permutation(len(fams))]
        left = need
        # round-robin keeps many families represented
        alloc = dict.fromkeys(order, 0)
        while left > 0:
            progressed = False
            for f in order:
                if left and alloc[f] < cap[f]:
                    alloc[f] += 1
                    left -= 1
                    progressed = True
            if not progressed:
                raise InsufficientPool({st: (need, need - left)})
        counts.update(alloc)
    return counts


def _spread(cells, families, fam_domain, counts, rng) -> dict:
    """Distribute each family's per-answer count over scenes without a quota."""
    alloc = {}
    for f in families:
        for a in fam_domain[f]:
            keys = sorted(k for k in cells if k[1] == f and k[2] == a)
            pool = [k for k in keys for _ in cells[k]]
            picks = rng.choice(len(pool), size=counts.get(f, 0), replace=False) if counts.get(f, 0) else []
            for p in picks:
                alloc[pool[p]] = alloc.get(pool[p], 0) + 1
    return alloc


def _milp_alloc(cells, families, fam_struct, fam_domain, struct_target, per_scene, rng,
                time_limit) -> dict:
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    keys = sorted(k for k in cells if k[1] in set(families))
    scenes = sorted({k[0] for k in keys})
    nk, nf = len(keys), len(families)
    fidx = {f: j for j, f in enumerate(families)}
    rows, cols, vals, lo, hi = [], [], [], [], []
    r = 0
    # family-answer sums equal the family count variable
    fa_rows = {}
    for f in families:
        for a in fam_domain[f]:
            fa_rows[(f, a)] = r
            rows.append(r)
            cols.append(nk + fidx[f])
            vals.append(-1.0)
            lo.append(0.0)
            hi.append(0.0)
            r += 1
    for j, (s, f, a) in enumerate(keys):
        rows.append(fa_rows[(f, a)])
        cols.append(j)
        vals.append(1.0)
    for st, need in sorted(struct_target.items()):
        for f in families:
            if fam_struct[f] == st:
                rows.append(r)
                cols.append(nk + fidx[f])
                vals.append(1.0)
        lo.append(need)
        hi.append(need)
        r += 1
    srow = {}
    for s in scenes:
        srow[s] = r
        lo.append(per_scene)
        hi.append(per_scene)
        r += 1
    for j, (s, f, a) in enumerate(keys):
        rows.append(srow[s])
        cols.append(j)
        vals.append(1.0)
    A = coo_matrix((vals, (rows, cols)), shape=(r, nk + nf)).tocsr()
    upper = np.array([len(cells[k]) for k in keys] + [np.inf] * nf, dtype=float)
    cost = np.concatenate([rng.random(nk), np.zeros(nf)])
    res = milp(cost, constraints=LinearConstraint(A, lo, hi), integrality=np.ones(nk + nf),
               bounds=Bounds(np.zeros(nk + nf), upper), options={"time_limit": time_limit})
    if res.x is None:
        raise InsufficientPool({"per-scene quota": (per_scene * len(scenes), 0)})
    x = np.round(res.x).astype(int)
    return {k: int(x[j]) for j, k in enumerate(keys) if x[j] > 0}


def audit(records: list[QuestionRecord], targets: dict[str, int] | None = None,
          max_count: int = 4) -> dict:
    """Histogram checks: uniform answers per family and exact tag counts."""
    fams: dict[str, Counter] = defaultdict(Counter)
    domains = {}
    for r in records:
        f = family(r.ast)
        fams[f][answer_field(r.answer)] += 1
        domains[f] = answer_domain(r.ast.qtype, max_count)
    nonuniform = {f: dict(c) for f, c in fams.items()
                  if len({c.get(a, 0) for a in domains[f]}) != 1}
    tags = Counter(r.tag for r in records)
    mismatched = {}
    if targets is not None:
        for t in set(tags) | set(targets):
            if tags.get(t, 0) != targets.get(t, 0):
                mismatched[t] = (tags.get(t, 0), targets.get(t, 0))
    return {"families": len(fams), "nonuniform": nonuniform, "tag_counts": dict(tags),
            "mismatched": mismatched, "ok": not nonuniform and not mismatched}
