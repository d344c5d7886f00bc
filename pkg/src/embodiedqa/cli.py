"""Command-line interface."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .kb import default_kb
from .priors import build_priors, load_priors, save_priors
from .query import (ParseError, dump_store, execute, format_answer, format_tree, load_store,
                    to_sql, translate_question)
from .query.ir import QueryProgram
from .questions.balance import audit, load_targets
from .questions.dataset import build_dataset, load_dataset, save_dataset
from .scene.layout import generate_layouts, load_layouts
from .scene.world import generate_scene, load_scenes, save_scenes

log = logging.getLogger("embodiedqa")


def _scene_dirs(path: Path) -> list[Path]:
    """A scene directory, or its train/test subdirectories when present."""
    subs = [path / s for s in ("train", "test") if (path / s).is_dir()]
    return subs or [path]


def _load_all_scenes(path) -> dict:
    out = {}
    for d in _scene_dirs(Path(path)):
        out.update(load_scenes(d))
    return out


def _kb(args):
    return default_kb(args.cfg.kb.closure_hops, getattr(args, "kb", None))


def _priors(args, kb):
    if args.priors:
        return load_priors(args.priors)
    scenes_dir = Path(args.scenes)
    train = scenes_dir / "train"
    if not train.is_dir():
        log.warning("no priors given and no train split found; planning uses the knowledge base only")
        return None
    return build_priors(load_scenes(train).values(), args.cfg.relations)


def _planner_overrides(args) -> None:
    upd = {}
    if getattr(args, "full_scan", False):
        upd["full_scan"] = True
    if getattr(args, "stop_threshold", None) is not None:
        upd["stop_threshold"] = args.stop_threshold
    if getattr(args, "rollouts", None) is not None:
        upd["rollouts"] = args.rollouts
    if getattr(args, "agents", None) is not None:
        upd["agents"] = args.agents
    if upd:
        args.cfg = args.cfg.replace(planner=upd)


def _modes(args):
    from .harness.episode import Modes
    return Modes(gt_segm=args.gt_segm, gt_graph=args.gt_graph, full_scan=args.cfg.planner.full_scan,
                 agents=args.cfg.planner.agents)


# subcommands ---------------------------------------------------------------------

def cmd_gen_scenes(args) -> int:
    from .harness.world import layout_index
    per_type = args.layouts_per_type
    layouts = load_layouts(args.layouts) if args.layouts else generate_layouts(args.seed, per_type, args.cfg.scene)
    per_type = max(layout_index(l.layout_id) for l in layouts) + 1
    out = Path(args.out)
    n = {"train": 0, "test": 0}
    for layout in layouts:
        split = "test" if layout_index(layout.layout_id) >= per_type - args.test_layouts else "train"
        scenes = [generate_scene(layout, s, args.cfg.scene, args.cfg.relations)
                  for s in range(args.scenes_per_layout)]
        save_scenes(scenes, out / split)
        n[split] += len(scenes)
    print(f"wrote {n['train']} train and {n['test']} test scenes to {out}")
    return 0


def cmd_gen_dataset(args) -> int:
    kb = _kb(args)
    scenes = _load_all_scenes(args.scenes)
    split = {"keqa": "KEQA", "extension": "KEQAExtension"}[args.split.lower()]
    targets = load_targets(args.targets) if args.targets else None
    result = build_dataset(scenes.values(), kb, split, args.seed, per_scene=args.per_scene,
                           targets=targets, cfg=args.cfg.questions)
    save_dataset(result.records, args.out)
    report = audit(result.records, targets)
    print(f"wrote {len(result.records)} questions over {len(scenes)} scenes to {args.out}")
    print(f"balance audit: {'ok' if report['ok'] else 'FAILED'} ({report['families']} families)")
    return 0


def cmd_build_priors(args) -> int:
    scenes = _load_all_scenes(args.scenes)
    pri = build_priors(scenes.values(), args.cfg.relations)
    save_priors(pri, args.out)
    print(f"wrote {len(pri.counts)} prior triplets from {pri.scene_count} scenes to {args.out}")
    return 0


def cmd_translate(args) -> int:
    kb = _kb(args)
    try:
        p_ans, p_plan = translate_question(args.question, kb)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, prog in (("answering program", p_ans), ("planning program", p_plan)):
        print(f"== {name} ({prog.qtype})")
        print(format_tree(prog.plan))
        print(to_sql(prog.plan))
    if args.out:
        Path(args.out).write_text(json.dumps({"answer": p_ans.to_json(), "plan": p_plan.to_json()}, indent=1),
                                  encoding="utf-8")
    return 0


def cmd_exec(args) -> int:
    store = load_store(args.store)
    data = json.loads(Path(args.program).read_text(encoding="utf-8"))
    if "answer" in data:
        data = data["plan" if args.plan else "answer"]
    prog = QueryProgram.from_json(data)
    warnings: list[str] = []
    result = execute(prog, store, warnings)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if isinstance(result, (set, frozenset)):
        for a, r, b in sorted(result, key=lambda t: (t[0], t[1].value, t[2])):
            print(f"{a}\t{r.value}\t{b}")
    else:
        print(format_answer(result))
    return 0


def cmd_build_store(args) -> int:
    from .query import build_store
    from .scene.world import load_scene
    from .scene.truth import ground_truth_scene_graph
    kb = _kb(args)
    graph = ground_truth_scene_graph(load_scene(args.scene), args.cfg.relations) if args.scene else None
    pri = load_priors(args.priors) if args.priors else None
    store = build_store(graph, kb, pri, args.cfg.planner.min_prior_count,
                        kb_candidates_on=args.cfg.planner.kb_candidates)
    dump_store(store, args.out)
    print(f"wrote store to {args.out}")
    return 0


def _print_trace(episode, start: int) -> None:
    for turn, agent, action, pose, new in episode.trace[start:]:
        vp = episode.smap.viewport(pose)
        print(f"  step t{turn} agent {agent}: {action:<12} x={vp.x:.2f} y={vp.y:.2f} "
              f"heading={pose.heading} tilt={pose.tilt} new={new}")


def _print_result(episode, result, p_plan) -> None:
    nav = episode.navigator
    if nav is not None and nav.region is not None:
        reg = nav.region
        print(f"  region: {int(reg.voxels.sum())} relevant cells, {int(reg.pruned.sum())} pruned, "
              f"{nav.plans} plans")
    if p_plan is not None:
        print("  planning program:")
        print("    " + to_sql(p_plan.plan).replace("\n", "\n    "))
    verdict = "" if result.truth is None else (" (correct)" if result.correct else
                                                f" (expected: {format_answer(result.truth)})")
    print(f"  answer: {format_answer(result.predicted) if result.predicted is not None else '-'}{verdict}")
    print(f"  path length {result.path_length} per agent {list(result.agent_lengths)}"
          f"{' forced stop' if result.forced_stop else ''}")


def cmd_run(args) -> int:
    from .harness.episode import Episode
    kb = _kb(args)
    scenes = _load_all_scenes(args.scenes)
    question = None
    if args.dataset:
        records = load_dataset(args.dataset)
        pick = [r for r in records if r.question_id == args.question_id] if args.question_id else \
            [r for r in records if r.scene_id == (args.scene or r.scene_id)]
        if not pick:
            print("error: no matching question", file=sys.stderr)
            return 2
        question = pick[0]
        scene_id = question.scene_id
    else:
        if not (args.scene and args.question):
            print("error: give --dataset or both --scene and --question", file=sys.stderr)
            return 2
        scene_id = args.scene
    scene = scenes.get(scene_id)
    if scene is None:
        print(f"error: scene {scene_id} not found", file=sys.stderr)
        return 2
    episode = Episode(scene, kb, _priors(args, kb), args.cfg, _modes(args))
    text = question.text if question else args.question
    print(f"scene {scene_id}: {text}")
    result = episode.ask(question if question else text)
    _print_trace(episode, 0)
    _print_result(episode, result, translate_question(text, kb)[1])
    return 0


def cmd_repl(args) -> int:
    from .harness.episode import Episode
    kb = _kb(args)
    scenes = _load_all_scenes(args.scenes)
    scene = scenes.get(args.scene)
    if scene is None:
        print(f"error: scene {args.scene} not found", file=sys.stderr)
        return 2
    episode = Episode(scene, kb, _priors(args, kb), args.cfg, _modes(args))
    print(f"scene {scene.scene_id} ({scene.room_type}); empty line or 'quit' ends the session")
    stream = args.input if args.input is not None else sys.stdin
    total = 0
    for line in stream:
        text = line.strip()
        if not text or text.lower() in ("quit", "exit"):
            break
        start = len(episode.trace)
        try:
            result = episode.ask(text)
        except ParseError as exc:
            print(f"  cannot parse: {exc}")
            continue
        if args.verbose:
            _print_trace(episode, start)
        _print_result(episode, result, None)
        total += result.path_length
        print(f"  cumulative path length {total}")
    return 0


def cmd_eval(args) -> int:
    from .harness.benchmark import priori_report, run_benchmark, save_report
    kb = _kb(args)
    records = load_dataset(args.dataset)
    if args.limit:
        keep = list(dict.fromkeys(r.scene_id for r in records))[: args.limit]
        records = [r for r in records if r.scene_id in set(keep)]
    if args.priori:
        train = load_dataset(args.train_dataset) if args.train_dataset else records
        report = priori_report(train, records)
    else:
        scenes = _load_all_scenes(args.scenes)
        report = run_benchmark(records, scenes, kb, _priors(args, kb), args.cfg, _modes(args), args.turns,
                               label=args.label or _label(args))
    print(report.format_table())
    if args.out:
        save_report([report], args.out)
    return 0


def _label(args) -> str:
    parts = ["agent" if args.cfg.planner.agents == 1 else f"{args.cfg.planner.agents} agents"]
    if args.turns > 1:
        parts.append(f"{args.turns} turns")
    parts += [f for f, on in (("GT graph", args.gt_graph), ("GT segm", args.gt_segm),
                              ("full scan", args.cfg.planner.full_scan)) if on]
    return ", ".join(parts)


def cmd_report(args) -> int:
    from .harness.benchmark import Report, TypeStats, format_reports
    reports = []
    for path in args.reports:
        for d in json.loads(Path(path).read_text(encoding="utf-8")):
            r = Report(d["label"], {q: TypeStats(v["n"], v["correct"], v["mean_length"] * v["n"])
                                    for q, v in d["types"].items()})
            r.cumulative = {e["scene_id"]: 0 for e in d["episodes"]}
            for e in d["episodes"]:
                r.cumulative[e["scene_id"]] += e["path_length"]
            r.episodes = d["episodes"]
            reports.append(r)
    if args.baseline is not None and reports:
        base = reports[args.baseline]
        for r in reports:
            r.with_speedup(base)
    print(format_reports(reports))
    return 0


# parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("-v", "--verbose", action="store_true")

    def planner_flags(p):
        p.add_argument("--agents", type=int, default=None)
        p.add_argument("--full-scan", action="store_true")
        p.add_argument("--stop-threshold", type=float, default=None)
        p.add_argument("--rollouts", type=int, default=None)
        p.add_argument("--gt-segm", action="store_true", help="noiseless perception")
        p.add_argument("--gt-graph", action="store_true", help="answer from the true scene graph")
        p.add_argument("--priors", default=None, help="priors TSV (default: built from <scenes>/train)")
        p.add_argument("--kb", default=None, help="knowledge-base triplet file")

    parser = argparse.ArgumentParser(prog="embodiedqa", description="Knowledge-aware embodied question answering")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenes", parents=[common], help="generate scenes")
    p.add_argument("--layouts", default=None, help="layout library file (default: generated)")
    p.add_argument("--layouts-per-type", type=int, default=6)
    p.add_argument("--scenes-per-layout", type=int, default=10)
    p.add_argument("--test-layouts", type=int, default=1, help="layouts per room type held out for test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("gen-dataset", parents=[common], help="generate a balanced question split")
    p.add_argument("--scenes", required=True)
    p.add_argument("--kb", default=None)
    p.add_argument("--split", default="keqa", choices=["keqa", "extension"])
    p.add_argument("--targets", default=None, help="per-tag target counts (JSON)")
    p.add_argument("--per-scene", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("build-priors", parents=[common], help="harvest relation priors from scenes")
    p.add_argument("--scenes", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_priors)

    p = sub.add_parser("translate", parents=[common], help="print the programs for a question")
    p.add_argument("--question", required=True)
    p.add_argument("--kb", default=None)
    p.add_argument("--out", default=None, help="write both programs as JSON")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("build-store", parents=[common], help="dump a relational store")
    p.add_argument("--scene", default=None, help="scene file (ground-truth graph)")
    p.add_argument("--priors", default=None)
    p.add_argument("--kb", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_store)

    p = sub.add_parser("exec", parents=[common], help="run a program against a store dump")
    p.add_argument("--store", required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--plan", action="store_true", help="run the planning program of a translate dump")
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("run", parents=[common], help="one verbose episode")
    p.add_argument("--scenes", required=True)
    p.add_argument("--dataset", default=None)
    p.add_argument("--question-id", default=None)
    p.add_argument("--scene", default=None)
    p.add_argument("--question", default=None)
    planner_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("repl", parents=[common], help="ask questions in turn over one episode")
    p.add_argument("--scenes", required=True)
    p.add_argument("--scene", required=True)
    planner_flags(p)
    p.set_defaults(func=cmd_repl, input=None)

    p = sub.add_parser("eval", parents=[common], help="benchmark over a dataset")
    p.add_argument("--scenes", default=None)
    p.add_argument("--dataset", required=True)
    p.add_argument("--turns", type=int, default=1)
    p.add_argument("--limit", type=int, default=None, help="first N scenes only")
    p.add_argument("--priori", action="store_true", help="answer-prior baseline")
    p.add_argument("--train-dataset", default=None, help="answer distribution for --priori")
    p.add_argument("--label", default=None)
    p.add_argument("--out", default=None, help="JSON report")
    planner_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", parents=[common], help="tabulate JSON reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--baseline", type=int, default=None, help="index of the report speedups are relative to")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.cfg = load_config(args.config)
    if args.seed is not None:
        args.cfg = args.cfg.replace(seed=args.seed)
    args.seed = args.cfg.seed
    _planner_overrides(args)
    if args.command == "eval" and not args.priori and not args.scenes:
        print("error: eval needs --scenes unless --priori", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
