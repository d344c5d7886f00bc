from __future__ import annotations

import dataclasses
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from embodiedqa.config import Config, NoiseConfig
from embodiedqa.harness.benchmark import (Report, TypeStats, answer_distribution, format_reports, load_report_rows,
                                          priori_baseline, priori_report, run_benchmark, save_report)
from embodiedqa.harness.episode import Episode, EpisodeResult, Modes, run_episode
from embodiedqa.questions.ast import QTYPES, Bool, Count, Enumeration


def _fast(cfg: Config, **planner) -> Config:
    return dataclasses.replace(cfg, planner=dataclasses.replace(cfg.planner, rollouts=20, **planner))


@pytest.fixture(scope="module")
def sample(world, test_dataset):
    """First question of four test scenes plus their scene table."""
    scenes = world.scenes()
    firsts = {}
    for r in test_dataset.records:
        firsts.setdefault(r.scene_id, r)
    picked = list(firsts.values())[:4]
    return picked, scenes


def test_priori_baseline_on_balanced_split(train_dataset, test_dataset):
    report = priori_report(train_dataset.records, test_dataset.records)
    acc = {q: s.accuracy for q, s in report.rows.items()}
    assert acc["Existence"] == pytest.approx(50.0)
    assert acc["Counting"] == pytest.approx(20.0)
    assert acc["Comparing"] == pytest.approx(50.0)


def test_priori_ties_break_lexicographically():
    assert priori_baseline("Existence", Counter({Bool(True): 3, Bool(False): 3})) == Bool(False)
    assert priori_baseline("Counting", Counter({Count(2): 5, Count(1): 5, Count(0): 4})) == Count(1)
    assert priori_baseline("Counting", Counter()) is None


def test_enumerating_guess_is_the_modal_answer(train_dataset):
    dist = answer_distribution(train_dataset.records)["Enumerating"]
    guess = priori_baseline("Enumerating", dist)
    assert dist[guess] == max(dist.values())


answers = st.sampled_from([Bool(True), Bool(False), Count(0), Count(3), Enumeration.of({"Apple": 1})])
results = st.lists(st.tuples(st.sampled_from(QTYPES), answers, answers, st.integers(0, 300)), max_size=40)


def _result(i, q, pred, truth, length, scene="s"):
    return EpisodeResult(f"q{i}", scene, q, pred, truth, length)


@settings(max_examples=100, deadline=None)
@given(results, results)
def test_report_accounting(a, b):
    ra, rb = Report("a"), Report("b")
    for i, row in enumerate(a):
        ra.add(_result(i, *row))
    for i, row in enumerate(b):
        rb.add(_result(i, *row, scene="t"))
    both = ra.merge(rb)
    assert sum(s.correct for s in both.rows.values()) == both.overall.correct
    assert both.overall.n == len(a) + len(b)
    if both.overall.n:
        weighted = sum(s.accuracy * s.n for s in both.rows.values()) / both.overall.n
        assert both.accuracy == pytest.approx(weighted)
    assert both.overall.correct == ra.overall.correct + rb.overall.correct


def test_correctness_compares_formatted_answers():
    assert _result(0, "Counting", Count(2), Count(2), 0).correct
    assert not _result(0, "Counting", Count(2), Count(3), 0).correct
    assert not _result(0, "Counting", None, Count(3), 0).correct


def test_speedup_is_a_length_ratio():
    base, fast = Report("one"), Report("two")
    base.add(_result(0, "Counting", Count(1), Count(1), 90))
    fast.add(_result(0, "Counting", Count(1), Count(1), 30))
    assert fast.with_speedup(base).speedup == pytest.approx(3.0)
    assert "Speedup" in format_reports([base, fast])


def test_empty_dataset_gives_empty_report(kb, train_priors, tmp_path):
    report = run_benchmark([], {}, kb, train_priors)
    assert report.overall.n == 0 and report.accuracy == 0.0
    assert report.format_table()
    save_report([report], tmp_path / "r.json")
    assert load_report_rows(tmp_path / "r.json")[0]["overall"]["n"] == 0


def test_missing_scene_is_skipped_and_noted(kb, train_priors, sample):
    questions, _ = sample
    report = run_benchmark(questions[:1], {}, kb, train_priors)
    assert report.overall.n == 0
    assert report.skipped and "not found" in report.skipped[0][1]
    assert "skipped" in report.format_table()


def test_ground_truth_graph_needs_no_actions(kb, train_priors, sample, cfg):
    questions, scenes = sample
    for q in questions:
        res = run_episode(scenes[q.scene_id], q, kb, train_priors, cfg, Modes(gt_graph=True))
        assert res.path_length == 0 and res.correct


def test_ground_truth_segmentation_turns_noise_off(kb, train_priors, sample, cfg):
    questions, scenes = sample
    ep = Episode(scenes[questions[0].scene_id], kb, train_priors, cfg, Modes(gt_segm=True))
    assert ep.noise == NoiseConfig.off()
    assert Episode(scenes[questions[0].scene_id], kb, train_priors, cfg).noise == cfg.noise


def test_episodes_are_deterministic(kb, train_priors, sample, cfg):
    questions, scenes = sample
    q = questions[0]
    fast = _fast(cfg)
    a = Episode(scenes[q.scene_id], kb, train_priors, fast)
    b = Episode(scenes[q.scene_id], kb, train_priors, fast)
    assert a.ask(q) == b.ask(q)
    assert a.trace == b.trace


def test_step_budget_forces_a_stop(kb, train_priors, sample, cfg):
    questions, scenes = sample
    q = questions[0]
    res = run_episode(scenes[q.scene_id], q, kb, train_priors, _fast(cfg, step_budget=3), Modes(full_scan=True))
    assert res.forced_stop and res.path_length == 3
    assert res.predicted is not None


def test_repeated_question_needs_no_movement(kb, train_priors, sample, cfg):
    questions, scenes = sample
    q = questions[1]
    ep = Episode(scenes[q.scene_id], kb, train_priors, _fast(cfg, stop_threshold=0.0), Modes(gt_segm=True))
    first = ep.ask(q)
    second = ep.ask(q)
    assert first.path_length > 0 and second.path_length == 0
    assert second.predicted == first.predicted


def test_episode_trace_records_each_step(kb, train_priors, sample, cfg):
    questions, scenes = sample
    q = questions[2]
    ep = Episode(scenes[q.scene_id], kb, train_priors, _fast(cfg), Modes(agents=2))
    res = ep.ask(q)
    assert len(ep.trace) == sum(res.agent_lengths)
    assert {agent for _, agent, *_ in ep.trace} <= {0, 1}
    assert res.path_length == max(res.agent_lengths)
    assert all(new >= 0 for *_, new in ep.trace)


def test_ablation_ordering(kb, train_priors, sample, cfg):
    questions, scenes = sample
    fast = _fast(cfg)
    acc = {}
    for name, modes in (("graph", Modes(gt_graph=True)), ("segm", Modes(gt_segm=True)), ("default", Modes())):
        acc[name] = run_benchmark(questions, scenes, kb, train_priors, fast, modes).accuracy
    assert acc["graph"] >= acc["segm"] >= acc["default"]
