from __future__ import annotations

import json

import pytest

from embodiedqa.cli import main

QUESTION = "Is there a basketball near a bed in the room?"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["gen-scenes", "--out", str(d / "scenes"), "--layouts-per-type", "3",
                 "--scenes-per-layout", "2", "--seed", "0"]) == 0
    return d


def test_gen_scenes_writes_train_and_test(workdir):
    train = list((workdir / "scenes" / "train").glob("*.json"))
    test = list((workdir / "scenes" / "test").glob("*.json"))
    assert len(train) == 16 and len(test) == 8


def test_gen_dataset_and_eval(workdir, capsys):
    out = workdir / "test.jsonl"
    assert main(["gen-dataset", "--scenes", str(workdir / "scenes" / "test"), "--per-scene", "10",
                 "--out", str(out), "--seed", "1"]) == 0
    assert "ok" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert len(lines) == 80
    report = workdir / "r.json"
    assert main(["eval", "--scenes", str(workdir / "scenes"), "--dataset", str(out), "--limit", "1",
                 "--gt-graph", "--out", str(report)]) == 0
    assert "Overall" in capsys.readouterr().out
    assert main(["report", str(report)]) == 0
    assert "Method" in capsys.readouterr().out


def test_translate_store_and_exec(workdir, capsys):
    prog = workdir / "prog.json"
    assert main(["translate", "--question", QUESTION, "--out", str(prog)]) == 0
    printed = capsys.readouterr().out
    assert "SELECT" in printed or "Scan" in printed
    assert set(json.loads(prog.read_text())) == {"answer", "plan"}
    priors = workdir / "priors.tsv"
    assert main(["build-priors", "--scenes", str(workdir / "scenes" / "train"), "--out", str(priors)]) == 0
    store = workdir / "store.json"
    assert main(["build-store", "--priors", str(priors), "--out", str(store)]) == 0
    assert main(["exec", "--store", str(store), "--program", str(prog), "--plan"]) == 0
    assert "Near" in capsys.readouterr().out


def test_run_single_episode(workdir, capsys):
    scene = sorted((workdir / "scenes" / "test").glob("Bedroom*.json"))[0].stem
    assert main(["run", "--scenes", str(workdir / "scenes"), "--scene", scene, "--question", QUESTION,
                 "--rollouts", "10", "--gt-segm"]) == 0
    out = capsys.readouterr().out
    assert "Yes" in out or "No" in out


def test_unknown_word_exits_cleanly(capsys):
    assert main(["translate", "--question", "Is there a zorble in the room?"]) != 0
    assert "zorble" in capsys.readouterr().err
