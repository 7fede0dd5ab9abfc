import json
import os

import pytest

from precog.cli import main
from precog.pipeline import read_scores

from conftest import SPECIALS, write_vocab

WORDS = ["the", "a", "to", "cat", "dog", "bird", "runs", "sits", "on", "in"]


@pytest.fixture
def workspace(tmp_path):
    """A config file with one small task, a vocabulary, and a mock corpus."""
    vocab_path = write_vocab(tmp_path / "vocab.txt", SPECIALS + WORDS)
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("the a to the a the\n" + "cat runs on dog\n" * 3)
    dataset = tmp_path / "data.jsonl"
    rows = [
        {"id": "e0", "a": "the cat runs", "label": "pos"},
        {"id": "e1", "a": "a dog sits on the cat", "label": "neg"},
        {"id": "e2", "a": "bird bird bird", "b": "the a to", "label": "pos"},
        {"id": "e3", "a": "the a to the", "label": "neg"},
        {"id": "e4", "a": "dog in the a to", "label": "pos"},
        {"id": "e5", "a": "cat zonk zonk the a to", "label": "neg"},
    ]
    dataset.write_text("".join(json.dumps(r) + "\n" for r in rows))
    predictions = tmp_path / "preds.jsonl"
    labels = ["pos", "neg", "neg", "neg", "pos", "pos"]
    predictions.write_text("".join(
        json.dumps({"id": f"e{i}", "label": label}) + "\n"
        for i, label in enumerate(labels)))
    config = {
        "vocabulary": vocab_path,
        "mock_corpus": str(corpus),
        "k": 3,
        "bin_width": 20,
        "out_dir": str(tmp_path / "out"),
        "jobs": 2,
        "tasks": {
            "demo": {
                "dataset": str(dataset),
                "format": "jsonl",
                "predictions": {"": str(predictions)},
            }
        },
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    return {"dir": tmp_path, "config": str(config_path),
            "out": str(tmp_path / "out"), "raw": config,
            "config_path": config_path}


def test_score_writes_one_record_per_example_measure(workspace):
    assert main(["score", "--config", workspace["config"]]) == 0
    records = read_scores(os.path.join(workspace["out"], "scores.jsonl"))
    assert len(records) == 18  # 6 examples x 3 measures
    by_measure = {}
    for r in records:
        by_measure.setdefault(r["measure"], []).append(r)
    assert set(by_measure) == {"precog", "lexcov", "length"}
    for r in by_measure["precog"]:
        assert r["k"] == 3
        assert 0.0 <= r["value"] <= 1.0
        assert len(r["detail"]) == r["t_wordpiece"]
    manifest = json.loads(
        open(os.path.join(workspace["out"], "score_manifest.json")).read())
    assert manifest["backend"]["kind"] == "mock"
    assert manifest["examples_per_task"] == {"demo": 6}
    assert manifest["failed_examples"] == []


def test_flag_overrides_config(workspace):
    assert main(["score", "--config", workspace["config"], "--k", "1",
                 "--measures", "precog"]) == 0
    records = read_scores(os.path.join(workspace["out"], "scores.jsonl"))
    assert len(records) == 6
    assert all(r["k"] == 1 for r in records)


def test_analyze_produces_reports(workspace):
    main(["score", "--config", workspace["config"]])
    assert main(["analyze", "--config", workspace["config"]]) == 0
    out = workspace["out"]
    for name in ("bins.csv", "intervals.csv", "correlation.json",
                 "coverage.csv", "analyze_manifest.json"):
        assert os.path.exists(os.path.join(out, name)), name
    with open(os.path.join(out, "intervals.csv")) as fh:
        header_comment = fh.readline()
        columns = fh.readline().strip().split(",")
    assert header_comment.startswith("# ")
    assert "manifest=analyze_manifest.json" in header_comment
    assert columns == ["task", "measure", "interval", "samples", "accuracy"]


def test_analyze_without_scores_fails(workspace):
    assert main(["analyze", "--config", workspace["config"]]) == 1


def test_empty_join_fails_with_diagnostic(workspace, caplog):
    main(["score", "--config", workspace["config"]])
    ghost = workspace["dir"] / "ghost.jsonl"
    ghost.write_text("")
    raw = dict(workspace["raw"])
    raw["tasks"] = {"demo": dict(raw["tasks"]["demo"],
                                 predictions={"": str(ghost)})}
    workspace["config_path"].write_text(json.dumps(raw))
    assert main(["analyze", "--config", workspace["config"]]) == 1
    assert "empty intersection" in caplog.text


def test_config_errors_exit_two(workspace, tmp_path):
    assert main(["score", "--config", workspace["config"], "--k", "0"]) == 2
    assert main(["score", "--config", workspace["config"],
                 "--bin-width", "33"]) == 2
    assert main(["score", "--config", workspace["config"],
                 "--measures", "bogus"]) == 2
    missing = tmp_path / "missing.json"
    assert main(["score", "--config", str(missing)]) == 2
    assert main(["score"]) == 2  # no tasks at all


def test_rerun_with_warm_cache_is_identical(workspace):
    cache = str(workspace["dir"] / "cache.jsonl")
    args = ["score", "--config", workspace["config"], "--cache", cache]
    assert main(args) == 0
    first = open(os.path.join(workspace["out"], "scores.jsonl"), "rb").read()
    assert main(args) == 0
    second = open(os.path.join(workspace["out"], "scores.jsonl"), "rb").read()
    assert first == second
    assert os.path.exists(cache)


def test_cache_stats_and_verify(workspace, capsys):
    cache = str(workspace["dir"] / "cache.jsonl")
    main(["score", "--config", workspace["config"], "--cache", cache])
    assert main(["cache", "stats", "--cache", cache]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["entries"] > 0
    assert len(stats["fingerprints"]) == 1
    assert main(["cache", "verify", "--cache", cache]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] and report["entries"] == stats["entries"]

    with open(cache, "a") as fh:
        fh.write("not json\n")
        fh.write("also not json\n")
    assert main(["cache", "verify", "--cache", cache]) == 1
    report = json.loads(capsys.readouterr().out)
    assert len(report["malformed_lines"]) >= 1


def test_cache_requires_location(tmp_path, monkeypatch):
    monkeypatch.delenv("PRECOG_CACHE_DIR", raising=False)
    assert main(["cache", "stats"]) == 2


def test_cache_dir_env_variable(workspace, monkeypatch, capsys):
    cache_dir = workspace["dir"] / "cachedir"
    cache_dir.mkdir()
    monkeypatch.setenv("PRECOG_CACHE_DIR", str(cache_dir))
    assert main(["score", "--config", workspace["config"]]) == 0
    assert (cache_dir / "predictions_cache.jsonl").exists()
    assert main(["cache", "stats"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["entries"] > 0


def test_scoring_deterministic_across_job_counts(workspace):
    main(["score", "--config", workspace["config"], "--jobs", "1",
          "--out", str(workspace["dir"] / "o1")])
    main(["score", "--config", workspace["config"], "--jobs", "8",
          "--out", str(workspace["dir"] / "o8")])
    a = open(workspace["dir"] / "o1" / "scores.jsonl", "rb").read()
    b = open(workspace["dir"] / "o8" / "scores.jsonl", "rb").read()
    assert a == b


def test_lexcov_set_semantics_flag(workspace):
    main(["score", "--config", workspace["config"], "--measures", "lexcov"])
    base = {r["eid"]: r["value"] for r in
            read_scores(os.path.join(workspace["out"], "scores.jsonl"))}
    main(["score", "--config", workspace["config"], "--measures", "lexcov",
          "--lexcov-set-semantics"])
    alt = {r["eid"]: r["value"] for r in
           read_scores(os.path.join(workspace["out"], "scores.jsonl"))}
    # e5 repeats "cat": occurrence and set semantics disagree there.
    assert base["e5"] != alt["e5"]
    assert base["e0"] == alt["e0"]


def test_selftest_via_cli(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 11
    assert "selftest: 11/11 checks passed" in out


def test_selftest_corrupted_vocab_isolated(tmp_path, capsys):
    import shutil

    from precog.selftest import bundled_data_dir

    data = tmp_path / "data"
    shutil.copytree(bundled_data_dir(), data)
    (data / "selftest_vocab.txt").write_text("[PAD]\n[UNK]\n")
    assert main(["selftest", "--data-dir", str(data)]) == 1
    out = capsys.readouterr().out
    assert "FAIL vocabulary-load" in out
    # Fault isolation: every other check still reports a line.
    assert len([l for l in out.splitlines()
                if l.startswith(("PASS", "FAIL"))]) == 11


def test_selftest_output_is_reproducible(capsys):
    main(["selftest"])
    first = capsys.readouterr().out
    main(["selftest"])
    second = capsys.readouterr().out
    assert first == second
