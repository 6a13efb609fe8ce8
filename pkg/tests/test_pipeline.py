import json

import pytest

from gazehrl.cli import main
from gazehrl.pipeline import (
    ConfigError,
    StageFailed,
    emit_report,
    parse_config,
    read_manifest,
    run_pipeline,
)
from gazehrl.synthetic import make_dataset, write_dataset

SMALL = {"budget": "2000", "k": "3", "epochs": "5"}


@pytest.fixture(scope="module")
def logs_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("logs")
    write_dataset(make_dataset(), d)
    return d


def cfg_for(logs, out, **extra):
    return parse_config("", {"logs_dir": str(logs), "out_dir": str(out), **SMALL, **extra})


def test_parse_config_text_and_overrides():
    cfg = parse_config("threshold = 0.5  # comment\nagent_box = 6x18\npng = yes\nalpha = 1\n", {"seed": 4})
    assert (cfg.threshold, cfg.agent_box, cfg.png, cfg.alpha, cfg.seed) == (0.5, (6, 18), True, 1.0, 4)
    assert cfg.saliency_config.sigma == 10.0
    assert cfg.reward_config.alpha == 1.0 and cfg.reward_config.tau == 0.001


@pytest.mark.parametrize("text", ["nonsense", "bogus = 1", "threshold = 2", "variant = nope", "k = x", "png = maybe"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_logs_dir_fails_in_ingest(tmp_path):
    with pytest.raises(StageFailed) as exc:
        run_pipeline(cfg_for(tmp_path / "nope", tmp_path / "out"))
    assert exc.value.stage == "ingest"


def test_pipeline_artifacts_and_rerun_skips(logs_dir, tmp_path):
    cfg = cfg_for(logs_dir, tmp_path / "out")
    first = run_pipeline(cfg)
    assert set(first["stages"].values()) == {"ran"}
    files = first["files"]
    for name in ("subgoals.json", "plan.txt", "stats.csv", "features.csv", "folds.csv", "learned_at.csv"):
        assert name in files
    assert sum(f.startswith("saliency/") for f in files) == 3
    second = run_pipeline(cfg)
    assert set(second["stages"].values()) == {"skipped"}
    assert second["files"] == first["files"]
    assert read_manifest(tmp_path / "out") == second

    report = emit_report(first)
    plan = (tmp_path / "out" / "plan.txt").read_text().split()
    assert f"unique sub-goals: {len(set(plan))}" in report
    assert "unique sub-goals: 7" in report


def test_force_reruns(logs_dir, tmp_path):
    cfg = cfg_for(logs_dir, tmp_path / "out")
    run_pipeline(cfg, stages=["ingest"])
    again = run_pipeline(cfg, force=True, stages=["ingest"])
    assert again["stages"] == {"ingest": "ran"}
    with pytest.raises(ConfigError):
        run_pipeline(cfg, stages=["nope"])


def test_report_empty_and_stats_only(tmp_path):
    assert emit_report({"files": {}}) == "no artifacts\n"
    (tmp_path / "stats.csv").write_text("step,plan_step,trailing\n")
    text = emit_report({"root": str(tmp_path), "files": {"stats.csv": "x"}})
    assert "sub-goal" not in text and "training stats" in text


def test_cli_run_and_report(logs_dir, tmp_path, capsys):
    out = tmp_path / "out"
    argv = ["run", "--set", f"logs_dir={logs_dir}", "--set", f"out_dir={out}"]
    for k, v in SMALL.items():
        argv += ["--set", f"{k}={v}"]
    assert main(argv) == 0
    assert "unique sub-goals: 7" in capsys.readouterr().out
    assert main(["report", str(out)]) == 0
    assert "plan (12 steps)" in capsys.readouterr().out
    assert json.loads((out / "manifest.json").read_text())["files"]


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "--set", f"logs_dir={tmp_path / 'missing'}", "--set", f"out_dir={tmp_path / 'o'}"]) == 3
    assert "stage 'ingest' failed" in capsys.readouterr().err
    assert main(["run", "--set", "threshold=5"]) == 2
    assert main(["run", "--set", "novalue"]) == 2


def test_cli_stepwise_commands(tmp_path, capsys):
    logs = tmp_path / "logs"
    assert main(["gen-synthetic", "--out", str(logs)]) == 0
    paths = sorted(str(p) for p in logs.glob("*.log"))
    assert len(paths) == 3
    assert main(["events", paths[0], "--out", str(tmp_path / "ev.csv")]) == 0
    assert (tmp_path / "ev.csv").read_text().startswith("kind,")
    assert main(["saliency", *paths, "--out", str(tmp_path / "sal")]) == 0
    assert len(list((tmp_path / "sal").glob("*.pgm"))) == 3
    sg = tmp_path / "subgoals.json"
    assert main(["extract", *paths, "--out", str(sg)]) == 0
    assert len(json.loads(sg.read_text())) == 11
    plan = tmp_path / "plan.txt"
    assert main(["match", *paths, "--subgoals", str(sg), "--out", str(plan)]) == 0
    assert len(plan.read_text().split()) == 12
    feats = tmp_path / "features.csv"
    assert main(["features", *paths, "--subgoals", str(sg), "--plan", str(plan), "--out", str(feats)]) == 0
    assert main(["train-intent", "--features", str(feats), "--k", "3", "--out", str(tmp_path / "folds.csv")]) == 0
    assert main(["simulate", "--actions", "0 0 3"]) == 0
    assert main(["train-hrl", "--budget", "1000", "--out", str(tmp_path / "hrl")]) == 0
    assert (tmp_path / "hrl" / "stats.csv").exists()
    capsys.readouterr()
