"""Command-line entry point (``gazehrl <subcommand>``)."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import intent, saliency, subgoals
from .env import RoomEnv, annotate_goals, expert_rollout, load_layout, load_room1, room1_goals, room1_plan
from .events import detect_events, events_to_csv
from .hrl import VARIANTS, run_experiment
from .ingest import filter_by_room, read_episode_log, validate_log, write_episode_log
from .pipeline import (
    ConfigError,
    StageFailed,
    emit_report,
    learned_to_csv,
    load_config,
    read_manifest,
    run_pipeline,
    stats_to_csv,
)
from .rewards import RewardConfig
from .synthetic import make_dataset, write_dataset


def _agent_box(text: str) -> tuple[int, int]:
    w, sep, h = text.lower().partition("x")
    if not sep:
        raise argparse.ArgumentTypeError("expected WxH, e.g. 8x20")
    return int(w), int(h)


def _logs(paths):
    out = []
    for p in map(Path, paths):
        out += sorted(p.glob("*.log")) if p.is_dir() else [p]
    return [read_episode_log(p) for p in out]


def _saliency_cfg(a) -> saliency.SaliencyConfig:
    return saliency.SaliencyConfig(a.sigma, a.threshold, a.px_per_degree)


def cmd_ingest(a) -> int:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    print("episode,frames,gaze_samples,dropped_samples,violations,frames_without_gaze")
    for log in _logs(a.logs):
        log = filter_by_room(log, a.room, a.level)
        r = validate_log(log)
        print(f"{log.episode_id},{r.frames},{r.gaze_samples},{r.dropped_samples},{r.violations},{r.frames_without_gaze}")
        write_episode_log(log, out / f"{log.episode_id}.log")
    return 0


def cmd_events(a) -> int:
    (log,) = _logs([a.log])
    ev = detect_events(log.gaze_samples(), a.velocity, a.px_per_degree, a.min_fixation)
    text = events_to_csv(ev)
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_saliency(a) -> int:
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _saliency_cfg(a)
    for log in _logs(a.logs):
        m = saliency.saliency_map(log, cfg)
        saliency.write_pgm(m, out / f"{log.episode_id}.pgm")
        if a.png:
            saliency.write_png(m, out / f"{log.episode_id}.png")
        print(f"{log.episode_id}: {len(saliency.threshold_mask(m, cfg.threshold))} cells above {cfg.threshold}")
    return 0


def cmd_extract(a) -> int:
    cfg = _saliency_cfg(a)
    sets = []
    for log in _logs(a.logs):
        mask = saliency.threshold_mask(saliency.saliency_map(log, cfg), cfg.threshold)
        sets.append(subgoals.extract_subgoals(mask, a.agent_box, (log.frame_width, log.frame_height), a.iou))
    merged = subgoals.merge_across_episodes(sets, a.iou)
    subgoals.write_subgoals(merged, a.out)
    print(f"{len(merged)} sub-goal proposals -> {a.out}")
    return 0


def cmd_match(a) -> int:
    goals = subgoals.read_subgoals(a.subgoals)
    logs = _logs(a.logs)
    orders = [subgoals.match_trajectory(log, goals) for log in logs]
    for log, o in zip(logs, orders):
        print(log.episode_id, *o)
    plan = subgoals.majority_vote(orders)
    subgoals.write_plan(plan, a.out)
    print(f"plan: {' '.join(map(str, plan.steps))} ({len(plan.unique_goals)} unique sub-goals)")
    return 0


def cmd_features(a) -> int:
    goals = subgoals.read_subgoals(a.subgoals)
    plan = subgoals.read_plan(a.plan)
    samples = [s for log in _logs(a.logs) for s in intent.build_samples(log, goals, plan)]
    Path(a.out).write_text(intent.samples_to_csv(samples))
    print(f"{len(samples)} samples -> {a.out}")
    return 0


def cmd_train_intent(a) -> int:
    samples = intent.samples_from_csv(Path(a.features).read_text())
    res = intent.cross_validate(samples, k=a.k, seed=a.seed, reg=a.reg, epochs=a.epochs)
    rows = ["fold,accuracy"] + [f"{i},{v:.6f}" for i, v in enumerate(res.folds)] + [f"mean,{res.mean:.6f}"]
    text = "\n".join(rows) + "\n"
    if a.out:
        Path(a.out).write_text(text)
    sys.stdout.write(text)
    if a.model:
        intent.write_model(intent.train(samples, reg=a.reg, epochs=a.epochs, seed=a.seed), a.model)
    return 0


def _layout(path):
    return load_layout(Path(path).read_text()) if path else load_room1()


def _goals_and_plan(a, layout):
    if a.subgoals:
        goals = annotate_goals(layout, [subgoals.box_to_cells(b) for b in subgoals.read_subgoals(a.subgoals)])
    else:
        goals = room1_goals(layout)
    plan = subgoals.read_plan(a.plan) if a.plan else room1_plan()
    return goals, plan


def cmd_simulate(a) -> int:
    layout = _layout(a.layout)
    env = RoomEnv(layout)
    state = env.reset()
    if a.actions is not None:
        print(layout.render(state))
        for tok in a.actions.split():
            state, ev = env.step(state, int(tok))
            print(f"action {tok}: agent={state.agent} key={state.has_key} alive={state.alive} door={state.door_open}")
            if state.terminal:
                break
        print(layout.render(state))
        return 0
    goals, plan = _goals_and_plan(a, layout)
    states, actions, marks = expert_rollout(env, goals, plan)
    print(layout.render(states[0]))
    print(f"expert route: {len(actions)} actions")
    print("actions:", *actions)
    print("plan steps completed after action:", *marks)
    return 0


def cmd_train_hrl(a) -> int:
    layout = _layout(a.layout)
    goals, plan = _goals_and_plan(a, layout)
    cfg = VARIANTS[a.variant]
    over = {k: getattr(a, k) for k in ("alpha", "beta", "gamma", "tau") if getattr(a, k) is not None}
    if over:
        cfg = RewardConfig(**{**cfg.__dict__, **over})
    stats = run_experiment(a.variant, RoomEnv(layout), goals, plan, a.budget, seed=a.seed, cfg=cfg)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "stats.csv").write_text(stats_to_csv(stats))
    summary = learned_to_csv(stats, plan)
    (out / "learned_at.csv").write_text(summary)
    sys.stdout.write(summary)
    print(f"status: {stats.status}; env steps: {stats.total_steps}; episodes: {stats.episodes}")
    return 0


def cmd_report(a) -> int:
    sys.stdout.write(emit_report(read_manifest(a.manifest)))
    return 0


def cmd_gen_synthetic(a) -> int:
    paths = write_dataset(make_dataset(seed=a.seed), a.out)
    for p in paths:
        print(p)
    return 0


def cmd_run(a) -> int:
    overrides = {}
    for item in a.set or []:
        k, sep, v = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[k] = v
    cfg = load_config(a.config, overrides)
    manifest = run_pipeline(cfg, force=a.force, stages=a.stages)
    sys.stdout.write(emit_report(manifest))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gazehrl", description="Gaze-derived sub-goals for hierarchical RL.")
    sub = p.add_subparsers(dest="command", required=True)

    def sal(sp):
        sp.add_argument("--sigma", type=float, default=None, help="blur std dev in px (default: one visual degree)")
        sp.add_argument("--threshold", type=float, default=saliency.DEFAULT_THRESHOLD)
        sp.add_argument("--px-per-degree", type=float, default=saliency.PX_PER_DEGREE)

    sp = sub.add_parser("ingest", help="filter logs to one room and report validation counts")
    sp.add_argument("logs", nargs="+")
    sp.add_argument("--out", required=True)
    sp.add_argument("--room", type=int, default=1)
    sp.add_argument("--level", type=int, default=0)
    sp.set_defaults(fn=cmd_ingest)

    sp = sub.add_parser("events", help="fixation/saccade events of one log as CSV")
    sp.add_argument("log")
    sp.add_argument("--out")
    sp.add_argument("--velocity", type=float, default=30.0)
    sp.add_argument("--px-per-degree", type=float, default=10.0)
    sp.add_argument("--min-fixation", type=float, default=100.0)
    sp.set_defaults(fn=cmd_events)

    sp = sub.add_parser("saliency", help="per-episode heatmaps (PGM, optional PNG)")
    sp.add_argument("logs", nargs="+")
    sp.add_argument("--out", required=True)
    sp.add_argument("--png", action="store_true")
    sal(sp)
    sp.set_defaults(fn=cmd_saliency)

    sp = sub.add_parser("extract", help="sub-goal boxes merged across episodes")
    sp.add_argument("logs", nargs="+")
    sp.add_argument("--out", default="subgoals.json")
    sp.add_argument("--iou", type=float, default=subgoals.DEFAULT_IOU)
    sp.add_argument("--agent-box", type=_agent_box, default=subgoals.AGENT_BOX)
    sal(sp)
    sp.set_defaults(fn=cmd_extract)

    sp = sub.add_parser("match", help="visit orders and the majority-vote plan")
    sp.add_argument("logs", nargs="+")
    sp.add_argument("--subgoals", required=True)
    sp.add_argument("--out", default="plan.txt")
    sp.set_defaults(fn=cmd_match)

    sp = sub.add_parser("features", help="intent features per plan step")
    sp.add_argument("logs", nargs="+")
    sp.add_argument("--subgoals", required=True)
    sp.add_argument("--plan", required=True)
    sp.add_argument("--out", default="features.csv")
    sp.set_defaults(fn=cmd_features)

    sp = sub.add_parser("train-intent", help="k-fold CV of the intent classifier")
    sp.add_argument("--features", default="features.csv")
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reg", type=float, default=intent.DEFAULT_REG)
    sp.add_argument("--epochs", type=int, default=intent.DEFAULT_EPOCHS)
    sp.add_argument("--out", help="per-fold accuracy CSV")
    sp.add_argument("--model", help="write a model trained on all samples")
    sp.set_defaults(fn=cmd_train_intent)

    def room(sp):
        sp.add_argument("--layout", help="layout file (default: bundled room 1)")
        sp.add_argument("--subgoals", help="sub-goal boxes in pixels (default: bundled room-1 goals)")
        sp.add_argument("--plan", help="plan file (default: bundled room-1 plan)")

    sp = sub.add_parser("simulate", help="render the room and the expert route, or step given actions")
    room(sp)
    sp.add_argument("--actions", help="space-separated action ids to execute from spawn")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("train-hrl", help="train one variant and write stats.csv")
    room(sp)
    sp.add_argument("--variant", choices=sorted(VARIANTS), default="fullmodel")
    sp.add_argument("--budget", type=int, default=300_000)
    sp.add_argument("--seed", type=int, default=0)
    for w in ("alpha", "beta", "gamma", "tau"):
        sp.add_argument(f"--{w}", type=float)
    sp.add_argument("--out", default=".")
    sp.set_defaults(fn=cmd_train_hrl)

    sp = sub.add_parser("report", help="summarise a pipeline manifest")
    sp.add_argument("manifest", help="manifest.json or its directory")
    sp.set_defaults(fn=cmd_report)

    sp = sub.add_parser("gen-synthetic", help="write the bundled synthetic episode logs")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_gen_synthetic)

    sp = sub.add_parser("run", help="run the whole pipeline from a key=value config")
    sp.add_argument("--config")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    sp.add_argument("--stages", nargs="+", metavar="STAGE")
    sp.add_argument("--force", action="store_true", help="rerun stages whose outputs exist")
    sp.set_defaults(fn=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except StageFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
