"""End-to-end pipeline: logs -> saliency -> sub-goals -> plan -> intent -> HRL.

Every stage writes files under the output directory and is skipped when all
of its outputs already exist (unless forced).  The manifest records a
SHA-256 per emitted file; outputs never embed paths or wall-clock time, so
equal inputs give equal hashes.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import intent, saliency, subgoals
from .env import RoomEnv, annotate_goals, load_layout, load_room1
from .hrl import VARIANTS, run_experiment
from .ingest import filter_by_room, read_episode_log, serialize_episode_log, validate_log
from .rewards import RewardConfig

MANIFEST = "manifest.json"


class StageFailed(RuntimeError):
    def __init__(self, stage: str, cause: BaseException | str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    logs_dir: str = "logs"
    out_dir: str = "out"
    layout: str = ""  # empty: bundled room-1 layout
    plan: str = ""  # empty: plan from trajectory matching
    room: int = 1
    level: int = 0
    sigma_px: float = 0.0  # 0: one visual degree
    threshold: float = saliency.DEFAULT_THRESHOLD
    px_per_degree: float = saliency.PX_PER_DEGREE
    png: bool = False
    iou: float = subgoals.DEFAULT_IOU
    agent_box: tuple[int, int] = subgoals.AGENT_BOX
    k: int = 10
    reg: float = intent.DEFAULT_REG
    epochs: int = intent.DEFAULT_EPOCHS
    variant: str = "fullmodel"
    budget: int = 300_000
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    tau: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.sigma_px < 0 or self.px_per_degree <= 0:
            raise ConfigError("sigma_px must be >= 0 and px_per_degree > 0")
        if not 0 < self.iou < 1:
            raise ConfigError("iou must lie in (0, 1)")
        if min(self.agent_box) <= 0:
            raise ConfigError("agent_box dims must be positive")
        if self.k < 2 or self.reg <= 0 or self.epochs < 1:
            raise ConfigError("need k >= 2, reg > 0, epochs >= 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.budget <= 0:
            raise ConfigError("budget must be positive")

    @property
    def saliency_config(self) -> saliency.SaliencyConfig:
        return saliency.SaliencyConfig(self.sigma_px or None, self.threshold, self.px_per_degree)

    @property
    def reward_config(self) -> RewardConfig:
        base = VARIANTS[self.variant]
        over = {n: getattr(self, n) for n in ("alpha", "beta", "gamma", "tau") if getattr(self, n) is not None}
        return dataclasses.replace(base, **over)


def _convert(f: dataclasses.Field, raw: str):
    t = str(f.type)
    raw = raw.strip()
    if f.name == "agent_box":
        w, _, h = raw.lower().partition("x")
        return (int(w), int(h))
    if t == "bool":
        if raw.lower() not in ("1", "0", "true", "false", "yes", "no"):
            raise ConfigError(f"{f.name}: expected a boolean, got {raw!r}")
        return raw.lower() in ("1", "true", "yes")
    if t == "int":
        return int(raw)
    if t.startswith("float"):
        return None if raw.lower() in ("", "none") else float(raw)
    return raw


def parse_config(text: str = "", overrides: dict | None = None) -> PipelineConfig:
    """``key = value`` lines (``#`` comments) followed by ``overrides``."""
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    values: dict = {}
    items = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        k, sep, v = line.partition("=")
        if not sep:
            raise ConfigError(f"line {n}: expected key = value")
        items.append((k.strip(), v))
    items += [(k, str(v) if not isinstance(v, str) else v) for k, v in (overrides or {}).items()]
    for k, v in items:
        k = k.replace("-", "_")
        if k not in fields:
            raise ConfigError(f"unknown config key {k!r}")
        try:
            values[k] = _convert(fields[k], v)
        except ValueError as exc:
            raise ConfigError(f"{k}: {exc}") from None
    return PipelineConfig(**values)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    text = Path(path).read_text() if path else ""
    return parse_config(text, overrides)


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- stages -------------------------------------------------------------------


@dataclass
class _Ctx:
    cfg: PipelineConfig
    out: Path

    def write(self, rel: str, text: str) -> Path:
        p = self.out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        return p

    def episode_files(self):
        return sorted((self.out / "ingest").glob("*.log"))

    def episodes(self):
        return [read_episode_log(p) for p in self.episode_files()]

    def goal_set(self):
        return subgoals.read_subgoals(self.out / "subgoals.json")


def _stage_ingest(ctx: _Ctx) -> list[Path]:
    src = Path(ctx.cfg.logs_dir)
    if not src.is_dir():
        raise FileNotFoundError(f"logs dir {src} does not exist")
    paths = sorted(src.glob("*.log"))
    if not paths:
        raise FileNotFoundError(f"no *.log files in {src}")
    out, rows = [], ["episode,frames,gaze_samples,dropped_samples,violations,frames_without_gaze"]
    for p in paths:
        log = filter_by_room(read_episode_log(p), ctx.cfg.room, ctx.cfg.level)
        if not log.frames:
            continue
        r = validate_log(log)
        rows.append(f"{log.episode_id},{r.frames},{r.gaze_samples},{r.dropped_samples},{r.violations},{r.frames_without_gaze}")
        out.append(ctx.write(f"ingest/{p.stem}.log", serialize_episode_log(log)))
    if not out:
        raise ValueError(f"no frames for room {ctx.cfg.room} level {ctx.cfg.level}")
    out.append(ctx.write("ingest/report.csv", "\n".join(rows) + "\n"))
    return out


def _stage_saliency(ctx: _Ctx) -> list[Path]:
    out = []
    for src in ctx.episode_files():
        m = saliency.saliency_map(read_episode_log(src), ctx.cfg.saliency_config)
        p = ctx.out / "saliency" / f"{src.stem}.pgm"
        p.parent.mkdir(parents=True, exist_ok=True)
        saliency.write_pgm(m, p)
        out.append(p)
        if ctx.cfg.png:
            q = p.with_suffix(".png")
            saliency.write_png(m, q)
            out.append(q)
    return out


def _stage_extract(ctx: _Ctx) -> list[Path]:
    cfg = ctx.cfg
    sets = []
    for log in ctx.episodes():
        m = saliency.saliency_map(log, cfg.saliency_config)
        mask = saliency.threshold_mask(m, cfg.threshold)
        sets.append(subgoals.extract_subgoals(mask, cfg.agent_box, (log.frame_width, log.frame_height), cfg.iou))
    merged = subgoals.merge_across_episodes(sets, cfg.iou)
    return [ctx.write("subgoals.json", subgoals.subgoals_to_json(merged))]


def _stage_match(ctx: _Ctx) -> list[Path]:
    goals = ctx.goal_set()
    logs = ctx.episodes()
    orders = [subgoals.match_trajectory(log, goals) for log in logs]
    lines = [f"{log.episode_id} " + " ".join(map(str, o)) for log, o in zip(logs, orders)]
    out = [ctx.write("orders.txt", "\n".join(lines) + "\n")]
    if ctx.cfg.plan:
        steps = subgoals.read_plan(ctx.cfg.plan)
    else:
        steps = list(subgoals.majority_vote(orders).steps)
    out.append(ctx.write("plan.txt", " ".join(map(str, steps)) + "\n"))
    return out


def _stage_features(ctx: _Ctx) -> list[Path]:
    goals = ctx.goal_set()
    plan = subgoals.read_plan(ctx.out / "plan.txt")
    samples = [s for log in ctx.episodes() for s in intent.build_samples(log, goals, plan)]
    return [ctx.write("features.csv", intent.samples_to_csv(samples))]


def _stage_train_intent(ctx: _Ctx) -> list[Path]:
    cfg = ctx.cfg
    samples = intent.samples_from_csv((ctx.out / "features.csv").read_text())
    k = min(cfg.k, len(samples))
    res = intent.cross_validate(samples, k=k, seed=cfg.seed, reg=cfg.reg, epochs=cfg.epochs)
    rows = ["fold,accuracy"] + [f"{i},{a:.6f}" for i, a in enumerate(res.folds)] + [f"mean,{res.mean:.6f}"]
    model = intent.train(samples, reg=cfg.reg, epochs=cfg.epochs, seed=cfg.seed)
    return [
        ctx.write("folds.csv", "\n".join(rows) + "\n"),
        ctx.write("intent_model.txt", intent.model_to_text(model)),
    ]


def layout_for(cfg: PipelineConfig):
    return load_layout(Path(cfg.layout).read_text()) if cfg.layout else load_room1()


def stats_to_csv(stats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "plan_step", "trailing_performance"])
    for step, k, r in stats.trailing:
        w.writerow([step, k, f"{r:.4f}"])
    return buf.getvalue()


def learned_to_csv(stats, plan) -> str:
    lines = ["plan_step,goal,learned_at"]
    for k, (g, v) in enumerate(zip(plan, stats.learned_at)):
        lines.append(f"{k},{g},{'' if v is None else v}")
    return "\n".join(lines) + "\n"


def _stage_train_hrl(ctx: _Ctx) -> list[Path]:
    cfg = ctx.cfg
    layout = layout_for(cfg)
    boxes = ctx.goal_set()
    goals = annotate_goals(layout, [subgoals.box_to_cells(b) for b in boxes])
    plan = subgoals.read_plan(ctx.out / "plan.txt")
    stats = run_experiment(cfg.variant, RoomEnv(layout), goals, plan, cfg.budget, seed=cfg.seed, cfg=cfg.reward_config)
    return [
        ctx.write("stats.csv", stats_to_csv(stats)),
        ctx.write("learned_at.csv", learned_to_csv(stats, plan)),
    ]


Stage = tuple[str, Callable[[_Ctx], list[Path]], tuple[str, ...]]

STAGES: list[Stage] = [
    ("ingest", _stage_ingest, ("ingest/report.csv",)),
    ("saliency", _stage_saliency, ()),
    ("extract", _stage_extract, ("subgoals.json",)),
    ("match", _stage_match, ("orders.txt", "plan.txt")),
    ("features", _stage_features, ("features.csv",)),
    ("train-intent", _stage_train_intent, ("folds.csv", "intent_model.txt")),
    ("train-hrl", _stage_train_hrl, ("stats.csv", "learned_at.csv")),
]
STAGE_NAMES = [s[0] for s in STAGES]


def _stage_done(ctx: _Ctx, name: str, outputs: tuple[str, ...]) -> bool:
    if name == "saliency":
        d = ctx.out / "saliency"
        logs = ctx.episode_files()
        return bool(logs) and all((d / f"{p.stem}.pgm").exists() for p in logs)
    return all((ctx.out / o).exists() for o in outputs)


def _stage_files(ctx: _Ctx, name: str, outputs: tuple[str, ...]) -> list[Path]:
    if name == "ingest":
        return sorted((ctx.out / "ingest").glob("*"))
    if name == "saliency":
        return sorted((ctx.out / "saliency").glob("*"))
    return [ctx.out / o for o in outputs]


def run_pipeline(cfg: PipelineConfig, force: bool = False, stages: list[str] | None = None) -> dict:
    """Run the selected stages in order and write ``manifest.json``.

    Returns the manifest: ``{"root", "stages": {name: "ran"|"skipped"},
    "files": {relative path: sha256}}``.  Raises :class:`StageFailed`.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Ctx(cfg, out)
    wanted = stages or STAGE_NAMES
    unknown = set(wanted) - set(STAGE_NAMES)
    if unknown:
        raise ConfigError(f"unknown stages {sorted(unknown)}")
    status, files = {}, []
    for name, fn, outputs in STAGES:
        if name not in wanted:
            continue
        if not force and _stage_done(ctx, name, outputs):
            status[name] = "skipped"
            files += _stage_files(ctx, name, outputs)
            continue
        try:
            files += fn(ctx)
        except StageFailed:
            raise
        except Exception as exc:  # noqa: BLE001 - wrapped with the stage name
            raise StageFailed(name, exc) from exc
        status[name] = "ran"
    manifest = {
        "root": str(out),
        "stages": status,
        "files": {str(p.relative_to(out)): sha256_file(p) for p in sorted(set(files))},
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def read_manifest(path: str | Path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST
    return json.loads(p.read_text())


# --- report -------------------------------------------------------------------


def emit_report(manifest: dict) -> str:
    files = manifest.get("files") or {}
    if not files:
        return "no artifacts\n"
    root = Path(manifest.get("root", "."))
    lines = []
    if "subgoals.json" in files:
        goals = subgoals.read_subgoals(root / "subgoals.json")
        lines.append(f"sub-goal proposals: {len(goals)}")
    if "plan.txt" in files:
        plan = subgoals.read_plan(root / "plan.txt")
        lines.append(f"unique sub-goals: {len(set(plan))}")
        lines.append(f"plan ({len(plan)} steps): {' '.join(map(str, plan))}")
    if "folds.csv" in files:
        rows = list(csv.reader((root / "folds.csv").read_text().splitlines()))
        mean = next(r[1] for r in rows if r[0] == "mean")
        lines.append(f"intent CV accuracy: {float(mean):.3f} ({len(rows) - 2} folds)")
    if "learned_at.csv" in files:
        rows = list(csv.DictReader((root / "learned_at.csv").read_text().splitlines()))
        lines.append("learned at (env steps):")
        for r in rows:
            lines.append(f"  step {r['plan_step']:>2} goal {r['goal']:>2}: {r['learned_at'] or 'not learned'}")
    elif "stats.csv" in files:
        lines.append("training stats present, no learned-at summary")
    ran = manifest.get("stages", {})
    if ran:
        lines.append("stages: " + ", ".join(f"{k}={v}" for k, v in ran.items()))
    lines.append(f"artifacts: {len(files)}")
    return "\n".join(lines) + "\n"
