#!/usr/bin/env python3
"""
Command-line entry point for the dual-module pre-grasping framework.

Every subcommand resolves one RunConfig (defaults, --config TOML, PGR_SEED,
then --seed / --output-dir) and writes its artifacts under the output
directory, each tagged with the configuration hash:

    <output_dir>/data/<kind>/            collected shards + manifest.json
    <output_dir>/weights/<module>.pgwt   trained module weights
    <output_dir>/train/<module>/         per-epoch metrics CSV and checkpoints
    <output_dir>/plan/trace.json         closed-loop plan trace
    <output_dir>/eval/                   eval.csv, eval.json, compatibility.json
    <output_dir>/render/                 affordance-map PNGs

Usage:
    uv run -m src.cli collect --kind grasp --success 2000 --failure 6000
    uv run -m src.cli train --module grasp
    uv run -m src.cli collect --kind pregrasp --success 2000 --failure 6000
    uv run -m src.cli train --module pregrasp
    uv run -m src.cli plan --scene edge --category-set test-hard
    uv run -m src.cli eval --baseline all --trials 200
    uv run -m src.cli render --module 1 --view camera --scene wall
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np
from rich.console import Console

from src.cloudgen import LabeledPointCloud, decode_cloud, observe
from src.config import RunConfig, config_hash, load_run_config
from src.datagen import (
    GRASP_KIND,
    KINDS,
    PREGRASP_KIND,
    collect_grasp,
    collect_pregrasp,
    dataset_hash,
    read_manifest,
    read_shards,
    write_shards,
)
from src.errors import MissingDependency, PregraspError
from src.evalharness import (
    BASELINES,
    NO_PREGRASP,
    EvalSpec,
    compatibility_sweep,
    report_table,
    run_eval,
    sample_trial_state,
    save_report,
    save_sweep,
    sweep_table,
    trial_assets,
)
from src.logger import setup_package_logging
from src.nets import GRASP, PREGRASP, ModuleWeights, load_weights, save_weights
from src.planner import PUSH, affordance_map, camera_seed, closed_loop, save_trace
from src.relaytrain import NetworkScorer, train_grasp_module, train_pregrasp_module
from src.scenesim import CATEGORY_SETS, SCENE_KINDS, SafetyEvent, SceneState, state_from_json
from src.storage import LocalStorage

from .render import VIEWS, affordance_figure, save_figure

console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger("cli")

MODULE_INDEX = {GRASP_KIND: GRASP, PREGRASP_KIND: PREGRASP}
# stream id of the seed that draws the plan / render scene
SCENE_STREAM = 11


# ----------------------------------------------------------------------------- helpers


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < --config < PGR_SEED < command-line overrides."""
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.output_dir is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.output_dir)
    return cfg


def weights_path(cfg: RunConfig, module: str, override: Optional[str] = None) -> str:
    return override or os.path.join(cfg.output_dir, "weights", f"{module}.pgwt")


def data_dir(cfg: RunConfig, kind: str, override: Optional[str] = None) -> str:
    return override or os.path.join(cfg.output_dir, "data", kind)


def load_module(cfg: RunConfig, module: str, override: Optional[str] = None) -> ModuleWeights:
    """Load trained weights, naming the command that produces them when absent."""
    path = weights_path(cfg, module, override)
    try:
        weights = load_weights(path)
    except MissingDependency as e:
        raise MissingDependency(f"{e} (run `train --module {module}` first)") from e
    if weights.module != MODULE_INDEX[module]:
        raise MissingDependency(f"{path} holds module {weights.module}, not the {module} module")
    return weights


def scene_state(args: argparse.Namespace, cfg: RunConfig) -> SceneState:
    """Scene from --state, or a trial scene drawn from (--scene, --category-set, seed)."""
    if args.state:
        storage = LocalStorage()
        workspace, filename = os.path.dirname(args.state) or ".", os.path.basename(args.state)
        if not storage.file_exist(workspace, filename):
            raise MissingDependency(f"Scene state file not found: {args.state}")
        return state_from_json(json.loads(storage.read_text(workspace, filename)))
    assets = trial_assets(cfg.seed, (args.category_set,), cfg)
    rng = np.random.default_rng([cfg.seed, SCENE_STREAM])
    return sample_trial_state(args.scene, args.category_set, rng, assets, cfg)


def read_cloud(path: str) -> LabeledPointCloud:
    storage = LocalStorage()
    workspace, filename = os.path.dirname(path) or ".", os.path.basename(path)
    if not storage.file_exist(workspace, filename):
        raise MissingDependency(f"Cloud file not found: {path}")
    return decode_cloud(storage.read_bytes(workspace, filename))


# ----------------------------------------------------------------------------- commands


def cmd_collect(args: argparse.Namespace, cfg: RunConfig) -> int:
    dg = cfg.datagen
    n_success = dg.n_success if args.success is None else args.success
    n_failure = dg.n_failure if args.failure is None else args.failure
    scenes = tuple(args.scenes or dg.scenes)

    if args.kind == GRASP_KIND:
        collection = collect_grasp(n_success, n_failure, scenes, dg.categories, cfg.seed, cfg)
    else:
        grasp = load_module(cfg, GRASP_KIND, args.grasp_weights).to_net()
        scorer = NetworkScorer(grasp, cfg.relaytrain.n2, cfg.relaytrain.m2)
        collection = collect_pregrasp(n_success, n_failure, scenes, dg.hard_categories, cfg.seed, scorer, cfg=cfg)

    directory = data_dir(cfg, args.kind, args.data)
    manifest = write_shards(
        collection.records,
        directory,
        config_hash=config_hash(cfg),
        shard_size=dg.shard_size,
        extra={
            "kind": args.kind,
            "seed": cfg.seed,
            "quotas": {"success": n_success, "failure": n_failure},
            "stats": collection.stats(),
        },
    )
    counts = manifest["counts"]
    console.print(
        f"[green]✓[/green] {args.kind}: {counts['success']} successes / {counts['failure']} failures "
        f"in {len(manifest['shards'])} shard(s) after {collection.attempts} attempts "
        f"({100 * collection.success_rate:.1f}% successful)"
    )
    console.print(f"  → {directory}")
    return 0


def cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    # the run seed drives training too
    cfg = dataclasses.replace(cfg, relaytrain=dataclasses.replace(cfg.relaytrain, seed=cfg.seed))
    grasp = None
    if args.module == PREGRASP_KIND:
        grasp = load_module(cfg, GRASP_KIND, args.grasp_weights)

    directory = data_dir(cfg, args.module, args.data)
    manifest = read_manifest(directory)
    if manifest.get("kind", args.module) != args.module:
        raise MissingDependency(f"{directory} holds a {manifest['kind']} dataset, not a {args.module} one")
    records = read_shards(directory)
    output_dir = os.path.join(cfg.output_dir, "train", args.module)

    if args.module == GRASP_KIND:
        weights = train_grasp_module(records, cfg, output_dir, dataset_hash(manifest))
    else:
        weights = train_pregrasp_module(records, grasp, cfg, output_dir, dataset_hash(manifest))
    weights.metadata["config_hash"] = config_hash(cfg)
    saved = save_weights(weights, weights_path(cfg, args.module, args.out))

    auc = weights.metadata["metrics"].get("heldout_auc")
    auc_text = "n/a (single-class held-out split)" if auc is None else f"{auc:.3f}"
    console.print(f"[green]✓[/green] {args.module} module trained on {len(records)} records")
    console.print(f"  held-out critic AUC: [bold]{auc_text}[/bold]")
    console.print(f"  → {saved}")
    return 0


def cmd_plan(args: argparse.Namespace, cfg: RunConfig) -> int:
    grasp = load_module(cfg, GRASP_KIND, args.grasp_weights)
    pregrasp = load_module(cfg, PREGRASP_KIND, args.pregrasp_weights)
    state = scene_state(args, cfg)

    trace = closed_loop(state, pregrasp, grasp, cfg, seed=cfg.seed)
    path = args.trace or os.path.join(cfg.output_dir, "plan", "trace.json")
    saved = save_trace(trace, path)

    for i, step in enumerate(trace.steps):
        detail = f"c2_hat={step.c2_hat:.3f}" if step.c2_hat is not None else ""
        if step.error:
            detail += f" [red]{step.error}[/red]"
        elif step.decision == PUSH and step.safety is not SafetyEvent.NONE:
            detail += f" safety={step.safety.value}"
        console.print(f"  {i}: {step.decision}{' (forced)' if step.forced else ''} {detail}")
    status = "[green]✓ grasp succeeded[/green]" if trace.success else "[yellow]✗ grasp failed[/yellow]"
    if trace.aborted:
        status = "[red]✗ aborted on a safety event[/red]"
    elif trace.error:
        status = f"[red]✗ {trace.error}[/red]"
    console.print(f"{status} after {trace.pushes} push(es)")
    console.print(f"  → {saved}")
    return 0


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    baselines = BASELINES if "all" in args.baseline else tuple(dict.fromkeys(args.baseline))
    overrides = {"baselines": baselines}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.scenes:
        overrides["scenes"] = tuple(args.scenes)
    if args.category_sets:
        overrides["category_sets"] = tuple(args.category_sets)
    if args.workers is not None:
        overrides["workers"] = args.workers
    spec = EvalSpec.from_config(cfg, **overrides)

    grasp = load_module(cfg, GRASP_KIND, args.grasp_weights)
    needs_pregrasp = args.sweep or any(b != NO_PREGRASP for b in baselines)
    pregrasp = load_module(cfg, PREGRASP_KIND, args.pregrasp_weights) if needs_pregrasp else None

    report = run_eval(spec, pregrasp, grasp, cfg)
    output_dir = os.path.join(cfg.output_dir, "eval")
    paths = save_report(report, output_dir)

    console.print(report_table(report))
    for baseline in report.baselines:
        cell = report.aggregate(baseline)
        gain = report.improvement(baseline)
        line = (
            f"  {baseline:<20} success {100 * cell.success_rate:5.1f}% ±{100 * cell.half_width:.1f}  "
            f"pre-grasping {100 * cell.pregrasp_rate:5.1f}%  errors {cell.errors}"
        )
        if gain is not None and baseline != NO_PREGRASP:
            line += f"  ({gain:+.1f} pp vs {NO_PREGRASP})"
        console.print(line)
    console.print(f"  → {paths['csv']}")
    console.print(f"  → {paths['json']}")

    if args.sweep:
        rows = compatibility_sweep(
            pregrasp,
            grasp,
            scenes=spec.scenes,
            trials=spec.trials,
            seed=spec.seed,
            cfg=cfg,
        )
        console.print(sweep_table(rows))
        console.print(f"  → {save_sweep(rows, output_dir)}")
    return 0


def cmd_render(args: argparse.Namespace, cfg: RunConfig) -> int:
    kind = PREGRASP_KIND if args.module == PREGRASP else GRASP_KIND
    weights = load_module(cfg, kind, args.weights)
    if args.cloud:
        cloud = read_cloud(args.cloud)
    else:
        cloud = observe(scene_state(args, cfg), camera_seed(cfg.seed, 0), cfg.cloudgen)

    scores = affordance_map(cloud, weights, args.module)
    fig = affordance_figure(cloud, scores, args.view, title=f"module {args.module} affordance ({kind})")
    path = args.out or os.path.join(cfg.output_dir, "render", f"affordance_m{args.module}_{args.view}.png")
    saved = save_figure(
        fig,
        path,
        metadata={"Title": f"module {args.module} affordance", "Description": f"config_hash={config_hash(cfg)}"},
    )
    console.print(
        f"[green]✓[/green] {int(cloud.object_mask.sum())} object points, "
        f"max affordance {float(scores.max()) if len(scores) else 0.0:.3f}"
    )
    console.print(f"  → {saved}")
    return 0


COMMANDS = {
    "collect": cmd_collect,
    "train": cmd_train,
    "plan": cmd_plan,
    "eval": cmd_eval,
    "render": cmd_render,
}


# ----------------------------------------------------------------------------- parsing


def _add_scene_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("scene")
    group.add_argument(
        "--scene",
        choices=SCENE_KINDS,
        default="edge",
        help="Scene kind to draw the object into (default: edge)",
    )
    group.add_argument(
        "--category-set",
        choices=tuple(CATEGORY_SETS),
        default="test-hard",
        help="Object category set to draw from (default: test-hard)",
    )
    group.add_argument(
        "--state",
        metavar="FILE",
        help="Scene state JSON to use instead of a drawn scene",
    )


def build_parser() -> argparse.ArgumentParser:
    """
    Build the argument parser with one subparser per command.

    Common options (--config, --seed, --output-dir, --verbose) are accepted
    after any subcommand.
    """
    common = argparse.ArgumentParser(add_help=False)
    options = common.add_argument_group("common options")
    options.add_argument("--config", metavar="FILE", help="TOML run configuration (unknown keys are rejected)")
    options.add_argument("--seed", type=int, help="Run seed (overrides the config and PGR_SEED)")
    options.add_argument("--output-dir", metavar="DIR", help="Root directory of every artifact (default: runs)")
    options.add_argument("-v", "--verbose", action="store_true", help="Log to the console as well as logs/pregrasp.log")

    parser = argparse.ArgumentParser(
        prog="pregrasp",
        description="Dual-module pre-grasping - data collection, relay training, planning and evaluation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Relay order:
  collect --kind grasp  →  train --module grasp
  collect --kind pregrasp  →  train --module pregrasp   (both need the grasp weights)

Examples:
  uv run -m src.cli collect --kind grasp --success 100 --failure 300 --seed 7
  uv run -m src.cli train --module grasp --seed 7
  uv run -m src.cli plan --scene wall --category-set test-hard
  uv run -m src.cli eval --baseline all --trials 50 --sweep
  uv run -m src.cli render --module 2 --view top --scene slot

Exit codes:
  0  success
  1  simulation or training failure
  2  usage or configuration error
  3  missing input (dataset, weights, scene file)
  4  corrupt or incompatible file

Notes:
  - PGR_SEED overrides the config seed; --seed overrides both
  - Logs written to logs/pregrasp.log
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    collect = sub.add_parser("collect", parents=[common], help="Collect a grasp or push dataset")
    collect.add_argument("--kind", choices=KINDS, required=True, help="Dataset to collect")
    collect.add_argument("--success", type=int, metavar="N", help="Successful episodes wanted")
    collect.add_argument("--failure", type=int, metavar="N", help="Failed episodes wanted")
    collect.add_argument("--scenes", nargs="+", choices=SCENE_KINDS, metavar="SCENE", help="Scenes to draw from")
    collect.add_argument("--data", metavar="DIR", help="Dataset directory (default: <output-dir>/data/<kind>)")
    collect.add_argument("--grasp-weights", metavar="FILE", help="Grasp weights labelling push episodes")

    train = sub.add_parser("train", parents=[common], help="Train one module")
    train.add_argument("--module", choices=KINDS, required=True, help="Module to train")
    train.add_argument("--data", metavar="DIR", help="Dataset directory (default: <output-dir>/data/<module>)")
    train.add_argument("--grasp-weights", metavar="FILE", help="Frozen grasp weights (pregrasp only)")
    train.add_argument("--out", metavar="FILE", help="Weight file (default: <output-dir>/weights/<module>.pgwt)")

    plan = sub.add_parser("plan", parents=[common], help="Run the closed-loop planner on one scene")
    _add_scene_options(plan)
    plan.add_argument("--pregrasp-weights", metavar="FILE", help="Pre-grasp module weights")
    plan.add_argument("--grasp-weights", metavar="FILE", help="Grasp module weights")
    plan.add_argument("--trace", metavar="FILE", help="Trace JSON (default: <output-dir>/plan/trace.json)")

    evaluate = sub.add_parser("eval", parents=[common], help="Evaluate baselines on trial scenes")
    evaluate.add_argument(
        "--baseline",
        nargs="+",
        choices=BASELINES + ("all",),
        default=["all"],
        metavar="NAME",
        help=f"Baselines to run: {', '.join(BASELINES)} or all (default: all)",
    )
    evaluate.add_argument("--trials", type=int, metavar="T", help="Trials per scene / category set")
    evaluate.add_argument("--scenes", nargs="+", choices=SCENE_KINDS, metavar="SCENE", help="Scenes to evaluate on")
    evaluate.add_argument(
        "--category-sets", nargs="+", choices=tuple(CATEGORY_SETS), metavar="SET", help="Category sets"
    )
    evaluate.add_argument("--workers", type=int, metavar="N", help="Worker processes")
    evaluate.add_argument("--sweep", action="store_true", help="Also run the theta_g compatibility sweep")
    evaluate.add_argument("--pregrasp-weights", metavar="FILE", help="Pre-grasp module weights")
    evaluate.add_argument("--grasp-weights", metavar="FILE", help="Grasp module weights")

    render = sub.add_parser("render", parents=[common], help="Render an affordance map as PNG")
    render.add_argument(
        "--module", type=int, choices=(PREGRASP, GRASP), required=True, help="1 = pre-grasp, 2 = grasp"
    )
    render.add_argument("--view", choices=VIEWS, default="top", help="Projection (default: top)")
    _add_scene_options(render)
    render.add_argument("--cloud", metavar="FILE", help="Encoded point cloud to render instead of a drawn scene")
    render.add_argument("--weights", metavar="FILE", help="Module weights (default: <output-dir>/weights/)")
    render.add_argument("--out", metavar="FILE", help="PNG path (default: <output-dir>/render/)")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    setup_package_logging(verbose=args.verbose)

    try:
        cfg = resolve_config(args)
        logger.info(f"{args.command}: seed={cfg.seed}, output_dir={cfg.output_dir}, config={config_hash(cfg)[:12]}")
        return COMMANDS[args.command](args, cfg)
    except PregraspError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        err_console.print(f"[red]✗ {type(e).__name__}:[/red] {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"{args.command} failed: {e}")
        err_console.print(f"[red]✗ Error:[/red] {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
