"""
Evaluation runs: every (scene, category set, baseline) cell plays the same
T trial scenes, so baselines are compared on identical draws. Trial t of
cell (i, j) draws its scene and plan seed from default_rng([seed, i, j, t]).
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from src.config import RunConfig, config_hash
from src.errors import ConfigError, PregraspError
from src.logger import log_function
from src.nets import GRASP, PREGRASP, ModuleNet, ModuleWeights
from src.planner import as_net
from src.scenesim import ObjectModel

from .baselines import BASELINES, NO_PREGRASP, OURS, run_baseline
from .report import EvalCell, EvalReport, SweepRow
from .trials import sample_trial_state, trial_assets

logger = logging.getLogger("evalharness")


@dataclass(frozen=True)
class EvalSpec:
    scenes: tuple[str, ...]
    category_sets: tuple[str, ...]
    baselines: tuple[str, ...]
    trials: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        unknown = [b for b in self.baselines if b not in BASELINES]
        if unknown:
            raise ConfigError(f"Unknown baselines {unknown}; expected a subset of {list(BASELINES)}")

    @classmethod
    def from_config(cls, cfg: RunConfig, **overrides) -> "EvalSpec":
        ev = cfg.evalharness
        fields = {
            "scenes": tuple(ev.scenes),
            "category_sets": tuple(ev.category_sets),
            "baselines": tuple(ev.baselines),
            "trials": ev.trials,
            "seed": cfg.seed,
            "workers": ev.workers,
        }
        return cls(**{**fields, **overrides})


@dataclass(frozen=True)
class _CellJob:
    scene: str
    scene_index: int
    category_set: str
    set_index: int
    baseline: str
    seed: int
    trials: int
    cfg: RunConfig
    assets: dict[str, list[ObjectModel]]
    pregrasp: Optional[ModuleNet]
    grasp: ModuleNet


def _run_cell(job: _CellJob) -> EvalCell:
    cell = EvalCell(job.scene, job.category_set, job.baseline)
    for t in range(job.trials):
        cell.trials += 1
        rng = np.random.default_rng([job.seed, job.scene_index, job.set_index, t])
        plan_seed = int(rng.integers(2**31))
        try:
            state = sample_trial_state(job.scene, job.category_set, rng, job.assets, job.cfg)
            trace = run_baseline(job.baseline, state, job.pregrasp, job.grasp, job.cfg, plan_seed)
        except PregraspError as e:
            logger.debug(f"{job.scene}/{job.category_set}/{job.baseline} trial {t} failed: {e}")
            cell.errors += 1
            continue
        cell.successes += trace.r
        cell.pushed += int(trace.pushed)
        cell.aborted += int(trace.aborted)
        cell.errors += int(trace.error is not None)
    logger.info(
        f"{job.scene}/{job.category_set}/{job.baseline}: {cell.successes}/{cell.trials} successes, "
        f"{cell.pushed} with pre-grasping"
    )
    return cell


@log_function(logger_name="evalharness", log_execution_time=True)
def run_eval(
    spec: EvalSpec,
    pregrasp_weights: Optional[ModuleWeights | ModuleNet],
    grasp_weights: ModuleWeights | ModuleNet,
    cfg: Optional[RunConfig] = None,
) -> EvalReport:
    """
    Play every baseline of `spec` on `spec.trials` trials of each scene / category-set pair.

    Args:
        spec: Scenes, category sets, baselines, trials per cell, seed and workers.
        pregrasp_weights: Pre-grasp module (may be None when only no_pregrasp runs).
        grasp_weights: Grasp module.
        cfg: Run configuration for the simulator, camera and planner.

    Returns:
        EvalReport: One cell per (scene, category set, baseline), in spec order.
            Simulator errors count as failed trials and are tallied per cell.
    """
    cfg = cfg or RunConfig()
    grasp = as_net(grasp_weights, GRASP)
    pregrasp = None if pregrasp_weights is None else as_net(pregrasp_weights, PREGRASP)
    if pregrasp is None and any(b != NO_PREGRASP for b in spec.baselines):
        raise ValueError("Pre-grasp weights are required for every baseline but no_pregrasp")

    assets = trial_assets(spec.seed, spec.category_sets, cfg)
    jobs = [
        _CellJob(scene, i, category_set, j, baseline, spec.seed, spec.trials, cfg, assets, pregrasp, grasp)
        for i, scene in enumerate(spec.scenes)
        for j, category_set in enumerate(spec.category_sets)
        for baseline in spec.baselines
    ]
    logger.info(f"Evaluating {len(jobs)} cells x {spec.trials} trials on {spec.workers} worker(s)")

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            cells = list(pool.map(_run_cell, jobs))
    else:
        cells = [_run_cell(job) for job in jobs]

    return EvalReport(
        cells=cells,
        metadata={
            "seed": spec.seed,
            "trials": spec.trials,
            "scenes": list(spec.scenes),
            "category_sets": list(spec.category_sets),
            "config_hash": config_hash(cfg),
        },
    )


@log_function(logger_name="evalharness", log_execution_time=True)
def compatibility_sweep(
    pregrasp_weights: ModuleWeights | ModuleNet,
    grasp_weights: ModuleWeights | ModuleNet,
    graspable_sets: Sequence[str] = ("train-easy",),
    ungraspable_sets: Sequence[str] = ("train-hard",),
    theta_grid: Optional[Sequence[float]] = None,
    scenes: Optional[Sequence[str]] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    cfg: Optional[RunConfig] = None,
) -> list[SweepRow]:
    """
    Pre-grasping and success rates of the full planner for each threshold.

    Every threshold replays the same trial scenes. Pre-grasping is skipped
    only when the grasp estimate is strictly above theta_g, and the estimate
    is clipped to [0, 1]: theta_g = 0 skips whenever it is positive and
    theta_g = 1 never skips, even for a critic scoring 1.

    Returns:
        list[SweepRow]: One row per threshold, graspable and ungraspable
            objects aggregated separately.
    """
    cfg = cfg or RunConfig()
    theta_grid = cfg.evalharness.theta_grid if theta_grid is None else theta_grid
    overrides = {"baselines": (OURS,), "category_sets": tuple(graspable_sets) + tuple(ungraspable_sets)}
    if scenes is not None:
        overrides["scenes"] = tuple(scenes)
    if trials is not None:
        overrides["trials"] = trials
    if seed is not None:
        overrides["seed"] = seed
    spec = EvalSpec.from_config(cfg, **overrides)

    pregrasp, grasp = as_net(pregrasp_weights, PREGRASP), as_net(grasp_weights, GRASP)
    rows = []
    for theta in theta_grid:
        swept = replace(cfg, planner=replace(cfg.planner, theta_g=float(theta)))
        report = run_eval(spec, pregrasp, grasp, swept)
        rows.append(
            SweepRow(
                theta_g=float(theta),
                graspable=report.aggregate(OURS, tuple(graspable_sets)),
                ungraspable=report.aggregate(OURS, tuple(ungraspable_sets)),
            )
        )
        logger.info(
            f"theta_g={theta:.2f}: pre-grasping {rows[-1].graspable.pregrasp_rate:.2f} (graspable) / "
            f"{rows[-1].ungraspable.pregrasp_rate:.2f} (ungraspable)"
        )
    return rows
