"""
Grasp and pre-grasp collection pipelines.

Attempt k draws every random quantity from default_rng([seed, k]). Attempts
run in chunks (optionally on a process pool) and are accepted strictly in
attempt order until both class quotas are met, so a dataset depends only
on its configuration and seed, never on the worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from src.cloudgen import LabeledPointCloud, observe
from src.config import RunConfig
from src.errors import (
    ContactOffObject,
    ObjectOccluded,
    QuotaInfeasible,
    RenderFailed,
    SceneSpecError,
    ZeroDisplacement,
)
from src.logger import log_function
from src.relaytrain.losses import PenaltyCoeffs, gain_successful, penalty
from src.scenesim import (
    ObjectModel,
    SafetyEvent,
    SceneState,
    apply_push,
    build_scene,
    grasp_outcome,
    make_asset_set,
    push_toward,
)

from .records import GRASP_KIND, PREGRASP_KIND, EpisodeRecord, embed_clouds, nearest_object_point
from .sampling import (
    feature_distance_pose,
    feature_pose,
    random_table_pose,
    sample_boundary_contact,
    sample_hemisphere_grasp,
    sample_push_direction,
    sample_push_magnitude,
)

logger = logging.getLogger("datagen")

Scorer = Callable[[LabeledPointCloud, object], float]

# Attempt failures that reject the attempt instead of aborting collection
_REJECTED = (ObjectOccluded, RenderFailed, SceneSpecError, ZeroDisplacement, ContactOffObject)


@dataclass(frozen=True)
class _Job:
    """Everything an attempt needs; pickled once per chunk for pool workers."""

    kind: str
    scenes: tuple[str, ...]
    categories: tuple[str, ...]
    seed: int
    cfg: RunConfig
    assets: dict[str, list[ObjectModel]]
    scorer: Optional[Scorer] = None
    directed_fraction: float = 0.0


def _draw_state(job: _Job, rng: np.random.Generator):
    scene = job.scenes[int(rng.integers(len(job.scenes)))]
    env = build_scene(scene, job.cfg.scenesim)
    shapes = job.assets[job.categories[int(rng.integers(len(job.categories)))]]
    return scene, env, shapes[int(rng.integers(len(shapes)))]


def _grasp_attempt(job: _Job, k: int) -> Optional[EpisodeRecord]:
    cfg = job.cfg
    rng = np.random.default_rng([job.seed, k])
    scene, env, obj = _draw_state(job, rng)
    if rng.random() < cfg.datagen.p_on_feature:
        pose = feature_pose(env, obj, rng, cfg.scenesim)
    else:
        pose = random_table_pose(env, obj, rng, cfg.scenesim)
    if pose is None or not pose.supported:
        return None

    state = SceneState(env, obj, pose, seed=k)
    cloud_seed = int(rng.integers(2**31))
    cloud = observe(state, cloud_seed, cfg.cloudgen)
    index = int(rng.choice(cloud.object_indices))
    grasp = sample_hemisphere_grasp(state, cloud.world_points()[index], rng)
    r, safety = grasp_outcome(state, grasp, cfg.grasp_oracle, cfg.scenesim)
    return EpisodeRecord(
        kind=GRASP_KIND,
        scene=scene,
        state=state,
        cloud_seed=cloud_seed,
        point_index=index,
        action=grasp,
        success=r == 1,
        episode_seed=(job.seed, k),
        r=int(r),
        safety=safety,
    )


def _pregrasp_attempt(job: _Job, k: int) -> Optional[EpisodeRecord]:
    cfg, dg = job.cfg, job.cfg.datagen
    rng = np.random.default_rng([job.seed, k])
    scene, env, obj = _draw_state(job, rng)
    distance = float(rng.uniform(dg.feature_distance_min, dg.feature_distance_max))
    pose = feature_distance_pose(env, obj, distance, rng, cfg=cfg.scenesim)
    if pose is None:
        return None

    state = SceneState(env, obj, pose, seed=k)
    cloud_seed = int(rng.integers(2**31))
    after_seed = int(rng.integers(2**31))
    cloud = observe(state, cloud_seed, cfg.cloudgen)
    contact = sample_boundary_contact(obj, pose, rng)
    angle = sample_push_direction(rng, env, pose.com, job.directed_fraction, dg.directed_sigma)
    magnitude = sample_push_magnitude(rng, dg.push_mean, dg.push_std, cfg.scenesim.push_max)
    action = push_toward(contact, angle, magnitude)
    outcome = apply_push(state, action, cfg=cfg.scenesim)

    c2_before = job.scorer(cloud, [job.seed, k, 0])
    p = penalty(outcome.slip, outcome.rotation, outcome.safety, PenaltyCoeffs.from_config(cfg.relaytrain))
    c2_after, observed_after = c2_before, None
    if p > 0.0:
        after_state = replace(state, pose=outcome.new_pose)
        try:
            c2_after = job.scorer(observe(after_state, after_seed, cfg.cloudgen), [job.seed, k, 1])
            observed_after = after_seed
        except ObjectOccluded:
            logger.debug(f"Attempt {k}: object occluded after the push")

    success = outcome.safety is SafetyEvent.NONE and gain_successful(c2_before, c2_after, cfg.relaytrain)
    return EpisodeRecord(
        kind=PREGRASP_KIND,
        scene=scene,
        state=state,
        cloud_seed=cloud_seed,
        point_index=nearest_object_point(cloud, contact),
        action=action,
        success=bool(success),
        episode_seed=(job.seed, k),
        outcome=outcome,
        cloud_after_seed=observed_after,
    )


def _run_chunk(job: _Job, start: int, stop: int) -> list[Optional[EpisodeRecord]]:
    """Run attempts [start, stop); rejected attempts come back as None."""
    attempt = _grasp_attempt if job.kind == GRASP_KIND else _pregrasp_attempt
    results = []
    for k in range(start, stop):
        try:
            record = attempt(job, k)
        except _REJECTED as e:
            logger.debug(f"Attempt {k} rejected: {e}")
            record = None
        if record is not None and job.cfg.datagen.embed_clouds:
            record = embed_clouds(record, job.cfg.cloudgen)
        results.append(record)
    return results


def _run_chunk_star(args) -> list[Optional[EpisodeRecord]]:
    return _run_chunk(*args)


@dataclass
class Collection:
    """
    Records accepted by a collector plus the attempt statistics up to the
    attempt that completed the quotas.
    """

    records: list[EpisodeRecord] = field(default_factory=list)
    attempts: int = 0
    rejected: int = 0
    successes_seen: int = 0
    failures_seen: int = 0

    @property
    def success_rate(self) -> float:
        """Successful episodes per attempt, rejected attempts included."""
        return self.successes_seen / self.attempts if self.attempts else 0.0

    def stats(self) -> dict[str, int]:
        return {
            "attempts": self.attempts,
            "rejected": self.rejected,
            "successes_seen": self.successes_seen,
            "failures_seen": self.failures_seen,
        }


def _collect(job: _Job, n_success: int, n_failure: int) -> Collection:
    dg = job.cfg.datagen
    if n_success < 0 or n_failure < 0:
        raise ValueError(f"Quotas must be non-negative, got ({n_success}, {n_failure})")

    result = Collection()
    successes = failures = 0
    next_attempt = 0
    pool = ProcessPoolExecutor(max_workers=dg.workers) if dg.workers > 1 else None
    try:
        while successes < n_success or failures < n_failure:
            if next_attempt >= dg.max_attempts:
                raise QuotaInfeasible(
                    f"{job.kind}: {successes}/{n_success} successes and {failures}/{n_failure} "
                    f"failures after {dg.max_attempts} attempts"
                )
            ranges = []
            for _ in range(max(1, dg.workers)):
                stop = min(next_attempt + dg.chunk_size, dg.max_attempts)
                if next_attempt >= stop:
                    break
                ranges.append((job, next_attempt, stop))
                next_attempt = stop
            chunks = pool.map(_run_chunk_star, ranges) if pool else map(_run_chunk_star, ranges)

            for (_, start, _), chunk in zip(ranges, chunks):
                for k, record in enumerate(chunk, start):
                    if successes >= n_success and failures >= n_failure:
                        break
                    result.attempts = k + 1
                    if record is None:
                        result.rejected += 1
                    elif record.success:
                        result.successes_seen += 1
                        if successes < n_success:
                            result.records.append(record)
                            successes += 1
                    else:
                        result.failures_seen += 1
                        if failures < n_failure:
                            result.records.append(record)
                            failures += 1
            logger.info(
                f"{job.kind}: {next_attempt} attempts, {successes}/{n_success} successes, "
                f"{failures}/{n_failure} failures"
            )
    finally:
        if pool:
            pool.shutdown()
    return result


def _assets(cfg: RunConfig, seed: int, categories: Sequence[str]) -> dict[str, list[ObjectModel]]:
    return make_asset_set(seed, cfg.datagen.shapes_per_category, categories)


@log_function(logger_name="datagen", log_execution_time=True)
def collect_grasp(
    n_success: int,
    n_failure: int,
    scenes: Sequence[str],
    categories: Sequence[str],
    seed: int,
    cfg: Optional[RunConfig] = None,
) -> Collection:
    """
    Collect grasp episodes until exactly n_success / n_failure are accepted.

    Objects land at random table poses or, with probability p_on_feature,
    upon a feature. The grasp point is uniform over the visible object
    points and the gripper side uniform on the hemisphere above the local
    tangent plane.

    Args:
        n_success: Successful grasps wanted (r = 1).
        n_failure: Failed grasps wanted.
        scenes: Scene kinds to draw from.
        categories: Object categories to draw from.
        seed: Collection seed.
        cfg: Run configuration (default: all defaults).

    Returns:
        Collection: Accepted records in attempt order and attempt statistics.

    Raises:
        QuotaInfeasible: If the quotas are not met within max_attempts.
    """
    cfg = cfg or RunConfig()
    job = _Job(
        kind=GRASP_KIND,
        scenes=tuple(scenes),
        categories=tuple(categories),
        seed=seed,
        cfg=cfg,
        assets=_assets(cfg, seed, categories),
    )
    return _collect(job, n_success, n_failure)


@log_function(logger_name="datagen", log_execution_time=True)
def collect_pregrasp(
    n_success: int,
    n_failure: int,
    scenes: Sequence[str],
    hard_categories: Sequence[str],
    seed: int,
    scorer: Scorer,
    directed_fraction: Optional[float] = None,
    cfg: Optional[RunConfig] = None,
) -> Collection:
    """
    Collect push episodes labelled by a grasp-score estimator.

    Each object starts flat at a uniform distance from a scene feature and
    is pushed from a boundary point with a truncated-normal magnitude. With
    probability directed_fraction the push heads at the nearest feature
    point (Gaussian angular noise), otherwise in a uniform direction. A
    record succeeds when the push is safe and the grasp score rises by the
    configured gain rule.

    Args:
        n_success: Successful pushes wanted.
        n_failure: Unsuccessful pushes wanted.
        scenes: Scene kinds to draw from.
        hard_categories: Hard-to-grasp categories to draw from.
        seed: Collection seed.
        scorer: Callable (cloud, seed) -> grasp score in [0, 1], typically a
            NetworkScorer over trained grasp weights.
        directed_fraction: Share of directed pushes (default from config).
        cfg: Run configuration.

    Returns:
        Collection: Accepted records in attempt order and attempt statistics.

    Raises:
        QuotaInfeasible: If the quotas are not met within max_attempts.
    """
    cfg = cfg or RunConfig()
    if directed_fraction is None:
        directed_fraction = cfg.datagen.directed_fraction
    if not 0.0 <= directed_fraction <= 1.0:
        raise ValueError(f"directed_fraction must lie in [0, 1], got {directed_fraction}")
    job = _Job(
        kind=PREGRASP_KIND,
        scenes=tuple(scenes),
        categories=tuple(hard_categories),
        seed=seed,
        cfg=cfg,
        assets=_assets(cfg, seed, hard_categories),
        scorer=scorer,
        directed_fraction=directed_fraction,
    )
    return _collect(job, n_success, n_failure)

