"""
The five evaluated policies.

    no_pregrasp          grasp the first observation directly
    random_direction     module-1 contact and magnitude, uniform direction; one push, then grasp
    center_point         contact at the object's geometric centre, module-1 displacement; one push, then grasp
    ours_no_closed_loop  one module-1 push, then grasp
    ours                 full closed loop with the necessity check
"""

import logging
from typing import Optional

import numpy as np
from shapely.geometry import MultiPoint, Point

from src.cloudgen import LabeledPointCloud, observe
from src.config import RunConfig
from src.errors import NoObjectPoints, PregraspError
from src.nets import ModuleNet, encode
from src.planner import (
    GRASP_DECISION,
    PlanStep,
    PlanTrace,
    PushPolicy,
    camera_seed,
    closed_loop,
    select_action,
)
from src.scenesim import GraspAction, PreGraspAction, SceneState, grasp_outcome, push_toward

logger = logging.getLogger("evalharness")

NO_PREGRASP = "no_pregrasp"
RANDOM_DIRECTION = "random_direction"
CENTER_POINT = "center_point"
OURS_NO_CLOSED_LOOP = "ours_no_closed_loop"
OURS = "ours"
BASELINES = (NO_PREGRASP, RANDOM_DIRECTION, CENTER_POINT, OURS_NO_CLOSED_LOOP, OURS)


def center_point_index(cloud: LabeledPointCloud) -> int:
    """
    Object point closest (in plan view) to the centroid of the visible footprint.

    The footprint is the convex hull of the object points projected on the
    table; ties go to the lowest point index.

    Raises:
        NoObjectPoints: If the cloud has no object points.
    """
    indices = cloud.object_indices
    if len(indices) == 0:
        raise NoObjectPoints("Cloud has no object-labelled points to act on")
    xy = cloud.world_points()[indices, :2]
    centre: Point = MultiPoint([tuple(p) for p in xy]).convex_hull.centroid
    distances = np.hypot(xy[:, 0] - centre.x, xy[:, 1] - centre.y)
    return int(indices[int(np.argmin(distances))])


def randomize_direction(action: PreGraspAction, rng: np.random.Generator) -> PreGraspAction:
    """Same contact and magnitude, heading uniform on [0, 2pi)."""
    magnitude = float(np.hypot(*action.displacement))
    return push_toward(action.contact, float(rng.uniform(0.0, 2.0 * np.pi)), magnitude)


def random_direction_policy(pregrasp: ModuleNet, cfg: RunConfig) -> PushPolicy:
    def policy(cloud: LabeledPointCloud, seed) -> PreGraspAction:
        pc = cfg.planner
        selected = select_action(pregrasp, encode(pregrasp, cloud), pc.n1, pc.m1, seed, cfg.scenesim.push_max)
        return randomize_direction(selected.action, np.random.default_rng([*seed, 7]))

    return policy


def center_point_policy(pregrasp: ModuleNet, cfg: RunConfig) -> PushPolicy:
    def policy(cloud: LabeledPointCloud, seed) -> PreGraspAction:
        features = encode(pregrasp, cloud)
        # Canonicalisation keeps point order, so cloud indices address the features
        point = center_point_index(cloud)
        selected = select_action(
            pregrasp, features, 1, cfg.planner.m1, seed, cfg.scenesim.push_max, points=np.array([point])
        )
        return selected.action

    return policy


def direct_grasp(state: SceneState, grasp: ModuleNet, cfg: RunConfig, seed: int) -> PlanTrace:
    """Single grasp on the first observation, without any push."""
    trace = PlanTrace(metadata={"seed": seed})
    try:
        cloud = observe(state, camera_seed(seed, 0), cfg.cloudgen)
    except PregraspError as e:
        trace.error = str(e)
        return trace

    step = PlanStep(decision=GRASP_DECISION)
    trace.steps.append(step)
    try:
        pc = cfg.planner
        action: GraspAction = select_action(grasp, encode(grasp, cloud), pc.n2, pc.m2, [seed, 0, 2]).action
        step.action = action
        r, step.safety = grasp_outcome(state, action, cfg.grasp_oracle, cfg.scenesim)
        step.r = trace.r = int(r)
    except PregraspError as e:
        step.error = trace.error = str(e)
        step.r = trace.r = 0
    return trace


def run_baseline(
    kind: str,
    state: SceneState,
    pregrasp: Optional[ModuleNet],
    grasp: ModuleNet,
    cfg: RunConfig,
    seed: int,
) -> PlanTrace:
    """
    Run one policy on one scene.

    Args:
        kind: One of BASELINES.
        state: Trial scene.
        pregrasp: Pre-grasp network (unused by no_pregrasp).
        grasp: Grasp network.
        cfg: Run configuration.
        seed: Plan seed.

    Returns:
        PlanTrace: The executed steps and the terminal grasp result.

    Raises:
        ValueError: On an unknown baseline or missing pre-grasp network.
    """
    if kind not in BASELINES:
        raise ValueError(f"Unknown baseline {kind!r}; expected one of {', '.join(BASELINES)}")
    if kind == NO_PREGRASP:
        return direct_grasp(state, grasp, cfg, seed)
    if pregrasp is None:
        raise ValueError(f"Baseline {kind} needs pre-grasp weights")
    if kind == OURS:
        return closed_loop(state, pregrasp, grasp, cfg, seed=seed)

    policy = None
    if kind == RANDOM_DIRECTION:
        policy = random_direction_policy(pregrasp, cfg)
    elif kind == CENTER_POINT:
        policy = center_point_policy(pregrasp, cfg)
    return closed_loop(
        state, pregrasp, grasp, cfg, seed=seed, push_policy=policy, max_iterations=1, check_necessity=False
    )
