"""
Single-observation decisions: the necessity check, candidate selection for
both modules and affordance maps.

Candidates are restricted to object-labelled points. Among equal critic
scores the candidate with the lowest point index wins, then the earliest
latent drawn for that point.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.cloudgen import LabeledPointCloud
from src.config import PlannerConfig, SceneSimConfig
from src.errors import NoObjectPoints
from src.nets import (
    GRASP,
    PREGRASP,
    ModuleNet,
    ModuleWeights,
    PointFeatures,
    encode,
    sample_latents,
    score_affordance_map,
)
from src.relaytrain import candidate_scores, estimate_c2, top_object_points
from src.scenesim import GraspAction, PreGraspAction


def as_net(weights: ModuleWeights | ModuleNet, module: Optional[int] = None) -> ModuleNet:
    """Network for trained weights (or a network passed through unchanged)."""
    net = weights if isinstance(weights, ModuleNet) else weights.to_net()
    if module is not None and net.module != module:
        raise ValueError(f"Expected module {module} weights, got module {net.module}")
    return net


@dataclass(frozen=True)
class NecessityResult:
    skip: bool
    c2_hat: float


@dataclass(frozen=True)
class Selection:
    """Winning candidate plus the full scored candidate set it was chosen from."""

    action: PreGraspAction | GraspAction
    point_index: int
    score: float
    point_indices: np.ndarray
    scores: np.ndarray


def necessity_check(
    cloud: LabeledPointCloud | PointFeatures,
    grasp_weights: ModuleWeights | ModuleNet,
    cfg: Optional[PlannerConfig] = None,
    seed=None,
) -> NecessityResult:
    """
    Decide whether pre-grasping can be skipped.

    Args:
        cloud: Observed cloud (or features already encoded by the grasp module).
        grasp_weights: Grasp module.
        cfg: Planner parameters (theta_g, n2, m2).
        seed: Latent seed for the estimate (default cfg.seed).

    Returns:
        NecessityResult: skip is True iff c2_hat > theta_g.
    """
    cfg = cfg or PlannerConfig()
    seed = cfg.seed if seed is None else seed
    net = as_net(grasp_weights, GRASP)
    c2_hat = estimate_c2(cloud, net, cfg.n2, cfg.m2, seed)
    return NecessityResult(skip=c2_hat > cfg.theta_g, c2_hat=c2_hat)


def best_candidate(point_indices: np.ndarray, scores: np.ndarray) -> int:
    """Row of the highest score; ties go to the lowest point index, then the earliest row."""
    rows = np.arange(len(scores))
    return int(np.lexsort((rows, point_indices, -scores))[0])


def select_action(
    net: ModuleNet,
    features: PointFeatures,
    n: int,
    m: int,
    seed,
    push_max: Optional[float] = None,
    points: Optional[np.ndarray] = None,
) -> Selection:
    """
    Score m latents at each of n points and keep the critic's favourite.

    points overrides the affordance ranking (the n highest-affordance object
    points by default).

    Raises:
        NoObjectPoints: If there is no candidate point.
    """
    if points is None:
        points = top_object_points(net, features, n)
    if len(points) == 0:
        raise NoObjectPoints("Cloud has no object-labelled points to act on")
    indices = np.repeat(np.asarray(points), m)
    latents = sample_latents(len(indices), net.cfg.latent_dim, seed)
    actions, scores = candidate_scores(net, features, indices, latents, push_max)
    best = best_candidate(indices, scores)
    return Selection(
        action=actions[best],
        point_index=int(indices[best]),
        score=float(scores[best]),
        point_indices=indices,
        scores=scores,
    )


def _features(cloud: LabeledPointCloud | PointFeatures, net: ModuleNet) -> PointFeatures:
    if isinstance(cloud, PointFeatures):
        return cloud
    if len(cloud.object_indices) == 0:
        raise NoObjectPoints("Cloud has no object-labelled points to act on")
    return encode(net, cloud)


def propose_pregrasp(
    cloud: LabeledPointCloud | PointFeatures,
    pregrasp_weights: ModuleWeights | ModuleNet,
    cfg: Optional[PlannerConfig] = None,
    seed=None,
    push_max: Optional[float] = None,
) -> PreGraspAction:
    """
    Best push among m1 proposals at each of the n1 highest-affordance object points.

    Raises:
        NoObjectPoints: If the cloud has no object-labelled points.
    """
    cfg = cfg or PlannerConfig()
    net = as_net(pregrasp_weights, PREGRASP)
    seed = cfg.seed if seed is None else seed
    push_max = SceneSimConfig().push_max if push_max is None else push_max
    return select_action(net, _features(cloud, net), cfg.n1, cfg.m1, seed, push_max).action


def propose_grasp(
    cloud: LabeledPointCloud | PointFeatures,
    grasp_weights: ModuleWeights | ModuleNet,
    cfg: Optional[PlannerConfig] = None,
    seed=None,
) -> GraspAction:
    """
    Best grasp among m2 proposals at each of the n2 highest-affordance object points.

    Raises:
        NoObjectPoints: If the cloud has no object-labelled points.
    """
    cfg = cfg or PlannerConfig()
    net = as_net(grasp_weights, GRASP)
    seed = cfg.seed if seed is None else seed
    return select_action(net, _features(cloud, net), cfg.n2, cfg.m2, seed).action


def affordance_map(
    cloud: LabeledPointCloud,
    weights: ModuleWeights | ModuleNet,
    module_index: Optional[int] = None,
) -> np.ndarray:
    """Per-point affordance aligned with the cloud; environment points score 0."""
    net = as_net(weights, module_index)
    scores = np.zeros(cloud.n_points)
    indices = cloud.object_indices
    if len(indices):
        scores[indices] = score_affordance_map(net, encode(net, cloud), indices)
    return scores
