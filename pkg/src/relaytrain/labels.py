"""
Critic-averaged labels: the grasp-score estimate c2_hat and the affordance
labels of both modules.
"""

from typing import Optional, Protocol, Sequence

import numpy as np

from src.cloudgen import LabeledPointCloud
from src.config import SceneSimConfig
from src.nets import (
    ModuleNet,
    PointFeatures,
    action_to_raw,
    critic_raw,
    encode,
    propose_raw,
    raw_to_action,
    sample_latents,
    score_affordance_map,
)


class GraspScorer(Protocol):
    """Anything that maps an observed cloud to a grasp-score estimate in [0, 1]."""

    def __call__(self, cloud: LabeledPointCloud, seed) -> float: ...


def top_object_points(net: ModuleNet, features: PointFeatures, n: int) -> np.ndarray:
    """
    Indices of the n object points with the highest affordance, best first.

    Ties keep the lower point index first. Fewer than n object points are all returned.
    """
    candidates = features.cloud.object_indices
    if len(candidates) == 0:
        return candidates
    scores = score_affordance_map(net, features, candidates)
    order = np.lexsort((candidates, -scores))
    return candidates[order[:n]]


def candidate_scores(
    net: ModuleNet,
    features: PointFeatures,
    indices: Sequence[int],
    latents: np.ndarray,
    push_max: Optional[float] = None,
) -> tuple[list, np.ndarray]:
    """
    Decode one action per (point, latent) row and score it with the critic.

    Grasp proposals are scored after the hemisphere clamp, i.e. exactly as
    they would be executed.

    Returns:
        (actions, scores): aligned with the rows of indices / latents.
    """
    push_max = SceneSimConfig().push_max if push_max is None else push_max
    raw = propose_raw(net, features, indices, latents).numpy()
    actions = [raw_to_action(net, features, int(p), r, push_max) for p, r in zip(indices, raw)]
    executed = np.stack([action_to_raw(a) for a in actions])
    return actions, critic_raw(net, features, indices, executed).numpy().astype(float)


def estimate_c2(
    cloud: LabeledPointCloud | PointFeatures,
    grasp_net: ModuleNet,
    n2: int = 10,
    m2: int = 10,
    seed=0,
) -> float:
    """
    Grasp-score estimate: mean grasp-critic score over m2 proposals at each of
    the n2 object points with the highest grasp affordance.

    Returns 0.0 for a cloud without object points.
    """
    features = cloud if isinstance(cloud, PointFeatures) else encode(grasp_net, cloud)
    points = top_object_points(grasp_net, features, n2)
    if len(points) == 0:
        return 0.0
    latents = sample_latents(len(points) * m2, grasp_net.cfg.latent_dim, seed)
    _, scores = candidate_scores(grasp_net, features, np.repeat(points, m2), latents)
    return float(np.clip(scores.mean(), 0.0, 1.0))


def affordance_label(
    features: PointFeatures,
    p: int,
    net: ModuleNet,
    n_i: int = 10,
    seed=0,
    push_max: Optional[float] = None,
) -> float:
    """Affordance target of point p: the mean critic score of n_i proposals there."""
    latents = sample_latents(n_i, net.cfg.latent_dim, seed)
    _, scores = candidate_scores(net, features, np.full(n_i, p), latents, push_max)
    return float(scores.mean())


class NetworkScorer:
    """
    GraspScorer backed by a grasp module.

    Args:
        grasp_net: Trained (or initialised) module-2 network.
        n2: Top affordance points per cloud.
        m2: Latents per point.
    """

    def __init__(self, grasp_net: ModuleNet, n2: int = 10, m2: int = 10):
        self.grasp_net = grasp_net
        self.n2 = n2
        self.m2 = m2

    def __call__(self, cloud: LabeledPointCloud, seed) -> float:
        return estimate_c2(cloud, self.grasp_net, self.n2, self.m2, seed)
