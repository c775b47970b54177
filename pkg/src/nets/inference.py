"""
Cloud-level inference helpers: encode a labelled cloud once, then score,
propose and criticise actions at its points.

Contacts fed to the heads are canonical coordinates (object centroid at the
origin); actions handed back to the simulator use world coordinates.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import torch

from src.cloudgen import LabeledPointCloud, canonicalize, estimate_normals
from src.config import SceneSimConfig
from src.scenesim import GraspAction, PreGraspAction, grasp_from_axes

from .heads import PREGRASP, ModuleNet
from .rotation import euler_to_6d, gram_schmidt, reflect_into_hemisphere

Action = PreGraspAction | GraspAction


@dataclass(frozen=True, eq=False)
class PointFeatures:
    """Per-point features f_s of a canonicalised cloud, one row per point."""

    per_point: torch.Tensor
    cloud: LabeledPointCloud

    def __post_init__(self):
        if self.per_point.shape[0] != self.cloud.n_points:
            raise ValueError("features must align with cloud points")

    @property
    def n_points(self) -> int:
        return self.cloud.n_points

    @cached_property
    def normals(self) -> np.ndarray:
        return estimate_normals(self.cloud)

    def rows(self, indices) -> torch.Tensor:
        return self.per_point[torch.as_tensor(np.asarray(indices), dtype=torch.long)]

    def contacts(self, indices) -> torch.Tensor:
        return torch.as_tensor(self.cloud.points[np.asarray(indices)], dtype=self.per_point.dtype)

    def world_point(self, index: int) -> tuple[float, float, float]:
        return tuple(float(v) for v in self.cloud.points[index] + np.asarray(self.cloud.origin))


def _param_dtype(net: ModuleNet) -> torch.dtype:
    return next(net.parameters()).dtype


def cloud_tensors(cloud: LabeledPointCloud, dtype: torch.dtype = torch.float32) -> tuple[torch.Tensor, torch.Tensor]:
    """Batch-of-one tensors ([1, N, 3] coordinates, [1, N] labels) of a cloud."""
    xyz = torch.as_tensor(cloud.points, dtype=dtype)[None]
    labels = torch.as_tensor(cloud.labels.astype(np.int64))[None]
    return xyz, labels


@torch.no_grad()
def encode(net: ModuleNet, cloud: LabeledPointCloud) -> PointFeatures:
    """Canonicalise the cloud and compute its N x feature_dim per-point features."""
    canon = canonicalize(cloud)
    net.eval()
    xyz, labels = cloud_tensors(canon, _param_dtype(net))
    return PointFeatures(per_point=net.encode(xyz, labels)[0], cloud=canon)


@torch.no_grad()
def score_affordance_map(net: ModuleNet, features: PointFeatures, indices: Optional[Sequence[int]] = None) -> np.ndarray:
    """Affordance scores in [0, 1] for the given points (default: every point)."""
    if indices is None:
        indices = np.arange(features.n_points)
    net.eval()
    scores = net.affordance(features.rows(indices), features.contacts(indices))
    return scores.numpy().astype(float)


def affordance(net: ModuleNet, features: PointFeatures, p: int) -> float:
    return float(score_affordance_map(net, features, [p])[0])


def sample_latents(count: int, dim: int, seed) -> np.ndarray:
    """count x dim standard normal latents, fixed by the seed."""
    return np.random.default_rng(seed).standard_normal((count, dim))


def decode_displacement(raw, push_max: float) -> tuple[float, float]:
    """Planar displacement with its norm clipped to push_max."""
    d = np.asarray(raw, dtype=float)[:2]
    norm = float(np.linalg.norm(d))
    if norm > push_max:
        d = d * (push_max / norm)
    return float(d[0]), float(d[1])


def decode_orientation(raw, normal) -> tuple[float, float, float]:
    """
    Euler "xyz" orientation from a raw 6-value output.

    The approach axis is reflected into the hemisphere above the tangent
    plane with the given normal before converting.
    """
    matrix = gram_schmidt(torch.as_tensor(np.asarray(raw, dtype=float)[None, :6]))[0].numpy()
    closing, approach = matrix[:, 0], matrix[:, 2]
    approach = reflect_into_hemisphere(approach, np.asarray(normal, dtype=float))
    if abs(closing @ approach) > 1 - 1e-9:
        closing = matrix[:, 1]
    return grasp_from_axes((0.0, 0.0, 0.0), closing, approach).orientation


def action_to_raw(action: Action) -> np.ndarray:
    """Network-side parameters of an action: displacement, or the 6-value rotation."""
    if isinstance(action, PreGraspAction):
        return np.asarray(action.displacement, dtype=float)
    return euler_to_6d(action.orientation)


def raw_to_action(
    net: ModuleNet,
    features: PointFeatures,
    p: int,
    raw,
    push_max: float,
) -> Action:
    contact = features.world_point(p)
    if net.module == PREGRASP:
        return PreGraspAction(contact=contact, displacement=decode_displacement(raw, push_max))
    return GraspAction(contact=contact, orientation=decode_orientation(raw, features.normals[p]))


@torch.no_grad()
def propose_raw(net: ModuleNet, features: PointFeatures, indices, latents) -> torch.Tensor:
    """Decoder outputs for aligned rows of point indices and latents."""
    net.eval()
    z = torch.as_tensor(np.asarray(latents), dtype=features.per_point.dtype)
    return net.propose(features.rows(indices), features.contacts(indices), z)


def propose(
    net: ModuleNet,
    features: PointFeatures,
    p: int,
    z,
    push_max: Optional[float] = None,
) -> Action:
    """
    Decode one action at point p from latent z.

    Module 1 yields a PreGraspAction (horizontal displacement clipped to
    push_max); module 2 yields a GraspAction whose approach is clamped to
    the hemisphere above the local tangent plane.
    """
    push_max = SceneSimConfig().push_max if push_max is None else push_max
    raw = propose_raw(net, features, [p], np.asarray(z)[None])[0].numpy()
    return raw_to_action(net, features, p, raw, push_max)


@torch.no_grad()
def encode_action(net: ModuleNet, features: PointFeatures, p: int, action: Action) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and log-variance of the latent for an observed action."""
    net.eval()
    raw = torch.as_tensor(action_to_raw(action)[None], dtype=features.per_point.dtype)
    mu, logvar = net.encode_action(features.rows([p]), features.contacts([p]), raw)
    return mu[0].numpy(), logvar[0].numpy()


@torch.no_grad()
def critic_raw(net: ModuleNet, features: PointFeatures, indices, raw) -> torch.Tensor:
    net.eval()
    raw = torch.as_tensor(np.asarray(raw), dtype=features.per_point.dtype)
    return net.critic(features.rows(indices), features.contacts(indices), raw)


def critic(net: ModuleNet, features: PointFeatures, p: int, action: Action) -> float:
    """Critic score of an action at point p: in [0, 1] for grasps, real for pushes."""
    return float(critic_raw(net, features, [p], action_to_raw(action)[None])[0])
