"""
Continuous 6-value rotation representation used by the grasp proposal head.

The six values are the closing axis and the finger-width axis of the
gripper frame (the first two columns of its rotation matrix); Euler "xyz"
angles are only used at the action boundary.
"""

import numpy as np
import torch
import torch.nn.functional as F
from scipy.spatial.transform import Rotation


def gram_schmidt(d6: torch.Tensor) -> torch.Tensor:
    """
    Rotation matrices from raw 6-value vectors.

    Args:
        d6: [B, 6] tensor, two stacked 3-vectors.

    Returns:
        torch.Tensor: [B, 3, 3] rotations whose columns are b1, b2, b1 x b2.
    """
    a1, a2 = d6[:, :3], d6[:, 3:]
    b1 = F.normalize(a1, p=2, dim=1)
    b2 = F.normalize(a2 - (b1 * a2).sum(dim=1, keepdim=True) * b1, p=2, dim=1)
    b3 = torch.cross(b1, b2, dim=1)
    return torch.stack([b1, b2, b3], dim=2)


def geodesic_distance(r_true: torch.Tensor, r_pred: torch.Tensor) -> torch.Tensor:
    """Batch rotation angle between two sets of rotation matrices, radians."""
    rel = torch.bmm(r_true.transpose(1, 2), r_pred)
    trace = rel.diagonal(dim1=1, dim2=2).sum(-1)
    # acos is not differentiable at +-1
    cos = torch.clamp(0.5 * (trace - 1), -1 + 1e-6, 1 - 1e-6)
    return torch.acos(cos)


def euler_to_6d(orientation) -> np.ndarray:
    """Six-value representation of an Euler "xyz" orientation (or a batch of them)."""
    matrix = Rotation.from_euler("xyz", np.asarray(orientation, dtype=float)).as_matrix()
    cols = matrix[..., :, :2]
    return np.concatenate([cols[..., :, 0], cols[..., :, 1]], axis=-1)


def reflect_into_hemisphere(approach: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """
    Mirror an approach direction so the gripper comes from above the tangent plane.

    The gripper travels along `approach`, so it sits on the side of -approach;
    that side must face the surface normal.
    """
    n = normal / np.linalg.norm(normal)
    along = float(approach @ n)
    if along > 0:
        approach = approach - 2 * along * n
    return approach / np.linalg.norm(approach)
