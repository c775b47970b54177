"""
Hierarchical per-point encoder.

Two set-abstraction levels group local neighbourhoods around farthest-point
centroids, a global level pools the whole cloud, and three feature
propagation stages interpolate back to every input point. Tensors follow
the [B, C, N] layout inside the modules.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from src.config import NetsConfig

LABEL_CHANNELS = 2  # one-hot environment / object


def square_distance(src: torch.Tensor, dst: torch.Tensor) -> torch.Tensor:
    """
    Squared Euclidean distance between each pair of points.

    Input:
        src: source points, [B, N, C]
        dst: target points, [B, M, C]
    Output:
        dist: per-pair squared distance, [B, N, M]
    """
    dist = -2 * torch.matmul(src, dst.transpose(1, 2))
    dist += torch.sum(src**2, -1)[:, :, None]
    dist += torch.sum(dst**2, -1)[:, None, :]
    return dist.clamp_min(0.0)


def index_points(points: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    """
    Input:
        points: input points data, [B, N, C]
        idx: sample index data, [B, S] or [B, S, K]
    Return:
        new_points: indexed points data, [B, S, C] or [B, S, K, C]
    """
    B = points.shape[0]
    view_shape = [B] + [1] * (idx.dim() - 1)
    batch_indices = torch.arange(B, dtype=torch.long, device=points.device).view(view_shape).expand_as(idx)
    return points[batch_indices, idx, :]


def farthest_point_sample(xyz: torch.Tensor, npoint: int) -> torch.Tensor:
    """
    Deterministic farthest point sampling.

    The first centroid is the point farthest from the cloud mean, so the
    selected set depends on the geometry only, not on the point order.

    Input:
        xyz: pointcloud data, [B, N, 3]
        npoint: number of samples
    Return:
        centroids: sampled pointcloud index, [B, npoint]
    """
    B, N, _ = xyz.shape
    device = xyz.device
    centroids = torch.zeros(B, npoint, dtype=torch.long, device=device)
    distance = torch.full((B, N), float("inf"), dtype=xyz.dtype, device=device)
    farthest = (xyz - xyz.mean(dim=1, keepdim=True)).pow(2).sum(-1).argmax(-1)
    batch_indices = torch.arange(B, dtype=torch.long, device=device)
    for i in range(npoint):
        centroids[:, i] = farthest
        centroid = xyz[batch_indices, farthest, :].view(B, 1, 3)
        dist = torch.sum((xyz - centroid) ** 2, -1)
        distance = torch.minimum(distance, dist)
        farthest = distance.argmax(-1)
    return centroids


def query_ball_point(radius: float, nsample: int, xyz: torch.Tensor, new_xyz: torch.Tensor) -> torch.Tensor:
    """
    Nearest neighbours within a radius, sorted by distance.

    Slots left empty (fewer than nsample points in the ball) repeat the
    nearest point, which is the centroid itself.

    Input:
        radius: local region radius
        nsample: max sample number in local region
        xyz: all points, [B, N, 3]
        new_xyz: query points, [B, S, 3]
    Return:
        group_idx: grouped points index, [B, S, nsample]
    """
    N = xyz.shape[1]
    sqrdists = square_distance(new_xyz, xyz)
    k = min(nsample, N)
    dists, group_idx = torch.topk(sqrdists, k, dim=-1, largest=False, sorted=True)
    outside = dists > radius**2
    group_idx = torch.where(outside, group_idx[:, :, :1].expand_as(group_idx), group_idx)
    if k < nsample:
        pad = group_idx[:, :, :1].expand(-1, -1, nsample - k)
        group_idx = torch.cat([group_idx, pad], dim=-1)
    return group_idx


class SetAbstraction(nn.Module):
    """Group around farthest-point centroids and max-pool a shared MLP."""

    def __init__(self, npoint: int, radius: float, nsample: int, in_channel: int, mlp: list[int], group_all: bool = False):
        super().__init__()
        self.npoint = npoint
        self.radius = radius
        self.nsample = nsample
        self.group_all = group_all
        self.mlp_convs = nn.ModuleList()
        last_channel = in_channel
        for out_channel in mlp:
            self.mlp_convs.append(nn.Conv2d(last_channel, out_channel, 1))
            last_channel = out_channel

    def forward(self, xyz: torch.Tensor, points: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """
        Input:
            xyz: input points position data, [B, 3, N]
            points: input points data, [B, D, N]
        Return:
            new_xyz: sampled points position data, [B, 3, S]
            new_points: sampled points feature data, [B, D', S]
        """
        xyz = xyz.permute(0, 2, 1)
        points = points.permute(0, 2, 1)

        if self.group_all:
            new_xyz = xyz.mean(dim=1, keepdim=True)
            grouped_xyz = (xyz - new_xyz)[:, None, :, :]
            grouped = torch.cat([grouped_xyz, points[:, None, :, :]], dim=-1)
        else:
            npoint = min(self.npoint, xyz.shape[1])
            fps_idx = farthest_point_sample(xyz, npoint)
            new_xyz = index_points(xyz, fps_idx)
            idx = query_ball_point(self.radius, self.nsample, xyz, new_xyz)
            grouped_xyz = index_points(xyz, idx) - new_xyz[:, :, None, :]
            grouped = torch.cat([grouped_xyz, index_points(points, idx)], dim=-1)

        # [B, C+D, nsample, S]
        new_points = grouped.permute(0, 3, 2, 1)
        for conv in self.mlp_convs:
            new_points = F.relu(conv(new_points))
        new_points = torch.max(new_points, 2)[0]
        return new_xyz.permute(0, 2, 1), new_points


class FeaturePropagation(nn.Module):
    """Inverse-distance interpolation from a coarse level plus a skip connection."""

    def __init__(self, in_channel: int, mlp: list[int]):
        super().__init__()
        self.mlp_convs = nn.ModuleList()
        last_channel = in_channel
        for out_channel in mlp:
            self.mlp_convs.append(nn.Conv1d(last_channel, out_channel, 1))
            last_channel = out_channel

    def forward(self, xyz1: torch.Tensor, xyz2: torch.Tensor, points1: torch.Tensor, points2: torch.Tensor) -> torch.Tensor:
        """
        Input:
            xyz1: dense positions, [B, 3, N]
            xyz2: coarse positions, [B, 3, S]
            points1: dense features, [B, D1, N]
            points2: coarse features, [B, D2, S]
        Return:
            new_points: upsampled features, [B, D', N]
        """
        xyz1 = xyz1.permute(0, 2, 1)
        xyz2 = xyz2.permute(0, 2, 1)
        points2 = points2.permute(0, 2, 1)
        B, N, _ = xyz1.shape
        S = xyz2.shape[1]

        if S == 1:
            interpolated = points2.expand(B, N, points2.shape[-1])
        else:
            k = min(3, S)
            dists, idx = torch.topk(square_distance(xyz1, xyz2), k, dim=-1, largest=False, sorted=True)
            dist_recip = 1.0 / (dists + 1e-8)
            weight = dist_recip / dist_recip.sum(dim=2, keepdim=True)
            interpolated = torch.sum(index_points(points2, idx) * weight[..., None], dim=2)

        new_points = torch.cat([points1.permute(0, 2, 1), interpolated], dim=-1).permute(0, 2, 1)
        for conv in self.mlp_convs:
            new_points = F.relu(conv(new_points))
        return new_points


class PointEncoder(nn.Module):
    """
    Per-point scene encoder: canonical xyz plus a one-hot segment label in,
    feature_dim channels per point out.
    """

    def __init__(self, cfg: NetsConfig):
        super().__init__()
        c0 = 3 + LABEL_CHANNELS
        n1, n2 = cfg.sa_centroids
        r1, r2 = cfg.sa_radii
        self.sa1 = SetAbstraction(n1, r1, cfg.sa_neighbours, 3 + c0, [32, 32, 64])
        self.sa2 = SetAbstraction(n2, r2, cfg.sa_neighbours, 3 + 64, [64, 64, 128])
        self.sa3 = SetAbstraction(1, float("inf"), 1, 3 + 128, [128, 256], group_all=True)
        self.fp3 = FeaturePropagation(128 + 256, [256, 128])
        self.fp2 = FeaturePropagation(64 + 128, [128, 128])
        self.fp1 = FeaturePropagation(c0 + 128, [128, 128])
        self.head = nn.Conv1d(128, cfg.feature_dim, 1)

    def forward(self, xyz: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
        """
        Args:
            xyz: Canonical point coordinates, [B, N, 3].
            labels: Segment labels (1 object, 0 environment), [B, N].

        Returns:
            torch.Tensor: Per-point features, [B, N, feature_dim].
        """
        one_hot = F.one_hot(labels.long(), LABEL_CHANNELS).to(xyz.dtype)
        l0_xyz = xyz.permute(0, 2, 1)
        l0_points = torch.cat([xyz, one_hot], dim=-1).permute(0, 2, 1)

        l1_xyz, l1_points = self.sa1(l0_xyz, l0_points)
        l2_xyz, l2_points = self.sa2(l1_xyz, l1_points)
        l3_xyz, l3_points = self.sa3(l2_xyz, l2_points)

        l2_points = self.fp3(l2_xyz, l3_xyz, l2_points, l3_points)
        l1_points = self.fp2(l1_xyz, l2_xyz, l1_points, l2_points)
        l0_points = self.fp1(l0_xyz, l1_xyz, l0_points, l1_points)
        return self.head(l0_points).permute(0, 2, 1)
