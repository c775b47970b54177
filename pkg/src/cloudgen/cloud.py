"""
Labelled point clouds, canonicalisation, normals and the PGRC binary record.

PGRC layout (little-endian):
    magic  4 bytes  b"PGRC"
    version u16
    N       u32
    N x (x f32, y f32, z f32, label u8)
Points are stored in world coordinates; the camera is not stored.
"""

import struct
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from src.errors import CorruptFile, SchemaMismatch

from .camera import CameraPose

CLOUD_MAGIC = b"PGRC"
CLOUD_VERSION = 1
_HEADER = struct.Struct("<4sHI")
_RECORD = np.dtype([("xyz", "<f4", (3,)), ("label", "u1")])


@dataclass(frozen=True, eq=False)
class LabeledPointCloud:
    """N points with per-point object (1) / environment (0) labels; world = points + origin."""

    points: np.ndarray
    labels: np.ndarray
    camera: Optional[CameraPose] = None
    origin: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"points must be N x 3, got {self.points.shape}")
        if self.labels.shape != (len(self.points),):
            raise ValueError("labels must align with points")

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def object_mask(self) -> np.ndarray:
        return self.labels == 1

    @property
    def object_indices(self) -> np.ndarray:
        return np.flatnonzero(self.object_mask)

    def world_points(self) -> np.ndarray:
        return self.points + np.asarray(self.origin)

    def equals(self, other: "LabeledPointCloud") -> bool:
        """Bit-exact equality of points, labels and origin."""
        return (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
            and tuple(self.origin) == tuple(other.origin)
        )


def canonicalize(cloud: LabeledPointCloud) -> LabeledPointCloud:
    """
    Translate the cloud so the object-point centroid sits at the origin.

    No rotation or scaling is applied. A cloud that is already centred (or
    has no object points) is returned unchanged, which makes the operation
    idempotent.
    """
    mask = cloud.object_mask
    if not mask.any():
        return cloud
    centroid = cloud.points[mask].mean(axis=0)
    if np.abs(centroid).max() <= 1e-9:
        return cloud
    origin = tuple(float(v) for v in np.asarray(cloud.origin) + centroid)
    return replace(cloud, points=cloud.points - centroid, origin=origin)


def encode_cloud(cloud: LabeledPointCloud) -> bytes:
    records = np.empty(cloud.n_points, dtype=_RECORD)
    records["xyz"] = cloud.world_points()
    records["label"] = cloud.labels
    return _HEADER.pack(CLOUD_MAGIC, CLOUD_VERSION, cloud.n_points) + records.tobytes()


def decode_cloud(data: bytes) -> LabeledPointCloud:
    """
    Parse a PGRC record.

    Raises:
        CorruptFile: On a bad magic or a truncated payload.
        SchemaMismatch: On an unsupported version.
    """
    if len(data) < _HEADER.size:
        raise CorruptFile("Cloud record shorter than its header")
    magic, version, n = _HEADER.unpack_from(data)
    if magic != CLOUD_MAGIC:
        raise CorruptFile(f"Bad cloud magic {magic!r}")
    if version != CLOUD_VERSION:
        raise SchemaMismatch(f"Unsupported cloud version {version}")
    expected = _HEADER.size + n * _RECORD.itemsize
    if len(data) != expected:
        raise CorruptFile(f"Cloud record has {len(data)} bytes, expected {expected}")
    records = np.frombuffer(data, dtype=_RECORD, count=n, offset=_HEADER.size)
    return LabeledPointCloud(
        points=records["xyz"].astype(np.float64),
        labels=records["label"].copy(),
    )


def estimate_normals(cloud: LabeledPointCloud, k: int = 16) -> np.ndarray:
    """
    Unit surface normals by PCA over the k nearest neighbours.

    Normals are flipped toward the camera when one is attached, else toward +z.
    """
    points = cloud.points
    k = min(k, len(points))
    _, idx = cKDTree(points).query(points, k=k)
    neighbours = points[idx]
    centred = neighbours - neighbours.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centred, centred) / k
    _, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0]
    if cloud.camera is not None:
        view = np.asarray(cloud.camera.position) - cloud.world_points()
    else:
        view = np.tile([0.0, 0.0, 1.0], (len(points), 1))
    flip = np.einsum("ni,ni->n", normals, view) < 0
    normals[flip] *= -1
    return normals
