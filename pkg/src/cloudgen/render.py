"""Ray-cast rendering of labelled point clouds."""

import logging
from typing import Optional

import numpy as np

from src.config import CloudGenConfig
from src.errors import ObjectOccluded, RenderFailed
from src.scenesim import SceneState, world_vertices

from .camera import CameraPose, object_centre, sample_camera
from .cloud import LabeledPointCloud
from .faces import OBJECT, scene_faces

logger = logging.getLogger("cloudgen")

MIN_POINTS = 256


def _ray_targets(
    state: SceneState,
    camera: CameraPose,
    rng: np.random.Generator,
    count: int,
    cfg: CloudGenConfig,
) -> np.ndarray:
    pose = state.pose
    verts = world_vertices(state.object, pose.x, pose.y, pose.yaw)
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    n_object = int(round(count * cfg.object_ray_fraction))
    centre = object_centre(state)

    on_object = np.column_stack([
        rng.uniform(lo[0], hi[0], n_object),
        rng.uniform(lo[1], hi[1], n_object),
        np.full(n_object, centre[2]),
    ])
    look = np.asarray(camera.look_at)
    around = np.column_stack([
        rng.uniform(look[0] - cfg.window_half, look[0] + cfg.window_half, count - n_object),
        rng.uniform(look[1] - cfg.window_half, look[1] + cfg.window_half, count - n_object),
        np.zeros(count - n_object),
    ])
    return np.vstack([on_object, around])


def render_cloud(
    state: SceneState,
    camera: CameraPose,
    n_points: Optional[int] = None,
    seed=0,
    cfg: Optional[CloudGenConfig] = None,
) -> LabeledPointCloud:
    """
    Cast rays from the camera and keep the first N surface hits.

    Args:
        state: Scene to observe.
        camera: Camera pose.
        n_points: Number of points N (default cfg.n_points, at least 256).
        seed: Ray sampling seed.
        cfg: Rendering parameters.

    Returns:
        LabeledPointCloud: Exactly N visible points labelled object (1) or environment (0).

    Raises:
        ObjectOccluded: If no ray reaches the object.
        RenderFailed: If fewer than N rays hit any surface within max_batches.
    """
    cfg = cfg or CloudGenConfig()
    n_points = n_points or cfg.n_points
    if n_points < MIN_POINTS:
        raise ValueError(f"n_points must be at least {MIN_POINTS}, got {n_points}")

    rng = np.random.default_rng(seed)
    faces = scene_faces(state)
    origin = np.asarray(camera.position, dtype=float)
    points, labels = [], []
    collected = 0

    for _ in range(cfg.max_batches):
        targets = _ray_targets(state, camera, rng, cfg.ray_batch, cfg)
        dirs = targets - origin
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

        depth = np.full(len(dirs), np.inf)
        owner = np.zeros(len(dirs), dtype=np.uint8)
        for face in faces:
            t = face.intersect(origin, dirs)
            closer = t < depth
            depth[closer] = t[closer]
            owner[closer] = face.label

        hit = np.isfinite(depth)
        points.append(origin + depth[hit, None] * dirs[hit])
        labels.append(owner[hit])
        collected += int(hit.sum())
        if collected >= n_points:
            break
    else:
        raise RenderFailed(f"Only {collected} of {n_points} rays hit the scene")

    points = np.concatenate(points)[:n_points]
    labels = np.concatenate(labels)[:n_points]
    if not (labels == OBJECT).any():
        raise ObjectOccluded(f"Object {state.object.id} is not visible from {camera.position}")
    return LabeledPointCloud(points=points, labels=labels, camera=camera)


def observe(
    state: SceneState,
    seed,
    cfg: Optional[CloudGenConfig] = None,
    n_points: Optional[int] = None,
) -> LabeledPointCloud:
    """
    Sample a camera and render, trying a fresh camera when the object is occluded.

    Attempt k uses the seed sequence [seed, k] for both camera and rays, so
    the resulting cloud is a pure function of (state, seed).

    Raises:
        ObjectOccluded: If all camera_retries cameras fail to see the object.
    """
    cfg = cfg or CloudGenConfig()
    for attempt in range(cfg.camera_retries):
        camera = sample_camera(state, [seed, attempt], cfg)
        try:
            return render_cloud(state, camera, n_points, [seed, attempt], cfg)
        except ObjectOccluded:
            logger.debug(f"Camera {attempt} cannot see {state.object.id}, resampling")
    raise ObjectOccluded(
        f"Object {state.object.id} occluded from {cfg.camera_retries} sampled cameras"
    )
