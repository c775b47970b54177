"""
Affordance heatmaps: a labelled cloud coloured by per-point score.

Scores are drawn with the "jet" colormap on a fixed [0, 1] range, so red
marks the most promising interaction points and an all-zero map comes out
uniformly dark blue whatever the cloud.
"""

import io
import logging
import os
from typing import Optional

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from src.cloudgen import CameraPose, LabeledPointCloud
from src.storage import BaseStorage, LocalStorage

logger = logging.getLogger("cli")

COLORMAP = "jet"
VIEWS = ("top", "camera")


def project_camera(points: np.ndarray, camera: CameraPose) -> tuple[np.ndarray, np.ndarray]:
    """
    Pinhole projection of world points onto the camera image plane.

    Returns:
        tuple: (N x 2 normalised image coordinates, N depths along the optical axis).
    """
    position = np.asarray(camera.position, dtype=float)
    forward = np.asarray(camera.look_at, dtype=float) - position
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(camera.up, dtype=float))
    if np.linalg.norm(right) < 1e-9:
        # looking straight down the up vector
        right = np.cross(forward, (0.0, 1.0, 0.0))
    right /= np.linalg.norm(right)
    up = np.cross(right, forward)

    rel = points - position
    depth = rel @ forward
    safe = np.where(depth > 1e-9, depth, 1e-9)
    uv = np.stack([rel @ right / safe, rel @ up / safe], axis=1)
    return uv, depth


def affordance_figure(
    cloud: LabeledPointCloud,
    scores: np.ndarray,
    view: str = "top",
    title: Optional[str] = None,
) -> Figure:
    """
    Scatter the cloud coloured by score.

    Args:
        cloud: Observed cloud.
        scores: One score per point, aligned with the cloud.
        view: "top" (orthographic, looking down -z) or "camera" (the
            cloud's own camera pose).
        title: Optional axes title.

    Raises:
        ValueError: On an unknown view, misaligned scores, or a camera view
            of a cloud without a camera.
    """
    if view not in VIEWS:
        raise ValueError(f"Unknown view {view!r}; expected one of {', '.join(VIEWS)}")
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (cloud.n_points,):
        raise ValueError(f"Expected {cloud.n_points} scores, got shape {scores.shape}")

    points = cloud.world_points()
    if view == "top":
        # higher points drawn last so they stay visible
        order = np.argsort(points[:, 2], kind="stable")
        xy = points[order, :2]
        xlabel, ylabel = "x (m)", "y (m)"
    else:
        if cloud.camera is None:
            raise ValueError("Cloud carries no camera pose; use the top view")
        uv, depth = project_camera(points, cloud.camera)
        # far points first
        order = np.argsort(-depth, kind="stable")
        xy = uv[order]
        xlabel, ylabel = "u", "v"

    fig = Figure(figsize=(6, 5), dpi=100)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    sc = ax.scatter(xy[:, 0], xy[:, 1], c=scores[order], cmap=COLORMAP, vmin=0.0, vmax=1.0, s=6, linewidths=0)
    fig.colorbar(sc, ax=ax, label="affordance")
    ax.set_aspect("equal")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return fig


def save_figure(
    fig: Figure,
    path: str,
    metadata: Optional[dict[str, str]] = None,
    storage: Optional[BaseStorage] = None,
) -> str:
    """Write a figure as PNG; metadata goes into the PNG text chunks."""
    storage = storage or LocalStorage()
    buffer = io.BytesIO()
    fig.savefig(buffer, format="png", metadata=metadata or {})
    workspace = storage.create_workspace(os.path.dirname(path))
    saved = storage.save_bytes(workspace, os.path.basename(path), buffer.getvalue())
    logger.info(f"Saved affordance map to {saved}")
    return saved
