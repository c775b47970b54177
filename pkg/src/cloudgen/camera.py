"""Virtual depth-camera placement."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.config import CloudGenConfig
from src.scenesim import SceneState, lower_height


@dataclass(frozen=True)
class CameraPose:
    """Camera centre looking at `look_at` with world-up `up`."""

    position: tuple[float, float, float]
    look_at: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.subtract(self.position, self.look_at)))

    def to_json(self) -> dict:
        return {"position": list(self.position), "look_at": list(self.look_at), "up": list(self.up)}

    @classmethod
    def from_json(cls, doc: dict) -> "CameraPose":
        return cls(tuple(doc["position"]), tuple(doc["look_at"]), tuple(doc.get("up", (0.0, 0.0, 1.0))))


def object_centre(state: SceneState) -> np.ndarray:
    """COM of the object at mid-thickness."""
    pose = state.pose
    z = float(lower_height(pose, pose.x, pose.y)) + state.object.thickness / 2
    return np.array([pose.x, pose.y, z])


def sample_camera(state: SceneState, seed, cfg: Optional[CloudGenConfig] = None) -> CameraPose:
    """
    Draw a camera on the upper spherical shell around the object.

    The viewing direction is uniform on the cap of elevations at or above
    min_elevation_deg and the distance is uniform on [distance_min, distance_max].

    Args:
        state: Scene whose object is looked at.
        seed: Anything numpy.random.default_rng accepts.
        cfg: Camera parameters.

    Returns:
        CameraPose: Deterministic in `seed`.
    """
    cfg = cfg or CloudGenConfig()
    rng = np.random.default_rng(seed)
    z = rng.uniform(np.sin(np.radians(cfg.min_elevation_deg)), 1.0)
    azimuth = rng.uniform(0.0, 2 * np.pi)
    distance = rng.uniform(cfg.distance_min, cfg.distance_max)
    rho = np.sqrt(max(0.0, 1.0 - z * z))
    direction = np.array([rho * np.cos(azimuth), rho * np.sin(azimuth), z])
    target = object_centre(state)
    position = target + distance * direction
    return CameraPose(
        position=tuple(float(v) for v in position),
        look_at=tuple(float(v) for v in target),
    )
