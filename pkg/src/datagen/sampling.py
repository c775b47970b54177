"""
Samplers for collection episodes: object poses relative to a feature, push
contacts, directions and magnitudes, and hemisphere grasps.
"""

from typing import Optional

import numpy as np
from scipy.stats import truncnorm

from src.config import SceneSimConfig
from src.errors import SceneSpecError
from src.scenesim import (
    SIDE_NORMALS,
    Edge,
    EnvFeatureSpec,
    GraspAction,
    ObjectModel,
    ObjectPose,
    Slope,
    Slot,
    Wall,
    feature_geometry,
    footprint_polygon,
    grasp_from_axes,
    lower_height,
    nearest_feature_point,
    place_object,
    settle_pose,
    surface_normal,
    world_vertices,
)

TWO_PI = 2.0 * np.pi


def _span(points: np.ndarray, axis: np.ndarray) -> tuple[float, float]:
    s = points @ axis
    return float(s.min()), float(s.max())


def _feature_frame(env: EnvFeatureSpec, feature, rng: np.random.Generator):
    """
    Outward axis n toward the feature, the feature boundary n.p = c, the
    lateral axis t and the lateral span of the feature along t.
    """
    table_corners = np.array(env.table.polygon.exterior.coords)
    if isinstance(feature, (Edge, Wall)):
        n = np.asarray(SIDE_NORMALS[feature.side], dtype=float)
        c = env.side_coordinate(feature.side) if isinstance(feature, Edge) else env.wall_face(feature)
        corners = table_corners
    elif isinstance(feature, Slope):
        n = np.asarray(feature.direction, dtype=float)
        c = feature.foot
        corners = np.array(feature.rect.polygon.exterior.coords)
    elif isinstance(feature, Slot):
        lo, hi = feature.lips
        if rng.random() < 0.5:
            n, c = np.asarray(feature.across, dtype=float), lo
        else:
            n, c = -np.asarray(feature.across, dtype=float), -hi
        corners = np.array(feature.rect.polygon.exterior.coords)
    else:
        raise SceneSpecError(f"Unsupported feature {feature!r}")
    t = np.array([-n[1], n[0]])
    return n, c, t, _span(corners, t)


def _pose_against(
    env: EnvFeatureSpec,
    obj: ObjectModel,
    frame,
    gap: float,
    yaw: float,
    u: float,
    cfg: SceneSimConfig,
) -> Optional[ObjectPose]:
    """Object at yaw whose extreme point toward the feature sits `gap` short of it."""
    n, c, t, (t_lo, t_hi) = frame
    verts = world_vertices(obj, 0.0, 0.0, yaw)
    lat_lo, lat_hi = _span(verts, t)
    lo, hi = t_lo - lat_lo, t_hi - lat_hi
    if lo > hi:
        lo = hi = 0.5 * (t_lo + t_hi)
    com = (c - gap - float((verts @ n).max())) * n + (lo + u * (hi - lo)) * t
    try:
        pose = place_object(env, obj, float(com[0]), float(com[1]), yaw, cfg)
    except SceneSpecError:
        return None
    return pose


def _clear_of_features(env: EnvFeatureSpec, poly) -> bool:
    for _, fp in env.footprints():
        if poly.intersection(fp).area > 1e-12:
            return False
    return True


def feature_distance_pose(
    env: EnvFeatureSpec,
    obj: ObjectModel,
    distance: float,
    rng: np.random.Generator,
    feature=None,
    cfg: Optional[SceneSimConfig] = None,
    tries: int = 20,
) -> Optional[ObjectPose]:
    """
    Flat pose on the open table whose footprint is exactly `distance` from a feature.

    The feature defaults to a random one of the scene. Returns None when no
    sampled yaw / lateral offset fits.
    """
    cfg = cfg or SceneSimConfig()
    if feature is None:
        feature = env.features[int(rng.integers(len(env.features)))]
    geom = feature_geometry(env, feature)
    table = env.table.polygon.buffer(1e-9)
    for _ in range(tries):
        frame = _feature_frame(env, feature, rng)
        yaw = float(rng.uniform(-np.pi, np.pi))
        pose = _pose_against(env, obj, frame, distance, yaw, float(rng.random()), cfg)
        if pose is None or pose.tilt != 0.0:
            continue
        poly = footprint_polygon(obj, pose)
        if not table.contains(poly) or not _clear_of_features(env, poly):
            continue
        if abs(poly.distance(geom) - distance) <= 1e-6:
            return pose
    return None


def feature_pose(
    env: EnvFeatureSpec,
    obj: ObjectModel,
    rng: np.random.Generator,
    cfg: Optional[SceneSimConfig] = None,
) -> Optional[ObjectPose]:
    """
    Pose upon a random feature: overhanging an edge, pinned against a wall
    with a random tilt, partly on a slope, or bridging / tipping over a slot.
    """
    cfg = cfg or SceneSimConfig()
    feature = env.features[int(rng.integers(len(env.features)))]
    yaw = float(rng.uniform(-np.pi, np.pi))
    frame = _feature_frame(env, feature, rng)
    n = frame[0]
    lo, hi = _span(world_vertices(obj, 0.0, 0.0, yaw), n)
    extent = hi - lo

    if isinstance(feature, Edge):
        gap = -float(rng.uniform(0.0, hi))
    elif isinstance(feature, Wall):
        gap = 0.0
    elif isinstance(feature, Slope):
        gap = -float(rng.uniform(0.0, extent))
    else:
        width = feature.lips[1] - feature.lips[0]
        gap = -float(rng.uniform(0.0, extent + width))

    pose = _pose_against(env, obj, frame, gap, yaw, float(rng.random()), cfg)
    if pose is None or not pose.supported:
        return None
    if isinstance(feature, Wall):
        tilt = float(rng.uniform(0.0, cfg.tilt_max))
        pose = settle_pose(env, obj, pose.x, pose.y, yaw, cfg, wall_tilt=tilt)
    return pose


def random_table_pose(
    env: EnvFeatureSpec,
    obj: ObjectModel,
    rng: np.random.Generator,
    cfg: Optional[SceneSimConfig] = None,
) -> Optional[ObjectPose]:
    """COM uniform on the table, yaw uniform; None if it lands in a wall."""
    x = float(rng.uniform(0.0, env.table_width))
    y = float(rng.uniform(0.0, env.table_depth))
    yaw = float(rng.uniform(-np.pi, np.pi))
    try:
        return place_object(env, obj, x, y, yaw, cfg)
    except SceneSpecError:
        return None


def sample_push_direction(
    rng: np.random.Generator,
    env: EnvFeatureSpec,
    com,
    directed_fraction: float,
    sigma: float,
) -> float:
    """
    Push heading in [0, 2pi).

    With probability directed_fraction the heading points from the COM at
    the nearest feature point plus Normal(0, sigma) noise; otherwise it is
    uniform.
    """
    directed = rng.random() < directed_fraction
    if directed:
        _, target = nearest_feature_point(env, com)
        delta = target - np.asarray(com, dtype=float)[:2]
        return float((np.arctan2(delta[1], delta[0]) + rng.normal(0.0, sigma)) % TWO_PI)
    return float(rng.uniform(0.0, TWO_PI))


def sample_push_magnitude(rng: np.random.Generator, mean: float, std: float, push_max: float) -> float:
    """Normal(mean, std) truncated to (0, push_max]."""
    a, b = (0.0 - mean) / std, (push_max - mean) / std
    return float(truncnorm.rvs(a, b, loc=mean, scale=std, random_state=rng))


def sample_boundary_contact(obj: ObjectModel, pose: ObjectPose, rng: np.random.Generator) -> tuple[float, float, float]:
    """Point uniform in arc length on the footprint boundary, at mid-thickness."""
    ring = footprint_polygon(obj, pose).exterior
    q = ring.interpolate(float(rng.uniform(0.0, ring.length)))
    z = float(lower_height(pose, q.x, q.y)) + obj.thickness / 2
    return float(q.x), float(q.y), z


def sample_hemisphere_grasp(state, contact, rng: np.random.Generator) -> GraspAction:
    """
    Grasp at a surface point with the gripper side uniform on the hemisphere
    above the tangent plane and a uniform roll about the approach axis.
    """
    normal = surface_normal(state, contact)
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    if v @ normal < 0:
        v = -v
    approach = -v
    g = rng.normal(size=3)
    g -= (g @ approach) * approach
    return grasp_from_axes(contact, g, approach)
