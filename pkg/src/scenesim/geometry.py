"""
Closed-form scene geometry: support surfaces, object placement and tilt
settling, surface queries and feature contact summaries.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon, box
from shapely.ops import nearest_points

from src.config import SceneSimConfig
from src.errors import ContactOffObject, SceneSpecError

from .types import (
    SIDE_NORMALS,
    Edge,
    EnvFeatureSpec,
    Feature,
    ObjectModel,
    ObjectPose,
    SceneState,
    Slope,
    Slot,
    Wall,
)

WALL_TOUCH_TOL = 1e-6
OVERLAP_TOL = 1e-9


def rotation2d(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s], [s, c]])


def axis_for_rise(rise: np.ndarray) -> tuple[float, float]:
    """Tilt axis whose +90 degree rotation is `rise`."""
    return (float(rise[1]), float(-rise[0]))


def world_vertices(obj: ObjectModel, x: float, y: float, yaw: float) -> np.ndarray:
    return obj.local_vertices @ rotation2d(yaw).T + np.array([x, y])


def footprint_polygon(obj: ObjectModel, pose: ObjectPose) -> Polygon:
    return Polygon(world_vertices(obj, pose.x, pose.y, pose.yaw))


def lower_height(pose: ObjectPose, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Height of the object's lower surface above footprint points (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if pose.tilt == 0.0:
        return np.full(np.broadcast(x, y).shape, pose.elevation)
    r = pose.rise
    along = (x - pose.x) * r[0] + (y - pose.y) * r[1]
    return pose.elevation + np.tan(pose.tilt) * (along - pose.pivot)


def support_height(env: EnvFeatureSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Height of the highest support surface beneath (x, y); the floor beyond the table."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x, y = x.ravel(), y.ravel()
    out = np.full(x.shape, -env.table_height)
    out[env.table.contains(x, y)] = 0.0
    for slot in env.slots:
        out[slot.rect.contains(x, y)] = -slot.depth
    for slope in env.slopes:
        inside = slope.rect.contains(x, y)
        out[inside] = slope.height_at(x[inside], y[inside])
    for wall in env.walls:
        out[env.wall_rect(wall).contains(x, y)] = wall.height
    return out.reshape(shape)


def is_supported(env: EnvFeatureSpec, pose: ObjectPose) -> bool:
    """The COM ground projection must lie on the (closed) table rectangle."""
    return bool(0.0 <= pose.x <= env.table_width and 0.0 <= pose.y <= env.table_depth)


def _tilted(
    x: float, y: float, yaw: float, rise: np.ndarray, tilt: float, hinge: float,
    com_along: float, elevation: float, contact: str, cfg: SceneSimConfig,
) -> ObjectPose:
    return ObjectPose(
        x=x,
        y=y,
        yaw=yaw,
        tilt=float(min(max(tilt, 0.0), cfg.tilt_max)),
        tilt_axis=axis_for_rise(rise),
        elevation=float(elevation),
        pivot=float(hinge - com_along),
        supported=True,
        contact=contact,
    )


def _wall_touching(env: EnvFeatureSpec, verts: np.ndarray) -> Optional[Wall]:
    for wall in env.walls:
        n = np.asarray(SIDE_NORMALS[wall.side])
        if (verts @ n).max() >= env.wall_face(wall) - WALL_TOUCH_TOL:
            return wall
    return None


def settle_pose(
    env: EnvFeatureSpec,
    obj: ObjectModel,
    x: float,
    y: float,
    yaw: float,
    cfg: Optional[SceneSimConfig] = None,
    wall_tilt: float = 0.0,
) -> ObjectPose:
    """
    Resolve the tilt of an object at planar pose (x, y, yaw).

    Priority is wall > slope > slot > flat. A wall tilt is only kept while
    the footprint still touches the wall face; slope and slot tilts are
    closed-form functions of the footprint's overlap with the feature.

    Args:
        env: Scene features.
        obj: Object model.
        x, y, yaw: Planar pose of the COM.
        cfg: Simulator constants (tilt_max).
        wall_tilt: Tilt accumulated by pushing into a wall.

    Returns:
        ObjectPose: The settled pose, marked unsupported when the COM is off the table.
    """
    cfg = cfg or SceneSimConfig()
    x, y, yaw = float(x), float(y), float(yaw)
    com = np.array([x, y])
    if not (0.0 <= x <= env.table_width and 0.0 <= y <= env.table_depth):
        return ObjectPose(x, y, yaw, supported=False, contact="fallen")

    verts = world_vertices(obj, x, y, yaw)

    wall = _wall_touching(env, verts)
    if wall is not None and wall_tilt > 0.0:
        n = np.asarray(SIDE_NORMALS[wall.side])
        s = verts @ n
        return _tilted(x, y, yaw, n, wall_tilt, s.min(), com @ n, 0.0, "wall", cfg)

    footprint = Polygon(verts)

    for slope in env.slopes:
        if footprint.intersection(slope.rect.polygon).area <= OVERLAP_TOL:
            continue
        u = slope.direction
        s = verts @ u - slope.foot
        s_min, s_max = float(s.min()), float(s.max())
        s_end = min(s_max, slope.length)
        if s_end - s_min <= 1e-12 or s_end <= 0.0:
            continue
        k = np.tan(slope.incline)
        h_rear = k * np.clip(s_min, 0.0, slope.length)
        h_front = k * np.clip(s_end, 0.0, slope.length)
        tilt = np.arctan((h_front - h_rear) / (s_end - s_min))
        return _tilted(
            x, y, yaw, u, tilt, s_min + slope.foot, com @ u, h_rear, "slope", cfg
        )

    for slot in env.slots:
        if footprint.intersection(slot.rect.polygon).area <= OVERLAP_TOL:
            continue
        e = slot.across
        lo, hi = slot.lips
        s = verts @ e
        s_min, s_max, s_c = float(s.min()), float(s.max()), float(com @ e)
        if s_min < lo and s_max > hi:
            break  # bridges the slot
        if s_min < lo:
            if s_c <= lo:
                break
            tilt = np.arctan(slot.depth / max(s_max - lo, 1e-9))
            return _tilted(x, y, yaw, -e, tilt, -lo, -s_c, 0.0, "slot", cfg)
        if s_max > hi:
            if s_c >= hi:
                break
            tilt = np.arctan(slot.depth / max(hi - s_min, 1e-9))
            return _tilted(x, y, yaw, e, tilt, hi, s_c, 0.0, "slot", cfg)
        # Narrower than the slot: tip about the lower lip
        tilt = np.arctan(slot.depth / max(s_max - lo, 1e-9))
        return _tilted(x, y, yaw, -e, tilt, -lo, -s_c, 0.0, "slot", cfg)

    return ObjectPose(x, y, yaw)


def wall_penetration(env: EnvFeatureSpec, obj: ObjectModel, x: float, y: float, yaw: float) -> float:
    """Largest penetration depth of the footprint into any wall box."""
    verts = world_vertices(obj, x, y, yaw)
    depth = 0.0
    for wall in env.walls:
        n = np.asarray(SIDE_NORMALS[wall.side])
        depth = max(depth, float((verts @ n).max() - env.wall_face(wall)))
    return depth


def place_object(
    env: EnvFeatureSpec,
    obj: ObjectModel,
    x: float,
    y: float,
    yaw: float,
    cfg: Optional[SceneSimConfig] = None,
) -> ObjectPose:
    """
    Put an object down at a planar pose and settle its tilt.

    Raises:
        SceneSpecError: If the footprint penetrates a wall.
    """
    if wall_penetration(env, obj, x, y, yaw) > WALL_TOUCH_TOL:
        raise SceneSpecError(f"Object {obj.id} placed inside a wall at ({x:.3f}, {y:.3f})")
    return settle_pose(env, obj, x, y, yaw, cfg)


def object_contains(state: SceneState, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Membership of 3-D points in the object solid."""
    points = np.atleast_2d(points)
    poly = footprint_polygon(state.object, state.pose)
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    in_xy = shapely.intersects_xy(poly, x, y)
    h = lower_height(state.pose, x, y)
    return in_xy & (z >= h - tol) & (z <= h + state.object.thickness + tol)


def _height_at_xy(pose: ObjectPose, xy: np.ndarray) -> float:
    return float(lower_height(pose, xy[0], xy[1]))


def surface_distance(state: SceneState, point) -> float:
    """Distance from a 3-D point to the object's surface."""
    p = np.asarray(point, dtype=float)
    poly = footprint_polygon(state.object, state.pose)
    q = Point(p[0], p[1])
    thickness = state.object.thickness
    d_edge = poly.exterior.distance(q)
    h = _height_at_xy(state.pose, p[:2])
    top = h + thickness
    if poly.covers(q):
        if h <= p[2] <= top:
            return float(min(d_edge, p[2] - h, top - p[2]))
        return float(p[2] - top if p[2] > top else h - p[2])
    near, _ = nearest_points(poly.exterior, q)
    h_rim = _height_at_xy(state.pose, np.array([near.x, near.y]))
    dz = max(h_rim - p[2], 0.0, p[2] - (h_rim + thickness))
    return float(np.hypot(d_edge, dz))


def surface_normal(state: SceneState, point) -> np.ndarray:
    """Outward unit normal of the object face nearest to a surface point."""
    p = np.asarray(point, dtype=float)
    pose = state.pose
    poly = footprint_polygon(state.object, pose)
    q = Point(p[0], p[1])
    h = _height_at_xy(pose, p[:2])
    top = h + state.object.thickness
    d_edge = poly.exterior.distance(q) if poly.covers(q) else 0.0
    d_top = abs(p[2] - top)
    d_bottom = abs(p[2] - h)

    slope_xy = np.tan(pose.tilt) * pose.rise
    if d_edge > 0.0 and d_top <= min(d_edge, d_bottom):
        n = np.array([-slope_xy[0], -slope_xy[1], 1.0])
        return n / np.linalg.norm(n)
    if d_edge > 0.0 and d_bottom < d_edge:
        n = np.array([slope_xy[0], slope_xy[1], -1.0])
        return n / np.linalg.norm(n)

    # Side face: outward normal of the nearest footprint edge
    verts = np.asarray(poly.exterior.coords)[:-1]
    best, best_d = 0, np.inf
    for i in range(len(verts)):
        seg = LineString([verts[i], verts[(i + 1) % len(verts)]])
        d = seg.distance(q)
        if d < best_d:
            best, best_d = i, d
    a, b = verts[best], verts[(best + 1) % len(verts)]
    t = b - a
    n2 = np.array([t[1], -t[0]]) / np.linalg.norm(t)  # CCW polygon: right normal points out
    return np.array([n2[0], n2[1], 0.0])


def clearance_at(state: SceneState, point, cfg: Optional[SceneSimConfig] = None) -> float:
    """
    Vertical free gap between the object's lower rim at `point` and the support beneath it.

    Raises:
        ContactOffObject: If the point is farther than eps_contact from the surface.
    """
    cfg = cfg or SceneSimConfig()
    p = np.asarray(point, dtype=float)
    if surface_distance(state, p) > cfg.eps_contact:
        raise ContactOffObject(f"Point {p.tolist()} is not on the object surface")
    h = _height_at_xy(state.pose, p[:2])
    support = float(support_height(state.env, p[0], p[1]))
    return max(0.0, h - support)


def feature_geometry(env: EnvFeatureSpec, feature: Feature):
    """Shapely geometry standing for a feature: side line, wall face, slope or slot rectangle."""
    w, d = env.table_width, env.table_depth
    lines = {
        "+x": lambda c: LineString([(c, 0.0), (c, d)]),
        "-x": lambda c: LineString([(c, 0.0), (c, d)]),
        "+y": lambda c: LineString([(0.0, c), (w, c)]),
        "-y": lambda c: LineString([(0.0, c), (w, c)]),
    }
    if isinstance(feature, Edge):
        c = env.side_coordinate(feature.side)
        return lines[feature.side](c)
    if isinstance(feature, Wall):
        rect = env.wall_rect(feature)
        c = {
            "+x": rect.x_min,
            "-x": rect.x_max,
            "+y": rect.y_min,
            "-y": rect.y_max,
        }[feature.side]
        return lines[feature.side](c)
    return feature.rect.polygon


def nearest_feature_point(env: EnvFeatureSpec, xy) -> tuple[Feature, np.ndarray]:
    """Closest point over all scene features to a planar location."""
    q = Point(float(xy[0]), float(xy[1]))
    best = None
    for feature in env.features:
        geom = feature_geometry(env, feature)
        _, near = nearest_points(q, geom)
        dist = q.distance(near)
        if best is None or dist < best[0]:
            best = (dist, feature, np.array([near.x, near.y]))
    if best is None:
        raise SceneSpecError("Scene has no features")
    return best[1], best[2]


@dataclass(frozen=True)
class FeatureContact:
    """Overlap/abutment of the object with one scene feature."""

    kind: str
    index: int
    overlap_area: float
    abutment_length: float
    distance: float

    @property
    def touching(self) -> bool:
        return self.overlap_area > 0.0 or self.abutment_length > 0.0


def _beyond_side(env: EnvFeatureSpec, side: str, reach: float = 10.0) -> Polygon:
    w, d = env.table_width, env.table_depth
    return {
        "+x": box(w, -reach, w + reach, d + reach),
        "-x": box(-reach, -reach, 0.0, d + reach),
        "+y": box(-reach, d, w + reach, d + reach),
        "-y": box(-reach, -reach, w + reach, 0.0),
    }[side]


def feature_contact(state: SceneState) -> list[FeatureContact]:
    """
    Per-feature overlap area, abutment length and distance for the current pose.

    Edge overlap is the footprint area hanging past that side; wall overlap
    is the area inside the wall box (zero for valid states) and abutment is
    the footprint boundary length lying on the wall face; slope and slot
    overlaps are polygon intersections with their rectangles.
    """
    env = state.env
    poly = footprint_polygon(state.object, state.pose)
    out = []
    for index, feature in enumerate(env.features):
        geom = feature_geometry(env, feature)
        distance = float(poly.distance(geom))
        abutment = 0.0
        if isinstance(feature, Edge):
            overlap = poly.intersection(_beyond_side(env, feature.side)).area
            kind = "edge"
        elif isinstance(feature, Wall):
            overlap = poly.intersection(env.wall_rect(feature).polygon).area
            abutment = poly.exterior.intersection(geom.buffer(WALL_TOUCH_TOL)).length
            kind = "wall"
        elif isinstance(feature, Slope):
            overlap = poly.intersection(geom).area
            kind = "slope"
        else:
            overlap = poly.intersection(geom).area
            kind = "slot"
        out.append(
            FeatureContact(
                kind=kind,
                index=index,
                overlap_area=float(overlap),
                abutment_length=float(abutment),
                distance=distance,
            )
        )
    return out


def env_collisions(env: EnvFeatureSpec, points: np.ndarray, tol: float = 1e-6) -> dict[str, np.ndarray]:
    """
    Classify 3-D points against the environment solids.

    Returns:
        dict: boolean masks "wall", "slope" and "table" (slab or floor).
    """
    points = np.atleast_2d(points)
    x, y, z = points[:, 0], points[:, 1], points[:, 2]

    in_slab = env.table.contains(x, y) & (z < -tol) & (z > -env.table_thickness - tol)
    for slot in env.slots:
        pocket = slot.rect.contains(x, y) & (z > -slot.depth + tol)
        in_slab &= ~pocket
    table = in_slab | (z < -env.table_height + tol)

    wall = np.zeros(len(points), dtype=bool)
    for feature in env.walls:
        rect = env.wall_rect(feature)
        inside = _strict_inside(rect, x, y, tol)
        wall |= inside & (z < feature.height - tol) & (z > -tol)

    slope = np.zeros(len(points), dtype=bool)
    for feature in env.slopes:
        inside = _strict_inside(feature.rect, x, y, tol)
        slope |= inside & (z < feature.height_at(x, y) - tol) & (z > -tol)

    return {"wall": wall, "slope": slope, "table": table}


def _strict_inside(rect, x: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    return (
        (x > rect.x_min + tol) & (x < rect.x_max - tol)
        & (y > rect.y_min + tol) & (y < rect.y_max - tol)
    )
