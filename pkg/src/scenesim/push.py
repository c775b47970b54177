"""
Quasi-static dipole push model.

Per sub-step of length ds along the push direction d the COM translates by
ds * d and the yaw changes by k_rot * ds * cross(d, com - p) / |com - p|^2,
counter-clockwise positive, where p is the current world location of the
body-fixed contact. Translation into a wall is clipped to contact and the
blocked length is converted into tilt; tilt is re-settled after every
sub-step. Forward Euler integration, first order in 1 / steps.

The pusher only moves the object when it engages it: from the top face, or
from a side face it is driven into. Any other push leaves the pose as it was
and the whole gripper travel counts as slip.
"""

import logging
from typing import Optional

import numpy as np
from shapely.geometry import LineString, Point, Polygon
from shapely.ops import nearest_points

from src.config import SceneSimConfig
from src.errors import ContactOffObject, DisplacementTooLong, ZeroDisplacement

from .geometry import rotation2d, settle_pose, surface_distance, world_vertices
from .types import (
    SIDE_NORMALS,
    EnvFeatureSpec,
    PreGraspAction,
    PushOutcome,
    SafetyEvent,
    SceneState,
)

logger = logging.getLogger("scenesim")


def _cross(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def engaged_contact(
    verts: np.ndarray, p: np.ndarray, d: np.ndarray, tol: float
) -> Optional[np.ndarray]:
    """
    Planar point at which a pusher at p moving along d engages the footprint.

    A contact farther than `tol` inside the rim lies on the top face and
    drags the object from where it is. A rim contact engages only when d
    points into a side face the contact lies on; otherwise the pusher
    leaves or slides along the rim and None is returned.
    """
    ring = Polygon(verts)
    q = Point(p[0], p[1])
    if ring.contains(q) and ring.exterior.distance(q) > tol:
        return p.copy()

    sign = 1.0 if ring.exterior.is_ccw else -1.0
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        e = b - a
        if np.linalg.norm(e) < 1e-12 or LineString([a, b]).distance(q) > tol:
            continue
        # right normal of a CCW edge points out
        n_out = sign * np.array([e[1], -e[0]]) / np.linalg.norm(e)
        if d @ n_out < -1e-9:
            near, _ = nearest_points(ring.exterior, q)
            return np.array([near.x, near.y])
    return None


def _pusher_event(
    env: EnvFeatureSpec, g: np.ndarray, z: float, radius: float
) -> SafetyEvent:
    for wall in env.walls:
        n = np.asarray(SIDE_NORMALS[wall.side])
        if g @ n > env.wall_face(wall) - radius and z < wall.height:
            return SafetyEvent.GRIPPER_WALL_COLLISION
    for slope in env.slopes:
        if slope.rect.contains(g[0], g[1]) and z < float(slope.height_at(g[0], g[1])):
            return SafetyEvent.GRIPPER_SLOPE_COLLISION
    return SafetyEvent.NONE


def apply_push(
    state: SceneState,
    action: PreGraspAction,
    steps: Optional[int] = None,
    cfg: Optional[SceneSimConfig] = None,
) -> PushOutcome:
    """
    Integrate a horizontal push on the object.

    Args:
        state: Scene before the push.
        action: Contact point p1 (on the object surface) and displacement.
        steps: Number of equal sub-displacements (default cfg.push_steps).
        cfg: Simulator constants.

    Returns:
        PushOutcome: Final pose, slip, rotation (tilt change, 0, yaw change)
            and the first safety event met. Motion stops at that event or on
            wall saturation.

    Raises:
        ZeroDisplacement: If |displacement| < eps_disp.
        DisplacementTooLong: If |displacement| > push_max.
        ContactOffObject: If the contact is farther than eps_contact from the surface.
    """
    cfg = cfg or SceneSimConfig()
    steps = steps or cfg.push_steps
    displacement = np.asarray(action.displacement, dtype=float)
    length = float(np.linalg.norm(displacement))
    if length < cfg.eps_disp:
        raise ZeroDisplacement(f"Push displacement {length:.2e} m below {cfg.eps_disp} m")
    if length > cfg.push_max + 1e-9:
        raise DisplacementTooLong(f"Push displacement {length:.3f} m above {cfg.push_max} m")
    contact = np.asarray(action.contact, dtype=float)
    if surface_distance(state, contact) > cfg.eps_contact:
        raise ContactOffObject(f"Push contact {contact.tolist()} is not on the object")

    pose0 = state.pose
    if not pose0.supported:
        return PushOutcome(pose0, length, (0.0, 0.0, 0.0), SafetyEvent.OBJECT_FELL)

    env, obj = state.env, state.object
    d = displacement / length
    com = pose0.com.copy()
    yaw = pose0.yaw
    entry = engaged_contact(world_vertices(obj, com[0], com[1], yaw), contact[:2], d, cfg.eps_contact)
    if entry is None:
        # Pusher moves away from or along the rim; the object stays put
        event = _pusher_event(env, contact[:2] + length * d, float(contact[2]), cfg.gripper_radius)
        return PushOutcome(pose0, length, (0.0, 0.0, 0.0), event, travelled=length)

    body_contact = rotation2d(-yaw) @ (entry - com)
    pusher = entry.copy()
    wall_tilt = pose0.tilt if pose0.contact == "wall" else 0.0
    ds = length / steps
    pose = pose0
    safety = SafetyEvent.NONE
    travelled = 0.0

    for _ in range(steps):
        r = -(rotation2d(yaw) @ body_contact)
        r2 = float(r @ r)
        dyaw = cfg.k_rot * ds * _cross(d, r) / r2 if r2 > 1e-18 else 0.0
        yaw = yaw + dyaw
        com = com + ds * d
        pusher = pusher + ds * d
        travelled += ds

        blocked = 0.0
        verts = world_vertices(obj, com[0], com[1], yaw)
        for wall in env.walls:
            n = np.asarray(SIDE_NORMALS[wall.side])
            penetration = float((verts @ n).max() - env.wall_face(wall))
            if penetration > 0.0:
                com = com - penetration * n
                verts = verts - penetration * n
                blocked += penetration
        if blocked > 0.0:
            wall_tilt = min(wall_tilt + cfg.k_wall * blocked, cfg.tilt_max)

        pose = settle_pose(env, obj, com[0], com[1], yaw, cfg, wall_tilt)
        wall_tilt = pose.tilt if pose.contact == "wall" else 0.0

        if not pose.supported:
            safety = SafetyEvent.OBJECT_FELL
            break
        event = _pusher_event(env, pusher, float(contact[2]), cfg.gripper_radius)
        if event is not SafetyEvent.NONE:
            safety = event
            break
        if blocked >= ds * (1.0 - 1e-9) and wall_tilt >= cfg.tilt_max:
            logger.debug("Push saturated against a wall")
            break

    final_contact = com + rotation2d(yaw) @ body_contact
    slip = float(np.linalg.norm((entry + travelled * d) - final_contact))
    rotation = (float(pose.tilt - pose0.tilt), 0.0, float(yaw - pose0.yaw))
    return PushOutcome(
        new_pose=pose,
        slip=slip,
        rotation=rotation,
        safety=safety,
        travelled=travelled,
    )


def push_toward(contact, direction_angle: float, magnitude: float) -> PreGraspAction:
    """Build a push action from a polar displacement."""
    return PreGraspAction(
        contact=tuple(float(v) for v in contact),
        displacement=(
            float(magnitude * np.cos(direction_angle)),
            float(magnitude * np.sin(direction_angle)),
        ),
    )
