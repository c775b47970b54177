"""
Analytic parallel-jaw grasp oracle.

A grasp succeeds when (a) the finger pads, swept back along the approach
direction over finger_length + approach_distance, hit neither the table,
the floor, a wall, the slope nor the object; (b) the object section along
the closing axis fits the opening; (c) there is room for the lower finger:
for a through-thickness pinch the free gap under the contacted rim, for a
side pinch the exposed side height, must reach clearance_min. Lifting is
not simulated; the lift thresholds are met whenever (a)-(c) hold.
"""

from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from src.config import GraspOracleConfig, SceneSimConfig
from src.errors import ContactOffObject

from .geometry import env_collisions, lower_height, object_contains, support_height, surface_distance
from .types import GraspAction, SafetyEvent, SceneState


def grasp_frame(orientation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closing axis g, finger-width axis w and approach direction a of an Euler "xyz" orientation."""
    matrix = Rotation.from_euler("xyz", np.asarray(orientation, dtype=float)).as_matrix()
    return matrix[:, 0], matrix[:, 1], matrix[:, 2]


def grasp_from_axes(contact, closing_axis, approach) -> GraspAction:
    """Build a GraspAction from a closing axis and an approach direction."""
    a = np.asarray(approach, dtype=float)
    a = a / np.linalg.norm(a)
    g = np.asarray(closing_axis, dtype=float)
    g = g - (g @ a) * a
    g = g / np.linalg.norm(g)
    w = np.cross(a, g)
    matrix = np.column_stack([g, w, a])
    euler = Rotation.from_matrix(matrix).as_euler("xyz")
    return GraspAction(
        contact=tuple(float(v) for v in contact),
        orientation=tuple(float(v) for v in euler),
    )


def _collision_event(state: SceneState, points: np.ndarray) -> Optional[SafetyEvent]:
    """Safety event for colliding points; NONE for a plain collision, None when free."""
    hits = env_collisions(state.env, points)
    if hits["wall"].any():
        return SafetyEvent.GRIPPER_WALL_COLLISION
    if hits["slope"].any():
        return SafetyEvent.GRIPPER_SLOPE_COLLISION
    if hits["table"].any() or object_contains(state, points, tol=-1e-6).any():
        return SafetyEvent.NONE
    return None


def _finger_points(
    center: np.ndarray,
    g: np.ndarray,
    w: np.ndarray,
    a: np.ndarray,
    cfg: GraspOracleConfig,
) -> np.ndarray:
    sweep = cfg.finger_length + cfg.approach_distance
    us = np.linspace(-cfg.finger_thickness / 2, cfg.finger_thickness / 2, 3)
    vs = np.linspace(-cfg.finger_width / 2, cfg.finger_width / 2, 3)
    ss = np.linspace(0.0, sweep, int(np.ceil(sweep / 0.005)) + 1)
    uu, vv, ss = np.meshgrid(us, vs, ss, indexing="ij")
    return (
        center
        + uu.reshape(-1, 1) * g
        + vv.reshape(-1, 1) * w
        - ss.reshape(-1, 1) * a
    )


def grasp_outcome(
    state: SceneState,
    grasp: GraspAction,
    cfg: Optional[GraspOracleConfig] = None,
    sim: Optional[SceneSimConfig] = None,
) -> tuple[int, SafetyEvent]:
    """
    Decide whether a grasp lifts the object.

    Args:
        state: Scene at grasp time.
        grasp: Contact point p2 and orientation.
        cfg: Oracle parameters.
        sim: Simulator tolerances (eps_contact).

    Returns:
        (r, safety): r = 1 on success; safety reports gripper collisions
            with a wall or the slope.

    Raises:
        ContactOffObject: If p2 is farther than eps_contact from the object surface.
    """
    cfg = cfg or GraspOracleConfig()
    sim = sim or SceneSimConfig()
    p2 = np.asarray(grasp.contact, dtype=float)
    if surface_distance(state, p2) > sim.eps_contact:
        raise ContactOffObject(f"Grasp contact {p2.tolist()} is not on the object")
    if not state.pose.supported:
        return 0, SafetyEvent.NONE

    g, w, a = grasp_frame(grasp.orientation)
    center = p2 + a * cfg.grip_depth

    # Palm approach line, from just outside the contact back to the standoff
    standoff = np.linspace(
        cfg.grip_depth + 0.002,
        cfg.grip_depth + cfg.finger_length + cfg.approach_distance,
        40,
    )
    event = _collision_event(state, center - standoff[:, None] * a)
    if event is not None:
        return 0, event

    # Object section along the closing axis
    n = int(np.ceil(cfg.gripper_opening / cfg.section_step))
    ts = cfg.section_step * np.arange(-n, n + 1)
    inside = object_contains(state, center + ts[:, None] * g)
    if not inside[n]:
        return 0, SafetyEvent.NONE
    lo = n
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    hi = n
    while hi < 2 * n and inside[hi + 1]:
        hi += 1
    if lo == 0 or hi == 2 * n or ts[hi] - ts[lo] > cfg.gripper_opening:
        return 0, SafetyEvent.NONE

    offset = cfg.finger_margin + cfg.finger_thickness / 2
    for t in (ts[lo] - offset, ts[hi] + offset):
        event = _collision_event(state, _finger_points(center + t * g, g, w, a, cfg))
        if event is not None:
            return 0, event

    h = float(lower_height(state.pose, p2[0], p2[1]))
    support = float(support_height(state.env, p2[0], p2[1]))
    if abs(g[2]) >= 0.5:
        room = h - support
    else:
        room = h + state.object.thickness - support
    if room < cfg.clearance_min:
        return 0, SafetyEvent.NONE
    return 1, SafetyEvent.NONE
