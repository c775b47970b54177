"""
Deterministic planar quasi-static simulator: scene features, procedural
objects, push dynamics, the analytic grasp oracle and safety events.
"""

from .assets import (
    ALL_CATEGORIES,
    CATEGORY_SETS,
    HARD_CATEGORIES,
    categories_for,
    make_asset_set,
    make_object,
)
from .geometry import (
    FeatureContact,
    clearance_at,
    env_collisions,
    feature_contact,
    feature_geometry,
    footprint_polygon,
    is_supported,
    lower_height,
    nearest_feature_point,
    object_contains,
    place_object,
    settle_pose,
    support_height,
    surface_distance,
    surface_normal,
    world_vertices,
)
from .grasp import grasp_frame, grasp_from_axes, grasp_outcome
from .push import apply_push, push_toward
from .scenes import (
    SCENE_KINDS,
    SCENE_SCHEMA_VERSION,
    build_scene,
    object_from_json,
    object_to_json,
    pose_from_json,
    pose_to_json,
    scene_from_json,
    scene_to_json,
    state_from_json,
    state_to_json,
)
from .types import (
    SIDE_NORMALS,
    SIDES,
    Edge,
    EnvFeatureSpec,
    GraspAction,
    ObjectModel,
    ObjectPose,
    PreGraspAction,
    PushOutcome,
    Rect,
    SafetyEvent,
    SceneState,
    Slope,
    Slot,
    Wall,
)

__all__ = [
    # types
    "SIDES",
    "SIDE_NORMALS",
    "Rect",
    "Edge",
    "Wall",
    "Slope",
    "Slot",
    "EnvFeatureSpec",
    "ObjectModel",
    "ObjectPose",
    "SceneState",
    "SafetyEvent",
    "PreGraspAction",
    "GraspAction",
    "PushOutcome",
    "FeatureContact",
    # operations
    "apply_push",
    "push_toward",
    "grasp_outcome",
    "grasp_frame",
    "grasp_from_axes",
    "clearance_at",
    "feature_contact",
    "surface_distance",
    "surface_normal",
    "support_height",
    "lower_height",
    "is_supported",
    "place_object",
    "settle_pose",
    "object_contains",
    "env_collisions",
    "footprint_polygon",
    "world_vertices",
    "nearest_feature_point",
    "feature_geometry",
    # scenes and assets
    "SCENE_KINDS",
    "SCENE_SCHEMA_VERSION",
    "build_scene",
    "scene_to_json",
    "scene_from_json",
    "object_to_json",
    "object_from_json",
    "pose_to_json",
    "pose_from_json",
    "state_to_json",
    "state_from_json",
    "ALL_CATEGORIES",
    "CATEGORY_SETS",
    "HARD_CATEGORIES",
    "categories_for",
    "make_asset_set",
    "make_object",
]
