"""Scene layouts and their versioned JSON documents."""

from typing import Any, Optional

from src.config import SceneSimConfig
from src.errors import SceneSpecError, SchemaMismatch

from .types import (
    Edge,
    EnvFeatureSpec,
    Feature,
    ObjectModel,
    ObjectPose,
    Rect,
    SceneState,
    Slope,
    Slot,
    Wall,
)

SCENE_SCHEMA_VERSION = 1

SCENE_KINDS = ("edge", "wall", "slope", "slot", "multi")


def build_scene(kind: str, cfg: Optional[SceneSimConfig] = None) -> EnvFeatureSpec:
    """
    Fixed feature layout for one of the five scene kinds.

    The single-feature scenes put their feature on the +x side; the multi
    scene combines a +x wall, a slope on the -x side, a partial slot near
    the +y side and a free -y edge.
    """
    cfg = cfg or SceneSimConfig()
    w, d = cfg.table_width, cfg.table_depth
    layouts: dict[str, tuple[Feature, ...]] = {
        "edge": (Edge("+x"),),
        "wall": (Wall("+x", height=0.15, thickness=0.03),),
        "slope": (Slope(Rect(w - 0.25, 0.0, w, d), incline=0.2, uphill="+x"),),
        "slot": (Slot(Rect(w - 0.35, 0.0, w - 0.31, d), depth=0.04),),
        "multi": (
            Wall("+x", height=0.15, thickness=0.03),
            Slope(Rect(0.0, 0.0, 0.25, d), incline=0.2, uphill="-x"),
            Slot(Rect(0.35, d - 0.10, 0.85, d - 0.06), depth=0.04),
            Edge("-y"),
        ),
    }
    if kind not in layouts:
        raise SceneSpecError(f"Unknown scene kind {kind!r}, expected one of {SCENE_KINDS}")
    return EnvFeatureSpec(
        table_width=w,
        table_depth=d,
        features=layouts[kind],
        table_thickness=cfg.table_thickness,
        table_height=cfg.table_height,
        name=kind,
    )


def _rect_to_json(rect: Rect) -> list[float]:
    return [rect.x_min, rect.y_min, rect.x_max, rect.y_max]


def _feature_to_json(feature: Feature) -> dict[str, Any]:
    if isinstance(feature, Edge):
        return {"kind": "edge", "side": feature.side}
    if isinstance(feature, Wall):
        return {
            "kind": "wall",
            "side": feature.side,
            "height": feature.height,
            "thickness": feature.thickness,
        }
    if isinstance(feature, Slope):
        return {
            "kind": "slope",
            "rect": _rect_to_json(feature.rect),
            "incline": feature.incline,
            "uphill": feature.uphill,
        }
    return {"kind": "slot", "rect": _rect_to_json(feature.rect), "depth": feature.depth}


def _feature_from_json(doc: dict[str, Any]) -> Feature:
    kind = doc.get("kind")
    try:
        if kind == "edge":
            return Edge(doc["side"])
        if kind == "wall":
            return Wall(doc["side"], float(doc["height"]), float(doc["thickness"]))
        if kind == "slope":
            return Slope(Rect(*doc["rect"]), float(doc["incline"]), doc["uphill"])
        if kind == "slot":
            return Slot(Rect(*doc["rect"]), float(doc["depth"]))
    except (KeyError, TypeError) as e:
        raise SceneSpecError(f"Malformed {kind} feature: {doc}") from e
    raise SceneSpecError(f"Unknown feature kind {kind!r}")


def scene_to_json(env: EnvFeatureSpec) -> dict[str, Any]:
    return {
        "scene_schema_version": SCENE_SCHEMA_VERSION,
        "name": env.name,
        "table_width": env.table_width,
        "table_depth": env.table_depth,
        "table_thickness": env.table_thickness,
        "table_height": env.table_height,
        "features": [_feature_to_json(f) for f in env.features],
    }


def scene_from_json(doc: dict[str, Any]) -> EnvFeatureSpec:
    """
    Rebuild an EnvFeatureSpec from its JSON document.

    Raises:
        SchemaMismatch: If scene_schema_version is not supported.
        SceneSpecError: If the document is malformed or violates invariants.
    """
    version = doc.get("scene_schema_version")
    if version != SCENE_SCHEMA_VERSION:
        raise SchemaMismatch(
            f"Unsupported scene_schema_version {version!r} (expected {SCENE_SCHEMA_VERSION})"
        )
    try:
        return EnvFeatureSpec(
            table_width=float(doc["table_width"]),
            table_depth=float(doc["table_depth"]),
            features=tuple(_feature_from_json(f) for f in doc["features"]),
            table_thickness=float(doc["table_thickness"]),
            table_height=float(doc["table_height"]),
            name=str(doc.get("name", "custom")),
        )
    except KeyError as e:
        raise SceneSpecError(f"Scene document misses {e}") from e


def object_to_json(obj: ObjectModel) -> dict[str, Any]:
    return {
        "id": obj.id,
        "footprint": [list(v) for v in obj.footprint],
        "thickness": obj.thickness,
        "category": obj.category,
        "graspable_tag": obj.graspable_tag,
    }


def object_from_json(doc: dict[str, Any]) -> ObjectModel:
    return ObjectModel(
        id=doc["id"],
        footprint=tuple((float(x), float(y)) for x, y in doc["footprint"]),
        thickness=float(doc["thickness"]),
        category=doc["category"],
        graspable_tag=bool(doc["graspable_tag"]),
    )


def pose_to_json(pose: ObjectPose) -> dict[str, Any]:
    return {
        "x": pose.x,
        "y": pose.y,
        "yaw": pose.yaw,
        "tilt": pose.tilt,
        "tilt_axis": list(pose.tilt_axis),
        "elevation": pose.elevation,
        "pivot": pose.pivot,
        "supported": pose.supported,
        "contact": pose.contact,
    }


def pose_from_json(doc: dict[str, Any]) -> ObjectPose:
    return ObjectPose(
        x=float(doc["x"]),
        y=float(doc["y"]),
        yaw=float(doc["yaw"]),
        tilt=float(doc["tilt"]),
        tilt_axis=(float(doc["tilt_axis"][0]), float(doc["tilt_axis"][1])),
        elevation=float(doc["elevation"]),
        pivot=float(doc["pivot"]),
        supported=bool(doc["supported"]),
        contact=str(doc["contact"]),
    )


def state_to_json(state: SceneState) -> dict[str, Any]:
    return {
        "scene": scene_to_json(state.env),
        "object": object_to_json(state.object),
        "pose": pose_to_json(state.pose),
        "seed": state.seed,
    }


def state_from_json(doc: dict[str, Any]) -> SceneState:
    return SceneState(
        env=scene_from_json(doc["scene"]),
        object=object_from_json(doc["object"]),
        pose=pose_from_json(doc["pose"]),
        seed=int(doc["seed"]),
    )
