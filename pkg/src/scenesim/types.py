"""
Domain types of the planar pushing/grasping simulator.

Conventions: meters and radians; the table top is the plane z = 0 over
x in [0, table_width], y in [0, table_depth]; sides are named "+x", "-x",
"+y", "-y" after their outward normal.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Union

import numpy as np
from shapely.geometry import Polygon, box

from src.errors import SceneSpecError

SIDES = ("+x", "-x", "+y", "-y")

SIDE_NORMALS: dict[str, tuple[float, float]] = {
    "+x": (1.0, 0.0),
    "-x": (-1.0, 0.0),
    "+y": (0.0, 1.0),
    "-y": (0.0, -1.0),
}


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise SceneSpecError(f"Unknown table side {side!r}, expected one of {SIDES}")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle on the table plane."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise SceneSpecError(f"Degenerate rectangle {self}")

    @property
    def polygon(self) -> Polygon:
        return box(self.x_min, self.y_min, self.x_max, self.y_max)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)


@dataclass(frozen=True)
class Edge:
    """A free table side the scene is built around."""

    side: str

    def __post_init__(self):
        _check_side(self.side)


@dataclass(frozen=True)
class Wall:
    """A box spanning a whole table side, `thickness` deep into the table."""

    side: str
    height: float = 0.15
    thickness: float = 0.03

    def __post_init__(self):
        _check_side(self.side)
        if self.height <= 0 or self.thickness <= 0:
            raise SceneSpecError(f"Wall needs positive height and thickness: {self}")


@dataclass(frozen=True)
class Slope:
    """A wedge over `rect` rising toward `uphill`; its high end lies on the table boundary."""

    rect: Rect
    incline: float
    uphill: str

    def __post_init__(self):
        _check_side(self.uphill)
        if not 0.0 < self.incline < np.pi / 2:
            raise SceneSpecError(f"Slope incline must lie in (0, pi/2): {self.incline}")

    @property
    def direction(self) -> np.ndarray:
        return np.asarray(SIDE_NORMALS[self.uphill])

    @property
    def foot(self) -> float:
        """Profile coordinate u.p of the low end."""
        corners = np.array(self.rect.polygon.exterior.coords)
        return float((corners @ self.direction).min())

    @property
    def length(self) -> float:
        corners = np.array(self.rect.polygon.exterior.coords)
        s = corners @ self.direction
        return float(s.max() - s.min())

    def profile(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Distance uphill from the foot line (unclipped)."""
        u = self.direction
        return x * u[0] + y * u[1] - self.foot

    def height_at(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        s = np.clip(self.profile(x, y), 0.0, self.length)
        return np.tan(self.incline) * s


@dataclass(frozen=True)
class Slot:
    """A rectangular pocket of `depth` cut into the table."""

    rect: Rect
    depth: float = 0.04

    def __post_init__(self):
        if self.depth <= 0:
            raise SceneSpecError(f"Slot depth must be positive: {self.depth}")

    @property
    def across(self) -> np.ndarray:
        """Unit axis along the slot's narrow dimension."""
        r = self.rect
        if (r.x_max - r.x_min) <= (r.y_max - r.y_min):
            return np.array([1.0, 0.0])
        return np.array([0.0, 1.0])

    @property
    def lips(self) -> tuple[float, float]:
        r = self.rect
        if self.across[0] == 1.0:
            return r.x_min, r.x_max
        return r.y_min, r.y_max


Feature = Union[Edge, Wall, Slope, Slot]


@dataclass(frozen=True)
class EnvFeatureSpec:
    """Table plus its environmental features."""

    table_width: float = 1.2
    table_depth: float = 0.8
    features: tuple[Feature, ...] = ()
    table_thickness: float = 0.05
    table_height: float = 0.75
    name: str = "custom"

    def __post_init__(self):
        self.validate()

    @property
    def table(self) -> Rect:
        return Rect(0.0, 0.0, self.table_width, self.table_depth)

    def of_kind(self, kind: type) -> list:
        return [f for f in self.features if isinstance(f, kind)]

    @property
    def walls(self) -> list[Wall]:
        return self.of_kind(Wall)

    @property
    def slopes(self) -> list[Slope]:
        return self.of_kind(Slope)

    @property
    def slots(self) -> list[Slot]:
        return self.of_kind(Slot)

    @property
    def edges(self) -> list[Edge]:
        return self.of_kind(Edge)

    def side_coordinate(self, side: str) -> float:
        """Boundary position along the side's outward normal (n.p at the side)."""
        return {
            "+x": self.table_width,
            "-x": 0.0,
            "+y": self.table_depth,
            "-y": 0.0,
        }[side]

    def wall_face(self, wall: Wall) -> float:
        """n.p of the wall's inner face."""
        return self.side_coordinate(wall.side) - wall.thickness

    def wall_rect(self, wall: Wall) -> Rect:
        w, d, t = self.table_width, self.table_depth, wall.thickness
        return {
            "+x": Rect(w - t, 0.0, w, d),
            "-x": Rect(0.0, 0.0, t, d),
            "+y": Rect(0.0, d - t, w, d),
            "-y": Rect(0.0, 0.0, w, t),
        }[wall.side]

    def footprints(self) -> list[tuple[Feature, Polygon]]:
        out = []
        for feature in self.features:
            if isinstance(feature, Wall):
                out.append((feature, self.wall_rect(feature).polygon))
            elif isinstance(feature, (Slope, Slot)):
                out.append((feature, feature.rect.polygon))
        return out

    def validate(self) -> None:
        if self.table_width <= 0 or self.table_depth <= 0:
            raise SceneSpecError("Table dimensions must be positive")
        if self.table_thickness <= 0 or self.table_height <= self.table_thickness:
            raise SceneSpecError("Table height must exceed a positive slab thickness")

        table = self.table.polygon
        footprints = self.footprints()
        for feature, poly in footprints:
            if not table.buffer(1e-9).contains(poly):
                raise SceneSpecError(f"Feature footprint leaves the table: {feature}")
        for i, (fa, pa) in enumerate(footprints):
            for fb, pb in footprints[i + 1 :]:
                if pa.intersection(pb).area > 1e-12:
                    raise SceneSpecError(f"Features overlap: {fa} and {fb}")

        bounded_sides = [f.side for f in self.features if isinstance(f, (Edge, Wall))]
        if len(bounded_sides) != len(set(bounded_sides)):
            raise SceneSpecError("A table side carries more than one edge/wall feature")

        for slope in self.slopes:
            corners = np.array(slope.rect.polygon.exterior.coords)
            high = float((corners @ slope.direction).max())
            n = np.asarray(SIDE_NORMALS[slope.uphill])
            boundary = self.side_coordinate(slope.uphill) * float(n.sum())
            if abs(high - boundary) > 1e-9:
                raise SceneSpecError(f"Slope high end must lie on the table boundary: {slope}")


@dataclass(frozen=True)
class ObjectModel:
    """A flat prism: CCW footprint polygon in the body frame extruded by `thickness`."""

    id: str
    footprint: tuple[tuple[float, float], ...]
    thickness: float
    category: str
    graspable_tag: bool

    def __post_init__(self):
        if self.thickness <= 0:
            raise SceneSpecError(f"Object {self.id}: thickness must be positive")
        if len(self.footprint) < 3:
            raise SceneSpecError(f"Object {self.id}: footprint needs 3+ vertices")
        poly = Polygon(self.footprint)
        if not poly.is_valid or not poly.exterior.is_simple or poly.area <= 0:
            raise SceneSpecError(f"Object {self.id}: footprint is not a simple polygon")
        if not poly.exterior.is_ccw:
            raise SceneSpecError(f"Object {self.id}: footprint must be counter-clockwise")

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon(self.footprint)

    @cached_property
    def com(self) -> np.ndarray:
        c = self.polygon.centroid
        return np.array([c.x, c.y])

    @cached_property
    def local_vertices(self) -> np.ndarray:
        """Footprint vertices relative to the COM."""
        return np.asarray(self.footprint, dtype=float) - self.com

    @property
    def area(self) -> float:
        return float(self.polygon.area)


@dataclass(frozen=True)
class ObjectPose:
    """
    Planar pose of the object COM plus the tilt induced by environment contact.

    The lower surface height of a footprint point q is
    elevation + tan(tilt) * ((q - com) . rise - pivot) where rise is
    tilt_axis rotated by +90 degrees.
    """

    x: float
    y: float
    yaw: float = 0.0
    tilt: float = 0.0
    tilt_axis: tuple[float, float] = (1.0, 0.0)
    elevation: float = 0.0
    pivot: float = 0.0
    supported: bool = True
    contact: str = "flat"  # flat | wall | slope | slot | fallen

    @property
    def com(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def rise(self) -> np.ndarray:
        ax, ay = self.tilt_axis
        return np.array([-ay, ax])


@dataclass(frozen=True)
class SceneState:
    env: EnvFeatureSpec
    object: ObjectModel
    pose: ObjectPose
    seed: int = 0


class SafetyEvent(str, Enum):
    NONE = "none"
    OBJECT_FELL = "object_fell"
    GRIPPER_WALL_COLLISION = "gripper_wall_collision"
    GRIPPER_SLOPE_COLLISION = "gripper_slope_collision"


@dataclass(frozen=True)
class PreGraspAction:
    """Horizontal push: contact point p1 and planar displacement."""

    contact: tuple[float, float, float]
    displacement: tuple[float, float]


@dataclass(frozen=True)
class GraspAction:
    """Parallel-jaw grasp: contact point p2 and Euler "xyz" orientation."""

    contact: tuple[float, float, float]
    orientation: tuple[float, float, float]


@dataclass(frozen=True)
class PushOutcome:
    new_pose: ObjectPose
    slip: float
    rotation: tuple[float, float, float]
    safety: SafetyEvent = SafetyEvent.NONE
    travelled: float = field(default=0.0, compare=False)
