"""
Planar faces of the analytic scene used for ray casting.

Every solid (table slab, slot pocket, wall boxes, slope wedges, the object
prism and the floor) is described by its planar faces. A face stores its
plane and its outline projected onto the two coordinate axes that are not
dominant in the normal, so a hit test is one plane intersection followed
by a vectorised point-in-polygon query.
"""

from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Polygon, box

from src.scenesim import SceneState, lower_height, world_vertices

OBJECT = 1
ENVIRONMENT = 0

FLOOR_REACH = 50.0


@dataclass
class Face:
    normal: np.ndarray
    offset: float  # plane: normal . x = offset
    keep: tuple[int, int]
    outline: Polygon
    label: int

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """Ray parameters of the hits, inf where a ray misses the face."""
        denom = dirs @ self.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (self.offset - origin @ self.normal) / denom
        valid = (np.abs(denom) > 1e-12) & (t > 1e-9)
        pts = origin + np.where(valid, t, 0.0)[:, None] * dirs
        inside = shapely.contains_xy(self.outline, pts[:, self.keep[0]], pts[:, self.keep[1]])
        return np.where(valid & inside, t, np.inf)


def _plane(vertices: np.ndarray) -> tuple[np.ndarray, float]:
    # Newell's method, robust for any planar polygon
    n = np.zeros(3)
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        n += np.array([
            (a[1] - b[1]) * (a[2] + b[2]),
            (a[2] - b[2]) * (a[0] + b[0]),
            (a[0] - b[0]) * (a[1] + b[1]),
        ])
    n = n / np.linalg.norm(n)
    return n, float(vertices.mean(axis=0) @ n)


def make_face(vertices, label: int, holes=()) -> Face:
    """Face spanned by a planar 3-D polygon, optionally with planar holes."""
    vertices = np.asarray(vertices, dtype=float)
    normal, offset = _plane(vertices)
    drop = int(np.argmax(np.abs(normal)))
    keep = tuple(i for i in range(3) if i != drop)
    outline = Polygon(
        vertices[:, keep],
        [np.asarray(h, dtype=float)[:, keep] for h in holes],
    )
    shapely.prepare(outline)
    return Face(normal=normal, offset=offset, keep=keep, outline=outline, label=label)


def _parts(geom) -> list[Polygon]:
    if geom.is_empty:
        return []
    if isinstance(geom, MultiPolygon):
        return list(geom.geoms)
    if isinstance(geom, Polygon):
        return [geom]
    return [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon)]


def horizontal_faces(geom, z: float, label: int) -> list[Face]:
    """Faces of a planar region (possibly with holes or several parts) at height z."""
    out = []
    for part in _parts(geom):
        shell = [(x, y, z) for x, y in part.exterior.coords[:-1]]
        holes = [[(x, y, z) for x, y in ring.coords[:-1]] for ring in part.interiors]
        out.append(make_face(shell, label, holes))
    return out


def _vertical_quad(a, b, z0: float, z1: float, label: int) -> Face:
    return make_face(
        [(a[0], a[1], z0), (b[0], b[1], z0), (b[0], b[1], z1), (a[0], a[1], z1)],
        label,
    )


def _box_faces(x0, y0, x1, y1, z0, z1, label) -> list[Face]:
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    faces = horizontal_faces(box(x0, y0, x1, y1), z1, label)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        faces.append(_vertical_quad(a, b, z0, z1, label))
    return faces


def environment_faces(env) -> list[Face]:
    """Faces of the table, its features and the floor."""
    w, d, t = env.table_width, env.table_depth, env.table_thickness
    faces: list[Face] = []
    table = box(0.0, 0.0, w, d)

    top = table
    for slot in env.slots:
        top = top.difference(slot.rect.polygon)
    faces += horizontal_faces(top, 0.0, ENVIRONMENT)

    # Table sides, notched where a slot reaches the boundary
    sides = [((0.0, 0.0), (w, 0.0)), ((w, 0.0), (w, d)), ((w, d), (0.0, d)), ((0.0, d), (0.0, 0.0))]
    for a, b in sides:
        a, b = np.asarray(a), np.asarray(b)
        length = float(np.linalg.norm(b - a))
        along = (b - a) / length
        outline = box(0.0, -t, length, 0.0)
        for slot in env.slots:
            corners = np.array(slot.rect.polygon.exterior.coords)
            offsets = (corners - a) @ along
            normal_gap = np.abs((corners - a) @ np.array([-along[1], along[0]]))
            if normal_gap.min() <= 1e-12:
                outline = outline.difference(box(offsets.min(), -slot.depth, offsets.max(), 0.0))
        for part in _parts(outline):
            ring = [(*(a + u * along), z) for u, z in part.exterior.coords[:-1]]
            faces.append(make_face(ring, ENVIRONMENT))

    for slot in env.slots:
        r = slot.rect
        faces += horizontal_faces(r.polygon, -slot.depth, ENVIRONMENT)
        corners = [(r.x_min, r.y_min), (r.x_max, r.y_min), (r.x_max, r.y_max), (r.x_min, r.y_max)]
        for a, b in zip(corners, corners[1:] + corners[:1]):
            on_boundary = (a[0] == b[0] and a[0] in (0.0, w)) or (a[1] == b[1] and a[1] in (0.0, d))
            if not on_boundary:
                faces.append(_vertical_quad(a, b, -slot.depth, 0.0, ENVIRONMENT))

    for wall in env.walls:
        r = env.wall_rect(wall)
        faces += _box_faces(r.x_min, r.y_min, r.x_max, r.y_max, 0.0, wall.height, ENVIRONMENT)

    for slope in env.slopes:
        corners = np.array(slope.rect.polygon.exterior.coords)[:-1]
        z = slope.height_at(corners[:, 0], corners[:, 1])
        wedge_top = np.column_stack([corners, z])
        faces.append(make_face(wedge_top, ENVIRONMENT))
        for i in range(4):
            a, b = wedge_top[i], wedge_top[(i + 1) % 4]
            if a[2] <= 1e-12 and b[2] <= 1e-12:
                continue  # foot line
            quad = [(a[0], a[1], 0.0), (b[0], b[1], 0.0), tuple(b), tuple(a)]
            if a[2] <= 1e-12:
                quad = [(a[0], a[1], 0.0), (b[0], b[1], 0.0), tuple(b)]
            elif b[2] <= 1e-12:
                quad = [(a[0], a[1], 0.0), (b[0], b[1], 0.0), tuple(a)]
            faces.append(make_face(quad, ENVIRONMENT))

    floor = box(-FLOOR_REACH, -FLOOR_REACH, FLOOR_REACH, FLOOR_REACH)
    faces += horizontal_faces(floor, -env.table_height, ENVIRONMENT)
    return faces


def object_faces(state: SceneState) -> list[Face]:
    """Top, bottom and side faces of the (possibly tilted) object prism."""
    pose, obj = state.pose, state.object
    verts = world_vertices(obj, pose.x, pose.y, pose.yaw)
    low = lower_height(pose, verts[:, 0], verts[:, 1])
    bottom = np.column_stack([verts, low])
    top = np.column_stack([verts, low + obj.thickness])
    faces = [make_face(top, OBJECT), make_face(bottom[::-1], OBJECT)]
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        faces.append(make_face([bottom[i], bottom[j], top[j], top[i]], OBJECT))
    return faces


def scene_faces(state: SceneState) -> list[Face]:
    return environment_faces(state.env) + object_faces(state)
