"""Operator-side world model: ground plane, boxes, and the gaze cursor.

The mesh is deliberately primitive (one horizontal ground plane plus
axis-aligned boxes) — just enough surface for gaze raycasting. Everything
here lives in the operator's native convention (left-handed y-up), where
"up" is +y and the ground plane is a y = height sheet.

The cursor itself is registered as a scene object with its collider
excluded from raycasts; without the exclusion the cursor is re-hit by the
very gaze ray that placed it and walks toward the camera frame by frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Vec3

DEFAULT_MAX_DIST = 10.0

_EPS = 1e-12


@dataclass(frozen=True)
class Aabb:
    lo: Vec3
    hi: Vec3

    def __post_init__(self) -> None:
        if self.lo.x > self.hi.x or self.lo.y > self.hi.y or self.lo.z > self.hi.z:
            raise ValueError("box min corner exceeds max corner")

    @staticmethod
    def centered(center: Vec3, half: float) -> "Aabb":
        d = Vec3(half, half, half)
        return Aabb(center - d, center + d)

    def center(self) -> Vec3:
        return Vec3(
            (self.lo.x + self.hi.x) / 2, (self.lo.y + self.hi.y) / 2, (self.lo.z + self.hi.z) / 2
        )


@dataclass(frozen=True)
class Ray:
    origin: Vec3
    direction: Vec3  # unit

    def __post_init__(self) -> None:
        n = self.direction.norm()
        if abs(n - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")

    @staticmethod
    def through(origin: Vec3, toward: Vec3) -> "Ray":
        d = toward - origin
        n = d.norm()
        if n < _EPS:
            raise ValueError("degenerate ray")
        return Ray(origin, d.scale(1.0 / n))


@dataclass(frozen=True)
class Hit:
    point: Vec3
    object_id: str
    distance: float


@dataclass
class SceneObject:
    id: str
    box: Aabb
    excluded: bool = False


@dataclass
class WorldMesh:
    ground_height: float = 0.0
    boxes: list[Aabb] = field(default_factory=list)
    objects: dict[str, SceneObject] = field(default_factory=dict)

    def add_object(self, object_id: str, box: Aabb, excluded: bool = False) -> None:
        if object_id in self.objects:
            raise ValueError(f"duplicate object id: {object_id}")
        self.objects[object_id] = SceneObject(object_id, box, excluded)

    def move_object(self, object_id: str, center: Vec3) -> None:
        obj = self.objects[object_id]
        half = (obj.box.hi.x - obj.box.lo.x) / 2
        obj.box = Aabb.centered(center, half)

    def remove_object(self, object_id: str) -> None:
        self.objects.pop(object_id, None)

    def set_excluded(self, object_id: str, excluded: bool) -> None:
        self.objects[object_id].excluded = excluded


def ray_box_distance(ray: Ray, box: Aabb) -> float | None:
    """Slab intersection; entry distance along the ray, or None on miss."""
    tmin, tmax = 0.0, math.inf
    for o, d, lo, hi in (
        (ray.origin.x, ray.direction.x, box.lo.x, box.hi.x),
        (ray.origin.y, ray.direction.y, box.lo.y, box.hi.y),
        (ray.origin.z, ray.direction.z, box.lo.z, box.hi.z),
    ):
        if abs(d) < _EPS:
            if o < lo or o > hi:
                return None
            continue
        t0, t1 = (lo - o) / d, (hi - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        tmin, tmax = max(tmin, t0), min(tmax, t1)
        if tmin > tmax:
            return None
    return tmin


def _ground_distance(ray: Ray, height: float) -> float | None:
    if abs(ray.direction.y) < _EPS:
        return None
    t = (height - ray.origin.y) / ray.direction.y
    return t if t >= 0.0 else None


def raycast(mesh: WorldMesh, ray: Ray, max_dist: float = DEFAULT_MAX_DIST) -> Hit | None:
    """Nearest intersection among ground and non-excluded boxes.

    Ties break by smaller distance, then lexicographically lowest object id.
    """
    candidates: list[tuple[float, str]] = []
    t = _ground_distance(ray, mesh.ground_height)
    if t is not None and t <= max_dist:
        candidates.append((t, "ground"))
    for i, box in enumerate(mesh.boxes):
        t = ray_box_distance(ray, box)
        if t is not None and t <= max_dist:
            candidates.append((t, f"box{i}"))
    for obj in mesh.objects.values():
        if obj.excluded:
            continue
        t = ray_box_distance(ray, obj.box)
        if t is not None and t <= max_dist:
            candidates.append((t, obj.id))
    if not candidates:
        return None
    dist, object_id = min(candidates)
    point = ray.origin + ray.direction.scale(dist)
    return Hit(point, object_id, dist)


CURSOR_ID = "gaze-cursor"
CURSOR_HALF_EXTENT = 0.02


def ensure_cursor(mesh: WorldMesh) -> None:
    if CURSOR_ID not in mesh.objects:
        mesh.add_object(CURSOR_ID, Aabb.centered(Vec3.zero(), CURSOR_HALF_EXTENT), excluded=True)


def update_cursor(mesh: WorldMesh, gaze: Ray, max_dist: float = DEFAULT_MAX_DIST) -> Vec3 | None:
    """Move the gaze cursor to the current ray hit.

    Returns the new cursor position, or None on a miss (the cursor object
    keeps its previous position for display, but counts as absent for
    publication purposes).
    """
    ensure_cursor(mesh)
    hit = raycast(mesh, gaze, max_dist)
    if hit is None:
        return None
    mesh.move_object(CURSOR_ID, hit.point)
    return hit.point
