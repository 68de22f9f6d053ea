import math
import random

import pytest

from teleop.geometry import Vec3
from teleop.scene import (
    CURSOR_ID,
    Aabb,
    Hit,
    Ray,
    WorldMesh,
    ensure_cursor,
    ray_box_distance,
    raycast,
    update_cursor,
)


def down_ray(x=0.0, y=5.0, z=0.0):
    return Ray(Vec3(x, y, z), Vec3(0.0, -1.0, 0.0))


class TestRaycast:
    def test_straight_down_hits_ground(self):
        mesh = WorldMesh(ground_height=0.0)
        hit = raycast(mesh, down_ray())
        assert hit is not None
        assert hit.object_id == "ground"
        assert (hit.point - Vec3(0, 0, 0)).norm() < 1e-12
        assert abs(hit.distance - 5.0) < 1e-12

    def test_parallel_to_ground_misses(self):
        mesh = WorldMesh(ground_height=0.0)
        ray = Ray(Vec3(0, 1, 0), Vec3(1.0, 0.0, 0.0))
        assert raycast(mesh, ray) is None

    def test_box_hit_matches_slab_oracle(self):
        # Unit box one meter ahead along +z; ray enters its near face.
        mesh = WorldMesh(ground_height=-10.0, boxes=[Aabb(Vec3(-0.5, -0.5, 1.0), Vec3(0.5, 0.5, 2.0))])
        ray = Ray(Vec3(0, 0, 0), Vec3(0.0, 0.0, 1.0))
        hit = raycast(mesh, ray)
        assert hit is not None and hit.object_id == "box0"
        assert abs(hit.distance - 1.0) < 1e-12
        assert (hit.point - Vec3(0, 0, 1.0)).norm() < 1e-12

    def test_max_dist_respected(self):
        mesh = WorldMesh(ground_height=0.0)
        assert raycast(mesh, down_ray(y=50.0), max_dist=10.0) is None
        assert raycast(mesh, down_ray(y=50.0), max_dist=50.0) is not None

    def test_nearest_of_many_brute_force(self):
        rng = random.Random(40)
        for _ in range(1000):
            boxes = []
            for _ in range(rng.randint(0, 6)):
                lo = Vec3(rng.uniform(-5, 4), rng.uniform(-1, 4), rng.uniform(-5, 4))
                d = Vec3(rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2))
                boxes.append(Aabb(lo, lo + d))
            mesh = WorldMesh(ground_height=rng.uniform(-2, 0), boxes=boxes)
            origin = Vec3(rng.uniform(-5, 5), rng.uniform(2, 6), rng.uniform(-5, 5))
            theta, phi = rng.uniform(0, 2 * math.pi), rng.uniform(0.1, math.pi - 0.1)
            direction = Vec3(
                math.sin(phi) * math.cos(theta), math.cos(phi), math.sin(phi) * math.sin(theta)
            )
            ray = Ray(origin, direction)
            hit = raycast(mesh, ray, max_dist=20.0)

            # Brute-force: intersect every primitive individually.
            expected = []
            if abs(direction.y) >= 1e-12:
                t = (mesh.ground_height - origin.y) / direction.y
                if 0 <= t <= 20.0:
                    expected.append((t, "ground"))
            for i, box in enumerate(boxes):
                t = ray_box_distance(ray, box)
                if t is not None and t <= 20.0:
                    expected.append((t, f"box{i}"))
            if not expected:
                assert hit is None
            else:
                t, oid = min(expected)
                assert hit is not None
                assert hit.object_id == oid
                assert abs(hit.distance - t) < 1e-12

    def test_tie_breaks_by_lowest_object_id(self):
        # Two coincident boxes: same entry distance, ids differ.
        box = Aabb(Vec3(-0.5, -0.5, 1.0), Vec3(0.5, 0.5, 2.0))
        mesh = WorldMesh(ground_height=-10.0)
        mesh.add_object("b", box)
        mesh.add_object("a", box)
        hit = raycast(mesh, Ray(Vec3(0, 0, 0), Vec3(0.0, 0.0, 1.0)))
        assert hit is not None and hit.object_id == "a"


class TestCursor:
    def test_fixed_gaze_no_drift(self):
        mesh = WorldMesh(ground_height=0.0)
        ensure_cursor(mesh)
        gaze = Ray.through(Vec3(0, 1.6, 0), Vec3(2.0, 0.0, 2.0))
        first = update_cursor(mesh, gaze)
        assert first is not None
        for _ in range(100):
            again = update_cursor(mesh, gaze)
            assert again == first  # bitwise: no drift at all

    def test_drift_bug_reproduces_without_exclusion(self):
        mesh = WorldMesh(ground_height=0.0)
        ensure_cursor(mesh)
        mesh.set_excluded(CURSOR_ID, False)  # regression witness
        origin = Vec3(0, 1.6, 0)
        gaze = Ray.through(origin, Vec3(2.0, 0.0, 2.0))
        pos = update_cursor(mesh, gaze)
        assert pos is not None
        dist0 = (pos - origin).norm()
        prev = dist0
        for _ in range(100):
            pos = update_cursor(mesh, gaze)
            assert pos is not None
            d = (pos - origin).norm()
            assert d < prev + 1e-12  # cursor keeps walking toward the camera
            prev = d
        assert dist0 - prev > 1.0  # macroscopic drift over 100 frames

    def test_miss_returns_none_and_keeps_position(self):
        mesh = WorldMesh(ground_height=0.0)
        ensure_cursor(mesh)
        hit = update_cursor(mesh, Ray.through(Vec3(0, 1.6, 0), Vec3(1.0, 0.0, 1.0)))
        assert hit is not None
        sky = Ray(Vec3(0, 1.6, 0), Vec3(0.0, 1.0, 0.0))
        assert update_cursor(mesh, sky) is None
        assert (mesh.objects[CURSOR_ID].box.center() - hit).norm() < 1e-12

    def test_gaze_sweep_across_box_edge(self):
        # Gaze at the box face hits it; just past its edge lands on ground.
        mesh = WorldMesh(
            ground_height=0.0, boxes=[Aabb(Vec3(1.5, 0.0, -0.5), Vec3(2.5, 1.0, 0.5))]
        )
        ensure_cursor(mesh)
        eye = Vec3(0, 1.0, 0)
        on_box = update_cursor(mesh, Ray.through(eye, Vec3(1.5, 0.5, 0.0)))
        assert on_box is not None
        assert abs(on_box.x - 1.5) < 1e-9  # entry face of the box
        off_box = update_cursor(mesh, Ray.through(eye, Vec3(1.5, 0.5, 0.9)))
        assert off_box is not None
        assert abs(off_box.y - 0.0) < 1e-9  # ground plane


class TestPrimitives:
    def test_bad_box_rejected(self):
        with pytest.raises(ValueError):
            Aabb(Vec3(1, 0, 0), Vec3(0, 1, 1))

    def test_non_unit_ray_rejected(self):
        with pytest.raises(ValueError):
            Ray(Vec3.zero(), Vec3(1.0, 1.0, 0.0))

    def test_duplicate_object_id_rejected(self):
        mesh = WorldMesh()
        mesh.add_object("m", Aabb.centered(Vec3.zero(), 0.1))
        with pytest.raises(ValueError):
            mesh.add_object("m", Aabb.centered(Vec3.zero(), 0.1))

    def test_ray_starting_inside_box(self):
        box = Aabb(Vec3(-1, -1, -1), Vec3(1, 1, 1))
        t = ray_box_distance(Ray(Vec3.zero(), Vec3(0.0, 0.0, 1.0)), box)
        assert t == 0.0
