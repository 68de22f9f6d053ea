import math
import random

import numpy as np
import pytest

from teleop.frames import (
    AnchorNotFound,
    AnchorRecord,
    AnchorRegistry,
    FrameTree,
    FrameTreeError,
    anchor_frame_id,
    create_anchor,
    query_anchor,
    to_anchor_local,
)
from teleop.geometry import Convention, Quat, Transform, Vec3, compose, invert

from oracles import mat44, random_transform, transform_close

ROS = Convention.ROS_RH_ZUP
SQ2 = math.sqrt(0.5)


def pose(x=0.0, y=0.0, z=0.0, rot=None):
    return Transform(Vec3(x, y, z), rot or Quat.identity(), ROS)


class TestAnchorRegistry:
    def test_create_in_empty_registry(self):
        reg = AnchorRegistry()
        rec = create_anchor(reg, pose(1, 2, 0))
        assert len(reg) == 1
        assert rec.world_pose.pos == Vec3(1, 2, 0)

    def test_dedup_within_radius(self):
        reg = AnchorRegistry()
        first = create_anchor(reg, pose())
        again = create_anchor(reg, pose(0.1, 0, 0))
        assert again.id == first.id
        assert len(reg) == 1

    def test_new_anchor_outside_radius(self):
        reg = AnchorRegistry()
        create_anchor(reg, pose())
        other = create_anchor(reg, pose(1.0, 0, 0))
        assert len(reg) == 2
        assert other.world_pose.pos.x == 1.0

    def test_idempotent_same_pose(self):
        reg = AnchorRegistry()
        create_anchor(reg, pose(3, 3, 0))
        create_anchor(reg, pose(3, 3, 0))
        assert len(reg) == 1

    def test_save_load_round_trip_bit_exact(self, tmp_path):
        rng = random.Random(20)
        reg = AnchorRegistry()
        for i in range(5):
            create_anchor(reg, random_transform(rng, ROS), anchor_id=f"a{i}")
        path = str(tmp_path / "anchors.txt")
        reg.save(path)
        loaded = AnchorRegistry()
        loaded.load(path)
        assert len(loaded) == len(reg)
        for rec in reg.records():
            got = loaded.get(rec.id)
            assert got.world_pose.pos == rec.world_pose.pos
            assert got.world_pose.rot == rec.world_pose.rot

    def test_load_rejects_malformed_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("a0 1 2 3\n")
        reg = AnchorRegistry()
        with pytest.raises(ValueError, match="bad.txt:1"):
            reg.load(str(path))

    def test_unknown_id(self):
        reg = AnchorRegistry()
        with pytest.raises(AnchorNotFound):
            reg.get("nope")


class TestQueryAnchor:
    def test_known_id_returns_record(self):
        reg, tree = AnchorRegistry(), FrameTree()
        rec = create_anchor(reg, pose(1, 0, 0), anchor_id="a")
        got = query_anchor(reg, tree, "a")
        assert got is rec
        assert tree.has_frame(anchor_frame_id("a"))

    def test_unknown_id_errors(self):
        reg, tree = AnchorRegistry(), FrameTree()
        with pytest.raises(AnchorNotFound):
            query_anchor(reg, tree, "missing")
        assert tree.edge_count() == 0

    def test_query_twice_is_idempotent(self):
        reg, tree = AnchorRegistry(), FrameTree()
        create_anchor(reg, pose(1, 0, 0), anchor_id="a")
        query_anchor(reg, tree, "a")
        n = tree.edge_count()
        query_anchor(reg, tree, "a")
        assert tree.edge_count() == n == 1

    def test_perturbation_shifts_belief(self):
        reg, tree = AnchorRegistry(), FrameTree()
        create_anchor(reg, pose(1, 0, 0), anchor_id="a")
        query_anchor(reg, tree, "a", perturbation=pose(0.05, 0, 0))
        believed = tree.lookup("world", anchor_frame_id("a"))
        assert abs(believed.pos.x - 1.05) < 1e-12


class TestFrameTree:
    def test_lookup_self_is_identity(self):
        tree = FrameTree()
        t = tree.lookup("world", "world")
        assert t.pos == Vec3.zero() and t.rot == Quat.identity()

    def test_chain_composition(self):
        tree = FrameTree()
        tree.add_frame("world", "anchor", pose(1, 0, 0))
        tree.add_frame("anchor", "body", pose(0, 1, 0))
        t = tree.lookup("world", "body")
        assert (t.pos - Vec3(1, 1, 0)).norm() < 1e-12

    def test_lookup_is_inverse_symmetric(self):
        tree = FrameTree()
        tree.add_frame("world", "anchor", pose(1, 0, 0, Quat(0, 0, SQ2, SQ2)))
        tree.add_frame("anchor", "body", pose(0, 1, 0))
        fwd = tree.lookup("world", "body")
        back = tree.lookup("body", "world")
        round_trip = compose(fwd, back)
        assert round_trip.pos.norm() < 1e-9
        assert round_trip.rot.angle() < 1e-9

    def test_unknown_frame_errors(self):
        tree = FrameTree()
        with pytest.raises(FrameTreeError):
            tree.lookup("world", "ghost")

    def test_cycle_rejected(self):
        tree = FrameTree()
        tree.add_frame("world", "a", pose(1, 0, 0))
        tree.add_frame("a", "b", pose(1, 0, 0))
        with pytest.raises(FrameTreeError):
            tree.add_frame("b", "world", pose())
        with pytest.raises(FrameTreeError):
            tree.add_frame("b", "a", pose())  # re-parent would close a loop
        with pytest.raises(FrameTreeError):
            tree.add_frame("a", "a", pose())

    def test_unknown_parent_rejected(self):
        tree = FrameTree()
        with pytest.raises(FrameTreeError):
            tree.add_frame("ghost", "child", pose())

    def test_random_trees_match_matrix_oracle(self):
        rng = random.Random(21)
        for _ in range(100):
            tree = FrameTree()
            frames = ["world"]
            mats = {"world": np.eye(4)}
            for i in range(rng.randint(1, 8)):
                parent = rng.choice(frames)
                child = f"f{i}"
                t = random_transform(rng, ROS)
                tree.add_frame(parent, child, t)
                mats[child] = mats[parent] @ mat44(t)
                frames.append(child)
            a, b = rng.choice(frames), rng.choice(frames)
            expect = np.linalg.inv(mats[a]) @ mats[b]
            assert transform_close(tree.lookup(a, b), expect, 1e-9)


class TestToAnchorLocal:
    def test_identity_anchor(self):
        rec = AnchorRecord("a", pose())
        assert to_anchor_local(rec, Vec3(1, 2, 3)) == Vec3(1, 2, 3)

    def test_coincident_point(self):
        rec = AnchorRecord("a", pose(1, 0, 0))
        assert to_anchor_local(rec, Vec3(1, 0, 0)) == Vec3(0, 0, 0)

    def test_yawed_anchor_matrix_oracle(self):
        # Anchor yawed 90 deg at (1,2,0); world point (2,2,0) lands at
        # (0,-1,0) in anchor space (frozen from the matrix oracle).
        rec = AnchorRecord("a", pose(1, 2, 0, Quat(0, 0, SQ2, SQ2)))
        local = to_anchor_local(rec, Vec3(2, 2, 0))
        expect = np.linalg.inv(mat44(rec.world_pose)) @ np.array([2.0, 2.0, 0.0, 1.0])
        assert (local - Vec3(*expect[:3])).norm() < 1e-12
        assert abs(local.x) < 1e-12 and abs(local.y + 1.0) < 1e-12
