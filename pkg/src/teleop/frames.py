"""Anchor registry and frame transform tree.

The registry emulates the cloud anchor service at desk scale: anchors are
created with a positional dedup radius, persisted to a flat text file, and
looked up by id from either side of the link. The frame tree plays the
usual transform-tree role: parent/child edges hanging off a single "world"
root, with pose lookup between any two frames.

Both processes hold their own tree; the anchor frame is the only shared
fixture. A configurable rigid perturbation can be injected into the
robot's belief of the anchor to model co-localization error.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from .geometry import Convention, Quat, Transform, Vec3, compose, invert

FrameId = str

WORLD: FrameId = "world"

DEFAULT_DEDUP_RADIUS = 0.5


class AnchorNotFound(KeyError):
    """Unknown anchor id: co-localization cannot proceed."""


class FrameTreeError(ValueError):
    """Invalid frame-tree mutation or lookup."""


@dataclass(frozen=True)
class AnchorRecord:
    id: str
    world_pose: Transform  # ROS_RH_ZUP
    created_at: float = 0.0


def anchor_frame_id(anchor_id: str) -> FrameId:
    return f"anchor:{anchor_id}"


class AnchorRegistry:
    """Anchor store with positional dedup and flat-file persistence."""

    def __init__(self, dedup_radius: float = DEFAULT_DEDUP_RADIUS):
        self.dedup_radius = dedup_radius
        self._records: dict[str, AnchorRecord] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[AnchorRecord]:
        return list(self._records.values())

    def create(
        self, desired_world_pose: Transform, now: float = 0.0, anchor_id: str | None = None
    ) -> AnchorRecord:
        """Create an anchor, or return an existing one within the dedup radius."""
        with self._lock:
            for rec in self._records.values():
                if (rec.world_pose.pos - desired_world_pose.pos).norm() <= self.dedup_radius:
                    return rec
            rec = AnchorRecord(anchor_id or str(uuid.uuid4()), desired_world_pose, now)
            self._records[rec.id] = rec
            return rec

    def get(self, anchor_id: str) -> AnchorRecord:
        try:
            return self._records[anchor_id]
        except KeyError:
            raise AnchorNotFound(f"anchor not found: {anchor_id}") from None

    def save(self, path: str) -> None:
        """One line per anchor: id then pose reals at 17 significant digits."""
        lines = []
        for rec in self._records.values():
            p, q = rec.world_pose.pos, rec.world_pose.rot
            nums = (p.x, p.y, p.z, q.x, q.y, q.z, q.w)
            lines.append(rec.id + " " + " ".join(f"{v:.17g}" for v in nums))
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + ("\n" if lines else ""))

    def load(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as f:
            raw = f.read()
        records: dict[str, AnchorRecord] = {}
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ValueError(f"{path}:{lineno}: expected 8 fields, got {len(parts)}")
            anchor_id = parts[0]
            vals = [float(v) for v in parts[1:]]
            pose = Transform(
                Vec3(vals[0], vals[1], vals[2]),
                Quat(vals[3], vals[4], vals[5], vals[6]),
                Convention.ROS_RH_ZUP,
            )
            records[anchor_id] = AnchorRecord(anchor_id, pose)
        with self._lock:
            self._records = records


@dataclass
class _Edge:
    parent: FrameId
    transform: Transform  # child pose expressed in the parent frame


class FrameTree:
    """Single-rooted transform tree; acyclic by construction."""

    def __init__(self, root: FrameId = WORLD, convention: Convention = Convention.ROS_RH_ZUP):
        self.root = root
        self.convention = convention
        self._edges: dict[FrameId, _Edge] = {}
        self._lock = threading.Lock()

    def frames(self) -> set[FrameId]:
        return {self.root, *self._edges.keys()}

    def has_frame(self, frame: FrameId) -> bool:
        return frame == self.root or frame in self._edges

    def edge_count(self) -> int:
        return len(self._edges)

    def add_frame(self, parent: FrameId, child: FrameId, transform: Transform) -> None:
        """Attach `child` under `parent`. Re-adding updates the edge in place;
        re-parenting or looping back to an existing frame is rejected."""
        if not child:
            raise FrameTreeError("empty frame id")
        with self._lock:
            if not self.has_frame(parent):
                raise FrameTreeError(f"unknown parent frame: {parent}")
            if child == self.root or child == parent:
                raise FrameTreeError(f"insertion would create a cycle at {child!r}")
            existing = self._edges.get(child)
            if existing is not None and existing.parent != parent:
                raise FrameTreeError(
                    f"frame {child!r} already attached under {existing.parent!r}"
                )
            self._edges[child] = _Edge(parent, transform)

    def pose_in_root(self, frame: FrameId) -> Transform:
        if not self.has_frame(frame):
            raise FrameTreeError(f"unknown frame: {frame}")
        chain: list[Transform] = []
        cur = frame
        while cur != self.root:
            edge = self._edges[cur]
            chain.append(edge.transform)
            cur = edge.parent
        pose = Transform.identity(self.convention)
        for t in reversed(chain):
            pose = compose(pose, t)
        return pose

    def lookup(self, frm: FrameId, to: FrameId) -> Transform:
        """Pose of `to` expressed in the `frm` frame."""
        return compose(invert(self.pose_in_root(frm)), self.pose_in_root(to))


def create_anchor(
    registry: AnchorRegistry,
    desired_world_pose: Transform,
    now: float = 0.0,
    anchor_id: str | None = None,
) -> AnchorRecord:
    return registry.create(desired_world_pose, now, anchor_id)


def query_anchor(
    registry: AnchorRegistry,
    tree: FrameTree,
    anchor_id: str,
    perturbation: Transform | None = None,
) -> AnchorRecord:
    """Resolve an anchor id and make its frame available in the tree.

    The perturbation, when given, is composed onto the stored pose to model
    a co-localization error in the querying side's belief. Idempotent: a
    second query does not grow the tree.
    """
    rec = registry.get(anchor_id)
    frame = anchor_frame_id(anchor_id)
    if not tree.has_frame(frame):
        believed = rec.world_pose
        if perturbation is not None:
            believed = compose(perturbation, believed)
        tree.add_frame(tree.root, frame, believed)
    return rec


def to_anchor_local(anchor: AnchorRecord, world_point: Vec3) -> Vec3:
    """Express a world point in the anchor's local frame."""
    return invert(anchor.world_pose).apply(world_point)
