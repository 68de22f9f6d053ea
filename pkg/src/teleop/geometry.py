"""Rigid-transform algebra across the three coordinate conventions.

Everything is plain value types: a transform is a position plus a unit
quaternion, tagged with the convention its numbers are expressed in.
Conversion between conventions goes through exact signed-permutation
matrices, so point round-trips are bit-exact; rotations are converted by
conjugating the equivalent rotation matrix with the basis change, which
stays correct across the left/right handedness flip.

Angles are radians, distances meters. Quaternion storage order is
(x, y, z, w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class ConventionMismatch(ValueError):
    """Raised when two transforms from different conventions are combined."""


class DegenerateHeading(ValueError):
    """Raised when a heading is requested for a near-zero displacement."""


class Convention(Enum):
    UNITY_LH_YUP = "unity_lh_yup"
    ANCHOR_RH_YUP = "anchor_rh_yup"
    ROS_RH_ZUP = "ros_rh_zup"


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(k * self.x, k * self.y, k * self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @staticmethod
    def zero() -> "Vec3":
        return Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Quat:
    """Unit quaternion, stored (x, y, z, w). Normalized on construction."""

    x: float
    y: float
    z: float
    w: float

    def __post_init__(self) -> None:
        n = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w)
        if n < 1e-12:
            raise ValueError("zero-norm quaternion")
        # n == 1.0 divides are bitwise no-ops, so exact inputs stay exact.
        object.__setattr__(self, "x", self.x / n)
        object.__setattr__(self, "y", self.y / n)
        object.__setattr__(self, "z", self.z / n)
        object.__setattr__(self, "w", self.w / n)

    @staticmethod
    def identity() -> "Quat":
        return Quat(0.0, 0.0, 0.0, 1.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle: float) -> "Quat":
        n = axis.norm()
        if n < 1e-12:
            raise ValueError("zero rotation axis")
        s = math.sin(angle / 2.0) / n
        return Quat(axis.x * s, axis.y * s, axis.z * s, math.cos(angle / 2.0))

    def conjugate(self) -> "Quat":
        return Quat(-self.x, -self.y, -self.z, self.w)

    def __mul__(self, other: "Quat") -> "Quat":
        x1, y1, z1, w1 = self.x, self.y, self.z, self.w
        x2, y2, z2, w2 = other.x, other.y, other.z, other.w
        return Quat(
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        )

    def rotate(self, v: Vec3) -> Vec3:
        # v' = v + 2w (q_v x v) + 2 q_v x (q_v x v)
        qv = Vec3(self.x, self.y, self.z)
        t = qv.cross(v).scale(2.0)
        return v + t.scale(self.w) + qv.cross(t)

    def angle(self) -> float:
        """Rotation angle in [0, pi]."""
        s = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        return 2.0 * math.atan2(s, abs(self.w))

    def to_matrix(self) -> tuple[tuple[float, float, float], ...]:
        x, y, z, w = self.x, self.y, self.z, self.w
        return (
            (1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)),
            (2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)),
            (2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)),
        )

    @staticmethod
    def from_matrix(m: tuple[tuple[float, float, float], ...]) -> "Quat":
        # Shepperd's method: pick the largest diagonal combination.
        tr = m[0][0] + m[1][1] + m[2][2]
        if tr > 0.0:
            s = math.sqrt(tr + 1.0) * 2.0
            return Quat(
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
                0.25 * s,
            )
        if m[0][0] > m[1][1] and m[0][0] > m[2][2]:
            s = math.sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0
            return Quat(
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[2][1] - m[1][2]) / s,
            )
        if m[1][1] > m[2][2]:
            s = math.sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0
            return Quat(
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
                (m[0][2] - m[2][0]) / s,
            )
        s = math.sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0
        return Quat(
            (m[0][2] + m[2][0]) / s,
            (m[1][2] + m[2][1]) / s,
            0.25 * s,
            (m[1][0] - m[0][1]) / s,
        )


@dataclass(frozen=True)
class Transform:
    pos: Vec3
    rot: Quat
    convention: Convention

    @staticmethod
    def identity(convention: Convention) -> "Transform":
        return Transform(Vec3.zero(), Quat.identity(), convention)

    def apply(self, p: Vec3) -> Vec3:
        """Map a point from this transform's child frame into its parent frame."""
        return self.rot.rotate(p) + self.pos


def compose(a: Transform, b: Transform) -> Transform:
    """a then b: the transform of b's child expressed in a's parent frame."""
    if a.convention is not b.convention:
        raise ConventionMismatch(f"compose: {a.convention} vs {b.convention}")
    return Transform(a.rot.rotate(b.pos) + a.pos, a.rot * b.rot, a.convention)


def invert(t: Transform) -> Transform:
    inv_rot = t.rot.conjugate()
    return Transform(-inv_rot.rotate(t.pos), inv_rot, t.convention)


# Basis matrix of each convention: columns express its axes in the wire
# (right-hand z-up) basis. The headset-engine y-up basis is mapped by
# (x, y, z) -> (z, -x, y), which is also the handedness fix; the anchor
# basis coincides numerically with the wire basis once that fix is applied,
# so its matrix is the identity.
_Mat3 = tuple[tuple[float, float, float], ...]

_IDENT3: _Mat3 = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

_TO_ROS: dict[Convention, _Mat3] = {
    Convention.UNITY_LH_YUP: ((0.0, 0.0, 1.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    Convention.ANCHOR_RH_YUP: _IDENT3,
    Convention.ROS_RH_ZUP: _IDENT3,
}


def _mat_transpose(m: _Mat3) -> _Mat3:
    return tuple(tuple(m[r][c] for r in range(3)) for c in range(3))  # type: ignore[return-value]


def _mat_mul(a: _Mat3, b: _Mat3) -> _Mat3:
    return tuple(
        tuple(sum(a[r][k] * b[k][c] for k in range(3)) for c in range(3)) for r in range(3)
    )  # type: ignore[return-value]


def _mat_vec(m: _Mat3, v: Vec3) -> Vec3:
    return Vec3(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )


def basis_change(frm: Convention, to: Convention) -> _Mat3:
    """Signed-permutation matrix taking coordinates in `frm` to `to`."""
    return _mat_mul(_mat_transpose(_TO_ROS[to]), _TO_ROS[frm])


def convert_point(p: Vec3, frm: Convention, to: Convention) -> Vec3:
    return _mat_vec(basis_change(frm, to), p)


def convert_quat(q: Quat, frm: Convention, to: Convention) -> Quat:
    if frm is to:
        return q
    m = basis_change(frm, to)
    r = _mat_mul(_mat_mul(m, q.to_matrix()), _mat_transpose(m))
    return Quat.from_matrix(r)


def convert_transform(t: Transform, to: Convention) -> Transform:
    if t.convention is to:
        return t
    return Transform(
        convert_point(t.pos, t.convention, to),
        convert_quat(t.rot, t.convention, to),
        to,
    )


def heading_quat(dx: float, dy: float) -> Quat:
    """Yaw-only quaternion facing the planar displacement (dx, dy).

    Closed-form half-angle construction; sign(0) is taken as +1 so the
    180-degree case is deterministic. Refuses displacements under 1e-6 m
    rather than fabricating a direction.
    """
    r = math.hypot(dx, dy)
    if r < 1e-6:
        raise DegenerateHeading("no heading: displacement too small")
    sin_t = dy / r
    cos_t = dx / r
    sign = 1.0 if sin_t >= 0.0 else -1.0
    half_sin = sign * math.sqrt(max(0.0, (1.0 - cos_t) / 2.0))
    half_cos = math.sqrt(max(0.0, 1.0 - half_sin * half_sin))
    return Quat(0.0, 0.0, half_sin, half_cos)


def head_to_hand(world_head: Transform, world_vrobot: Transform) -> Transform:
    """Commanded hand pose in the robot body frame.

    The virtual robot's pose expressed in the head frame is exactly the
    hand pose the real robot should assume relative to its body.
    """
    if world_head.convention is not world_vrobot.convention:
        raise ConventionMismatch("head_to_hand: mismatched conventions")
    return compose(invert(world_head), world_vrobot)


def init_vrobot(world_head: Transform, hand_offset: Transform) -> Transform:
    """Initial virtual-robot pose so the commanded hand starts at hand_offset."""
    return compose(world_head, hand_offset)
