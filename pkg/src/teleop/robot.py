"""Simulated quadruped with arm: driver gating, body kinematics, gripper.

The body is a planar pose (z = 0) driven by go-to-pose goals: it turns
toward the goal heading and translates toward the goal position in the
same step, each capped by its own speed limit. The arm is a floating hand
pose in the body frame that tracks commands by timed interpolation with a
caller-supplied duration, preemptible without discontinuity.

Everything is deterministic: one tick loop, no wall clock, pure float
arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .bus.endpoint import encode_payload
from .bus.framing import Envelope
from .bus.rate import RateGate
from .geometry import (
    Convention,
    Quat,
    Transform,
    Vec3,
    compose,
    heading_quat,
    invert,
)

ROS = Convention.ROS_RH_ZUP

TOPIC_GO_TO_POSE = "/spot/go_to_pose"
TOPIC_JOINT_STATES = "/spot/joint_states"
TOPIC_STATUS = "/spot/status"

SERVICE_GRIPPER_POS = "/spot/gripper_pos"
SERVICE_GRIPPER_ANGLE = "/spot/gripper_angle_open"

GRIPPER_MAX_OPEN = 1.57
LEGACY_ARM_DURATION = 5.0
MIN_ARM_DURATION = 0.05

ARRIVE_POS_TOL = 0.05
ARRIVE_YAW_TOL = math.radians(2.0)
TARGET_DEADBAND = 0.05
COME_HERE_STANDOFF = 0.5


class Posture(Enum):
    SITTING = "sitting"
    STANDING = "standing"
    ROLLED_LEFT = "rolled_left"
    ROLLED_RIGHT = "rolled_right"


@dataclass(frozen=True)
class Result:
    ok: bool
    reason: str | None = None

    @staticmethod
    def accept() -> "Result":
        return Result(True)

    @staticmethod
    def reject(reason: str) -> "Result":
        return Result(False, reason)


@dataclass(frozen=True)
class BodyCommand:
    pos: Vec3  # body frame, z ignored for driving
    quat: Quat


@dataclass
class RobotConfig:
    v_max: float = 1.0
    omega_max: float = 1.0
    telemetry_hz: float = 10.0
    workspace_radius: float = 1.2
    shoulder: Vec3 = field(default_factory=lambda: Vec3(0.3, 0.0, 0.2))


@dataclass
class _ArmGoal:
    start: Transform
    target: Transform
    duration: float
    elapsed: float = 0.0


@dataclass
class RobotState:
    body: Transform
    hand: Transform
    power: bool = False
    lease: bool = False
    posture: Posture = Posture.SITTING
    goal_pos: Vec3 | None = None
    goal_yaw: float | None = None
    arm_goal: _ArmGoal | None = None
    gripper_open: float = 0.0
    gripper_rotation: float = 0.0

    @staticmethod
    def at(x: float = 0.0, y: float = 0.0, yaw: float = 0.0) -> "RobotState":
        return RobotState(
            body=Transform(Vec3(x, y, 0.0), quat_from_yaw(yaw), ROS),
            hand=Transform(Vec3(0.3, 0.0, 0.2), Quat.identity(), ROS),
        )


def wrap_pi(angle: float) -> float:
    return math.atan2(math.sin(angle), math.cos(angle))


def quat_from_yaw(yaw: float) -> Quat:
    return Quat(0.0, 0.0, math.sin(yaw / 2.0), math.cos(yaw / 2.0))


def yaw_of(q: Quat) -> float:
    return math.atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z))


def motion_capable(state: RobotState) -> bool:
    return state.power and state.lease and state.posture is Posture.STANDING


def _clear_motion(state: RobotState) -> None:
    state.goal_pos = None
    state.goal_yaw = None
    state.arm_goal = None


def handle_command(state: RobotState, cmd: str) -> Result:
    """Basic driver commands with lease/power/posture gating."""
    if cmd == "claim":
        state.lease = True
        return Result.accept()
    if cmd == "release":
        if state.power:
            return Result.reject("power_off_first")
        state.lease = False
        _clear_motion(state)
        return Result.accept()
    if cmd == "power on":
        if not state.lease:
            return Result.reject("lease_required")
        state.power = True
        return Result.accept()
    if cmd == "power off":
        _clear_motion(state)
        state.posture = Posture.SITTING
        state.power = False
        return Result.accept()

    if cmd in ("stand", "sit", "self right", "roll over left", "roll over right",
               "spin left", "spin right"):
        if not state.power:
            return Result.reject("power_required")
        if not state.lease:
            return Result.reject("lease_required")

    if cmd == "stand":
        if state.posture in (Posture.ROLLED_LEFT, Posture.ROLLED_RIGHT):
            return Result.reject("self_right_first")
        state.posture = Posture.STANDING
        return Result.accept()
    if cmd == "sit":
        if state.posture in (Posture.ROLLED_LEFT, Posture.ROLLED_RIGHT):
            return Result.reject("self_right_first")
        _clear_motion(state)
        state.posture = Posture.SITTING
        return Result.accept()
    if cmd == "self right":
        if state.posture not in (Posture.ROLLED_LEFT, Posture.ROLLED_RIGHT):
            return Result.reject("not_rolled")
        state.posture = Posture.SITTING
        return Result.accept()
    if cmd == "roll over left" or cmd == "roll over right":
        if state.posture is not Posture.SITTING:
            return Result.reject("sit_first")
        state.posture = Posture.ROLLED_LEFT if cmd.endswith("left") else Posture.ROLLED_RIGHT
        return Result.accept()
    if cmd == "spin left" or cmd == "spin right":
        if not motion_capable(state):
            return Result.reject("not_standing")
        delta = math.pi / 2.0 if cmd.endswith("left") else -math.pi / 2.0
        state.goal_pos = state.body.pos
        state.goal_yaw = wrap_pi(yaw_of(state.body.rot) + delta)
        return Result.accept()

    return Result.reject("unknown_command")


def receive_target(
    state: RobotState, anchor_local: Vec3, anchor_world_pose: Transform
) -> BodyCommand | None:
    """Resolve an anchor-local target into a body-frame go-to-pose command.

    Returns None when the planar displacement is inside the deadband.
    """
    world = anchor_world_pose.apply(anchor_local)
    body_local = invert(state.body).apply(world)
    dx, dy = body_local.x, body_local.y
    if math.hypot(dx, dy) < TARGET_DEADBAND:
        return None
    return BodyCommand(Vec3(dx, dy, 0.0), heading_quat(dx, dy))


def apply_body_command(state: RobotState, cmd: BodyCommand) -> Result:
    if not motion_capable(state):
        return Result.reject("not_standing")
    world = state.body.apply(Vec3(cmd.pos.x, cmd.pos.y, 0.0))
    state.goal_pos = Vec3(world.x, world.y, 0.0)
    state.goal_yaw = wrap_pi(yaw_of(state.body.rot) + yaw_of(cmd.quat))
    return Result.accept()


def come_here(state: RobotState, headset_world: Vec3) -> BodyCommand | None:
    """Walk toward the operator, stopping a standoff distance short."""
    dx = headset_world.x - state.body.pos.x
    dy = headset_world.y - state.body.pos.y
    dist = math.hypot(dx, dy)
    if dist <= COME_HERE_STANDOFF:
        return None
    ux, uy = dx / dist, dy / dist
    target = Vec3(
        headset_world.x - ux * COME_HERE_STANDOFF,
        headset_world.y - uy * COME_HERE_STANDOFF,
        0.0,
    )
    local = invert(state.body).apply(target)
    toward = invert(state.body).apply(Vec3(headset_world.x, headset_world.y, 0.0))
    return BodyCommand(Vec3(local.x, local.y, 0.0), heading_quat(toward.x, toward.y))


def body_step(state: RobotState, dt: float, cfg: RobotConfig) -> None:
    """Advance toward the goal: rotate and translate in the same step."""
    if state.goal_pos is None or state.goal_yaw is None or not motion_capable(state):
        return
    yaw = yaw_of(state.body.rot)
    dyaw = wrap_pi(state.goal_yaw - yaw)
    max_turn = cfg.omega_max * dt
    yaw_new = yaw + max(-max_turn, min(max_turn, dyaw))

    dx = state.goal_pos.x - state.body.pos.x
    dy = state.goal_pos.y - state.body.pos.y
    dist = math.hypot(dx, dy)
    step = min(cfg.v_max * dt, dist)
    if dist > 0.0:
        pos_new = Vec3(
            state.body.pos.x + dx / dist * step, state.body.pos.y + dy / dist * step, 0.0
        )
    else:
        pos_new = state.body.pos
    state.body = Transform(pos_new, quat_from_yaw(yaw_new), ROS)

    remaining = math.hypot(state.goal_pos.x - pos_new.x, state.goal_pos.y - pos_new.y)
    if remaining <= ARRIVE_POS_TOL and abs(wrap_pi(state.goal_yaw - yaw_new)) <= ARRIVE_YAW_TOL:
        state.goal_pos = None
        state.goal_yaw = None


def _slerp(a: Quat, b: Quat, s: float) -> Quat:
    dot = a.x * b.x + a.y * b.y + a.z * b.z + a.w * b.w
    bx, by, bz, bw = (b.x, b.y, b.z, b.w) if dot >= 0 else (-b.x, -b.y, -b.z, -b.w)
    dot = abs(dot)
    if dot > 0.9995:
        return Quat(
            a.x + s * (bx - a.x), a.y + s * (by - a.y), a.z + s * (bz - a.z), a.w + s * (bw - a.w)
        )
    theta = math.acos(min(1.0, dot))
    sin_theta = math.sin(theta)
    ka = math.sin((1.0 - s) * theta) / sin_theta
    kb = math.sin(s * theta) / sin_theta
    return Quat(ka * a.x + kb * bx, ka * a.y + kb * by, ka * a.z + kb * bz, ka * a.w + kb * bw)


def gripper_pos(
    state: RobotState, target: Transform, duration: float | None, cfg: RobotConfig
) -> Result:
    """Move the hand to a body-frame pose over `duration` seconds.

    Omitted duration emulates the original fixed 5 s driver behavior. A
    new command preempts from the instantaneous current pose, so tracking
    stays continuous.
    """
    if not motion_capable(state):
        return Result.reject("not_standing")
    if duration is None:
        duration = LEGACY_ARM_DURATION
    if duration < MIN_ARM_DURATION:
        return Result.reject("invalid_duration")
    offset = target.pos - cfg.shoulder
    if offset.norm() > cfg.workspace_radius:
        return Result.reject("out_of_workspace")
    state.arm_goal = _ArmGoal(start=state.hand, target=target, duration=duration)
    return Result.accept()


def gripper_angle_open(state: RobotState, angle: float) -> Result:
    if not motion_capable(state):
        return Result.reject("not_standing")
    state.gripper_open = max(0.0, min(GRIPPER_MAX_OPEN, angle))
    return Result.accept()


def arm_step(state: RobotState, dt: float) -> None:
    goal = state.arm_goal
    if goal is None or not motion_capable(state):
        return
    goal.elapsed += dt
    s = min(1.0, goal.elapsed / goal.duration)
    # Tick-summed time can undershoot the duration by a few ULPs; treat
    # within-epsilon as arrived so an N-step command finishes in N steps.
    if goal.elapsed >= goal.duration * (1.0 - 1e-9):
        state.hand = goal.target
        state.arm_goal = None
        return
    pos = goal.start.pos + (goal.target.pos - goal.start.pos).scale(s)
    rot = _slerp(goal.start.rot, goal.target.rot, s)
    state.hand = Transform(pos, rot, ROS)


class RobotSim:
    """Deterministic tick-loop driver around the robot state."""

    def __init__(self, state: RobotState | None = None, cfg: RobotConfig | None = None):
        self.state = state or RobotState.at()
        self.cfg = cfg or RobotConfig()
        self._telemetry_gate = RateGate(1.0 / self.cfg.telemetry_hz)

    def step(self, dt: float) -> None:
        body_step(self.state, dt, self.cfg)
        arm_step(self.state, dt)

    def publish_telemetry(self, now: float) -> list[Envelope]:
        if not self._telemetry_gate.allow(now):
            return []
        s = self.state
        hq = s.hand.rot
        bq = s.body.rot
        joint_states = {
            "gripper_rotation": s.gripper_rotation,
            "gripper_open": s.gripper_open,
            "arm_pose": {
                "pos": list(s.hand.pos.as_tuple()),
                "quat": [hq.x, hq.y, hq.z, hq.w],
            },
        }
        status = {
            "power": "on" if s.power else "off",
            "lease": "claimed" if s.lease else "released",
            "posture": s.posture.value,
            "body_pose": {
                "pos": list(s.body.pos.as_tuple()),
                "quat": [bq.x, bq.y, bq.z, bq.w],
            },
        }
        return [
            Envelope(TOPIC_JOINT_STATES, encode_payload(joint_states)),
            Envelope(TOPIC_STATUS, encode_payload(status)),
        ]
