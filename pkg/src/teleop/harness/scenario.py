"""Scenario files: scene, robot config, anchor placement, scripted timeline.

YAML, versioned with `version: 1`. Scene geometry, head poses, and gaze
rays are authored in the operator's world (left-handed y-up, ground is a
y = height plane); the robot block and the success condition are authored
in the robot's world (right-hand z-up). The two worlds are views of the
same space related by the (x, y, z) -> (z, -x, y) axis mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from ..geometry import Convention, Quat, Transform, Vec3
from ..scene import Aabb, Ray

UNITY = Convention.UNITY_LH_YUP
ROS = Convention.ROS_RH_ZUP


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class CommandEvent:
    t: float
    text: str


@dataclass(frozen=True)
class HeadEvent:
    t: float
    pose: Transform  # UNITY_LH_YUP
    roll: float


@dataclass(frozen=True)
class GazeEvent:
    t: float
    ray: Ray


TimelineEvent = CommandEvent | HeadEvent | GazeEvent


@dataclass(frozen=True)
class Marker:
    id: str
    pos: Vec3  # operator world


@dataclass(frozen=True)
class SuccessCondition:
    kind: str  # "body_within" | "hand_within"
    pos: Vec3  # robot world
    eps: float


@dataclass
class Scenario:
    name: str
    time_limit: float
    dt: float
    ground_height: float
    boxes: list[Aabb]
    markers: list[Marker]
    anchor_id: str
    anchor_pose: Transform  # operator world (UNITY)
    robot_start: tuple[float, float, float]  # x, y, yaw in robot world
    v_max: float
    omega_max: float
    telemetry_hz: float
    arm_command_duration: float
    initial_head: Transform
    hand_offset: Vec3  # wire convention (forward, left, up)
    follow_period: float
    select_period: float
    arm_period: float
    timeline: list[TimelineEvent]
    success: SuccessCondition
    max_gaze_dist: float = 10.0


def _want(mapping: dict, key: str, ctx: str):
    if key not in mapping:
        raise ScenarioError(f"{ctx}: missing required field '{key}'")
    return mapping[key]


def _vec3(value, ctx: str) -> Vec3:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ScenarioError(f"{ctx}: expected [x, y, z], got {value!r}")
    return Vec3(float(value[0]), float(value[1]), float(value[2]))


def _axis_rot(axis: Vec3, degrees: float) -> Quat:
    return Quat.from_axis_angle(axis, math.radians(degrees))


def head_pose_from_fields(spec: dict, ctx: str) -> tuple[Transform, float]:
    pos = _vec3(_want(spec, "pos", ctx), ctx)
    yaw = float(spec.get("yaw_deg", 0.0))
    pitch = float(spec.get("pitch_deg", 0.0))
    roll = float(spec.get("roll_deg", 0.0))
    rot = (
        _axis_rot(Vec3(0, 1, 0), yaw)
        * _axis_rot(Vec3(1, 0, 0), pitch)
        * _axis_rot(Vec3(0, 0, 1), roll)
    )
    return Transform(pos, rot, UNITY), math.radians(roll)


def _parse_event(index: int, spec: dict) -> TimelineEvent:
    ctx = f"timeline[{index}]"
    if not isinstance(spec, dict):
        raise ScenarioError(f"{ctx}: expected a mapping")
    t = float(_want(spec, "t", ctx))
    kinds = [k for k in ("command", "head", "gaze") if k in spec]
    if len(kinds) != 1:
        raise ScenarioError(f"{ctx}: exactly one of command/head/gaze required")
    kind = kinds[0]
    if kind == "command":
        return CommandEvent(t, str(spec["command"]))
    if kind == "head":
        pose, roll = head_pose_from_fields(spec["head"], ctx)
        return HeadEvent(t, pose, roll)
    gaze = spec["gaze"]
    origin = _vec3(_want(gaze, "from", ctx), ctx)
    toward = _vec3(_want(gaze, "toward", ctx), ctx)
    return GazeEvent(t, Ray.through(origin, toward))


def parse_scenario(doc: dict, name_hint: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario file must be a mapping")
    version = _want(doc, "version", "scenario")
    if version != 1:
        raise ScenarioError(f"unsupported scenario version: {version}")

    scene = doc.get("scene", {})
    boxes = []
    for i, b in enumerate(scene.get("boxes", [])):
        ctx = f"scene.boxes[{i}]"
        lo, hi = _vec3(_want(b, "min", ctx), ctx), _vec3(_want(b, "max", ctx), ctx)
        try:
            boxes.append(Aabb(lo, hi))
        except ValueError as exc:
            raise ScenarioError(f"{ctx}: {exc}") from None
    markers = [
        Marker(str(m.get("id", f"marker{i}")), _vec3(_want(m, "pos", f"scene.markers[{i}]"), "pos"))
        for i, m in enumerate(scene.get("markers", []))
    ]

    anchor = doc.get("anchor", {})
    anchor_pos = _vec3(anchor.get("pos", [0, 0, 0]), "anchor.pos")
    anchor_rot = _axis_rot(Vec3(0, 1, 0), float(anchor.get("yaw_deg", 0.0)))
    anchor_pose = Transform(anchor_pos, anchor_rot, UNITY)

    robot = doc.get("robot", {})
    rpos = robot.get("pos", [0.0, 0.0])
    if not isinstance(rpos, (list, tuple)) or len(rpos) != 2:
        raise ScenarioError("robot.pos: expected [x, y]")
    robot_start = (float(rpos[0]), float(rpos[1]), math.radians(float(robot.get("yaw_deg", 0.0))))

    operator = doc.get("operator", {})
    head_spec = operator.get("head", {"pos": [0.0, 1.6, 0.0]})
    initial_head, _ = head_pose_from_fields(head_spec, "operator.head")
    hand_offset = _vec3(operator.get("hand_offset", [0.9, 0.0, 0.2]), "operator.hand_offset")

    raw_timeline = doc.get("timeline", [])
    timeline = [_parse_event(i, ev) for i, ev in enumerate(raw_timeline)]
    for earlier, later in zip(timeline, timeline[1:]):
        if later.t < earlier.t:
            raise ScenarioError("timeline: events must be sorted by t")

    success_spec = _want(doc, "success", "scenario")
    kind = _want(success_spec, "kind", "success")
    if kind not in ("body_within", "hand_within"):
        raise ScenarioError(f"success.kind: unknown kind {kind!r}")
    success = SuccessCondition(
        kind,
        _vec3(_want(success_spec, "pos", "success"), "success.pos"),
        float(_want(success_spec, "eps", "success")),
    )

    return Scenario(
        name=str(doc.get("name", name_hint)),
        time_limit=float(_want(doc, "time_limit", "scenario")),
        dt=float(doc.get("dt", 0.02)),
        ground_height=float(scene.get("ground_height", 0.0)),
        boxes=boxes,
        markers=markers,
        anchor_id=str(anchor.get("id", "shared-anchor")),
        anchor_pose=anchor_pose,
        robot_start=robot_start,
        v_max=float(robot.get("v_max", 1.0)),
        omega_max=float(robot.get("omega_max", 1.0)),
        telemetry_hz=float(robot.get("telemetry_hz", 10.0)),
        arm_command_duration=float(robot.get("arm_command_duration", 0.5)),
        initial_head=initial_head,
        hand_offset=hand_offset,
        follow_period=float(operator.get("follow_period", 0.5)),
        select_period=float(operator.get("select_period", 0.5)),
        arm_period=float(operator.get("arm_period", 0.5)),
        timeline=timeline,
        success=success,
        max_gaze_dist=float(scene.get("max_gaze_dist", 10.0)),
    )


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    name_hint = path.rsplit("/", 1)[-1].removesuffix(".yaml").removesuffix(".yml")
    try:
        return parse_scenario(doc, name_hint)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
