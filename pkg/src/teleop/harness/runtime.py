"""The two endpoint runtimes: headset side and robot side.

Both sides speak the same wire surface no matter the transport. The
harness clock is carried on the internal "~clock" topic: the robot steps
its simulation exactly once per clock envelope and acknowledges with
"~tick/done", which makes TCP runs tick-for-tick identical to in-process
runs (the stream is FIFO, so everything published before a clock tick is
applied before that tick's step).
"""

from __future__ import annotations

import hashlib
import json

from ..bus.endpoint import BusEndpoint, TopicRegistry, encode_payload
from ..bus.framing import Envelope
from ..frames import (
    AnchorNotFound,
    AnchorRecord,
    AnchorRegistry,
    FrameTree,
    anchor_frame_id,
    create_anchor,
    query_anchor,
)
from ..geometry import Convention, Quat, Transform, Vec3, compose, convert_transform
from ..modes import (
    ModeContext,
    OperatorState,
    Rejection,
    RobotCommand,
    ServiceCall,
    UiEvent,
    dispatch,
    tick as modes_tick,
    TOPIC_ANCHOR_ID,
    TOPIC_ARM,
    TOPIC_COMMAND,
    TOPIC_FOLLOW,
    TOPIC_SELECT,
    TOPIC_UI_EVENTS,
)
from ..robot import (
    RobotConfig,
    RobotSim,
    RobotState,
    SERVICE_GRIPPER_ANGLE,
    SERVICE_GRIPPER_POS,
    TOPIC_GO_TO_POSE,
    TOPIC_JOINT_STATES,
    TOPIC_STATUS,
    apply_body_command,
    come_here,
    gripper_angle_open,
    gripper_pos,
    handle_command,
    receive_target,
    yaw_of,
)
from ..scene import Aabb, Ray, WorldMesh, ensure_cursor, update_cursor
from .scenario import CommandEvent, GazeEvent, HeadEvent, Scenario, TimelineEvent

ROS = Convention.ROS_RH_ZUP
UNITY = Convention.UNITY_LH_YUP

TOPIC_CLOCK = "~clock"
TOPIC_TICK_DONE = "~tick/done"
TOPIC_END = "~end"
TOPIC_FINAL = "~final"

HOLO_TOPICS = (TOPIC_COMMAND, TOPIC_FOLLOW, TOPIC_SELECT, TOPIC_ARM, TOPIC_ANCHOR_ID)
SPOT_TOPICS = (TOPIC_GO_TO_POSE, TOPIC_JOINT_STATES, TOPIC_STATUS)


def build_operator_registry() -> TopicRegistry:
    reg = TopicRegistry()
    for t in HOLO_TOPICS:
        reg.register(t, "out")
    for t in SPOT_TOPICS:
        reg.register(t, "in")
    reg.register(TOPIC_CLOCK, "out")
    reg.register(TOPIC_END, "out")
    reg.register(TOPIC_TICK_DONE, "in")
    reg.register(TOPIC_FINAL, "in")
    reg.freeze()
    return reg


def build_robot_registry() -> TopicRegistry:
    reg = TopicRegistry()
    for t in HOLO_TOPICS:
        reg.register(t, "in")
    for t in SPOT_TOPICS:
        reg.register(t, "out")
    reg.register(TOPIC_CLOCK, "in")
    reg.register(TOPIC_END, "in")
    reg.register(TOPIC_TICK_DONE, "out")
    reg.register(TOPIC_FINAL, "out")
    reg.freeze()
    return reg


def pose_payload(t: Transform) -> dict:
    return {
        "pos": [t.pos.x, t.pos.y, t.pos.z],
        "quat": [t.rot.x, t.rot.y, t.rot.z, t.rot.w],
    }


def pose_from_payload(obj: dict, convention: Convention = ROS) -> Transform:
    p = obj["pos"]
    q = obj["quat"]
    return Transform(
        Vec3(float(p[0]), float(p[1]), float(p[2])),
        Quat(float(q[0]), float(q[1]), float(q[2]), float(q[3])),
        convention,
    )


class OperatorRuntime:
    """Headset process: scene, mode machine, anchor ownership, UI feed."""

    def __init__(self, scenario: Scenario, endpoint: BusEndpoint, anchor_store: str):
        self.scenario = scenario
        self.endpoint = endpoint
        self.mesh = WorldMesh(ground_height=scenario.ground_height, boxes=list(scenario.boxes))
        ensure_cursor(self.mesh)
        for marker in scenario.markers:
            self.mesh.add_object(marker.id, Aabb.centered(marker.pos, 0.05), excluded=True)
        self.operator = OperatorState(scenario.initial_head)
        offset = Transform(
            Vec3(*scenario.hand_offset.as_tuple()), Quat.identity(), ROS
        )
        self.ctx = ModeContext.create(
            convert_transform(offset, UNITY),
            follow_period=scenario.follow_period,
            select_period=scenario.select_period,
            arm_period=scenario.arm_period,
        )
        self.registry = AnchorRegistry()
        anchor_wire_pose = convert_transform(scenario.anchor_pose, ROS)
        self.anchor: AnchorRecord = create_anchor(
            self.registry, anchor_wire_pose, anchor_id=scenario.anchor_id
        )
        self.registry.save(anchor_store)
        self.gaze: Ray | None = None
        self.ui_events: list[dict] = []
        self.command_count = 0
        self.rejection_count = 0
        self.latest_status: dict | None = None
        self.latest_joint: dict | None = None
        self.final: dict | None = None
        self._tick_acked = False
        endpoint.subscribe(TOPIC_STATUS, self._on_status)
        endpoint.subscribe(TOPIC_JOINT_STATES, self._on_joint_states)
        endpoint.subscribe(TOPIC_GO_TO_POSE, lambda t, p: None)
        endpoint.subscribe(TOPIC_TICK_DONE, self._on_tick_done)
        endpoint.subscribe(TOPIC_FINAL, self._on_final)

    # -- inbound ---------------------------------------------------------
    def _on_status(self, topic: str, payload: dict) -> None:
        self.latest_status = payload

    def _on_joint_states(self, topic: str, payload: dict) -> None:
        self.latest_joint = payload

    def _on_tick_done(self, topic: str, payload: dict) -> None:
        self._tick_acked = True

    def _on_final(self, topic: str, payload: dict) -> None:
        self.final = payload

    # -- control ---------------------------------------------------------
    def announce_anchor(self) -> None:
        self.endpoint.publish(TOPIC_ANCHOR_ID, {"id": self.anchor.id})

    def apply_event(self, event: TimelineEvent) -> None:
        if isinstance(event, CommandEvent):
            self.command_count += 1
            self.handle_command_text(event.text)
        elif isinstance(event, HeadEvent):
            self.operator.world_head = event.pose
            self.operator.head_roll = event.roll
        elif isinstance(event, GazeEvent):
            self.gaze = event.ray

    def handle_command_text(self, text: str) -> None:
        effects = dispatch(self.ctx, text, self.operator, self.anchor)
        for effect in effects:
            if isinstance(effect, RobotCommand):
                payload: dict = {"cmd": effect.cmd}
                if effect.anchor_id is not None:
                    payload["anchor_id"] = effect.anchor_id
                if effect.pos is not None:
                    payload["pos"] = list(effect.pos)
                self.endpoint.publish(TOPIC_COMMAND, payload)
            elif isinstance(effect, ServiceCall):
                reply = self.endpoint.call_service(effect.name, effect.request)
                if not reply.get("ok", False):
                    self.rejection_count += 1
                    self.ui_events.append(
                        {"kind": "rejected", "data": {"token": "service", "reason": reply.get("reason", "error")}}
                    )
            elif isinstance(effect, Rejection):
                self.rejection_count += 1
                self.ui_events.append(
                    {"kind": "rejected", "data": {"token": effect.token, "reason": effect.reason}}
                )
            elif isinstance(effect, UiEvent):
                self.ui_events.append({"kind": effect.kind, "data": effect.data})

    def tick(self, now: float) -> None:
        if self.gaze is not None:
            self.operator.gaze_cursor = update_cursor(
                self.mesh, self.gaze, self.scenario.max_gaze_dist
            )
        for env in modes_tick(self.ctx, self.operator, self.anchor, now):
            if env.topic == TOPIC_UI_EVENTS:
                self.ui_events.append(json.loads(env.payload))
            else:
                self.endpoint.publish_envelope(env)

    def send_clock(self, t: float, dt: float) -> None:
        self._tick_acked = False
        self.endpoint.publish(TOPIC_CLOCK, {"t": t, "dt": dt})

    def tick_acked(self) -> bool:
        return self._tick_acked

    # -- derived views -----------------------------------------------------
    def body_world_pose(self) -> Transform | None:
        if self.latest_status is None:
            return None
        return pose_from_payload(self.latest_status["body_pose"])

    def hand_world_pose(self) -> Transform | None:
        if self.latest_status is None or self.latest_joint is None:
            return None
        body = pose_from_payload(self.latest_status["body_pose"])
        hand = pose_from_payload(self.latest_joint["arm_pose"])
        return compose(body, hand)


class RobotRuntime:
    """Robot process: driver gating, simulator, anchor co-localization."""

    def __init__(
        self,
        scenario: Scenario,
        endpoint: BusEndpoint,
        anchor_store: str,
        perturbation: Transform | None = None,
    ):
        x, y, yaw = scenario.robot_start
        cfg = RobotConfig(
            v_max=scenario.v_max,
            omega_max=scenario.omega_max,
            telemetry_hz=scenario.telemetry_hz,
        )
        self.sim = RobotSim(RobotState.at(x, y, yaw), cfg)
        self.endpoint = endpoint
        self.anchor_store = anchor_store
        self.perturbation = perturbation
        self.arm_command_duration = scenario.arm_command_duration
        self.registry = AnchorRegistry()
        self.tree = FrameTree()
        self.anchor_frame: str | None = None
        self.colocalization_error: str | None = None
        self.rejections = 0
        self.path_length = 0.0
        self.ticks = 0
        self.trajectory_hashes: list[str] = []
        self.done = False
        endpoint.subscribe(TOPIC_ANCHOR_ID, self._on_anchor_id)
        endpoint.subscribe(TOPIC_COMMAND, self._on_command)
        endpoint.subscribe(TOPIC_FOLLOW, self._on_target)
        endpoint.subscribe(TOPIC_SELECT, self._on_target)
        endpoint.subscribe(TOPIC_ARM, self._on_arm_pose)
        endpoint.subscribe(TOPIC_CLOCK, self._on_clock)
        endpoint.subscribe(TOPIC_END, self._on_end)
        endpoint.register_service(SERVICE_GRIPPER_POS, self._svc_gripper_pos)
        endpoint.register_service(SERVICE_GRIPPER_ANGLE, self._svc_gripper_angle)

    # -- co-localization -----------------------------------------------------
    def _on_anchor_id(self, topic: str, payload: dict) -> None:
        anchor_id = str(payload["id"])
        try:
            self.registry.load(self.anchor_store)
            query_anchor(self.registry, self.tree, anchor_id, self.perturbation)
        except (AnchorNotFound, OSError, ValueError) as exc:
            self.colocalization_error = str(exc)
            return
        self.anchor_frame = anchor_frame_id(anchor_id)
        self.colocalization_error = None

    def _anchor_world(self) -> Transform | None:
        if self.anchor_frame is None:
            return None
        return self.tree.lookup(self.tree.root, self.anchor_frame)

    # -- inbound topics --------------------------------------------------
    def _on_command(self, topic: str, payload: dict) -> None:
        cmd = str(payload.get("cmd", ""))
        if cmd == "come here":
            anchor_world = self._anchor_world()
            if anchor_world is None or "pos" not in payload:
                self.rejections += 1
                return
            p = payload["pos"]
            headset = anchor_world.apply(Vec3(float(p[0]), float(p[1]), float(p[2])))
            body_cmd = come_here(self.sim.state, headset)
            if body_cmd is not None:
                self._issue_body_command(body_cmd)
            return
        result = handle_command(self.sim.state, cmd)
        if not result.ok:
            self.rejections += 1

    def _on_target(self, topic: str, payload: dict) -> None:
        anchor_world = self._anchor_world()
        if anchor_world is None:
            self.rejections += 1
            return
        p = payload["pos"]
        local = Vec3(float(p[0]), float(p[1]), float(p[2]))
        body_cmd = receive_target(self.sim.state, local, anchor_world)
        if body_cmd is not None:
            self._issue_body_command(body_cmd)

    def _issue_body_command(self, cmd) -> None:
        result = apply_body_command(self.sim.state, cmd)
        if not result.ok:
            self.rejections += 1
            return
        q = cmd.quat
        self.endpoint.publish(
            TOPIC_GO_TO_POSE,
            {"pos": [cmd.pos.x, cmd.pos.y, cmd.pos.z], "quat": [q.x, q.y, q.z, q.w]},
        )

    def _on_arm_pose(self, topic: str, payload: dict) -> None:
        pose = pose_from_payload(payload)
        result = gripper_pos(self.sim.state, pose, self.arm_command_duration, self.sim.cfg)
        if not result.ok:
            self.rejections += 1
            return
        if "roll" in payload:
            self.sim.state.gripper_rotation = float(payload["roll"])

    # -- services ----------------------------------------------------------
    def _svc_gripper_pos(self, request: dict) -> dict:
        pose = pose_from_payload(request)
        duration = request.get("duration")
        result = gripper_pos(
            self.sim.state, pose, None if duration is None else float(duration), self.sim.cfg
        )
        return {"ok": result.ok, "reason": result.reason}

    def _svc_gripper_angle(self, request: dict) -> dict:
        result = gripper_angle_open(self.sim.state, float(request.get("angle", 0.0)))
        return {"ok": result.ok, "reason": result.reason}

    # -- clocked stepping --------------------------------------------------
    def _on_clock(self, topic: str, payload: dict) -> None:
        t, dt = float(payload["t"]), float(payload["dt"])
        before = self.sim.state.body.pos
        self.sim.step(dt)
        after = self.sim.state.body.pos
        self.path_length += (after - before).norm()
        self.ticks += 1
        self.trajectory_hashes.append(self._pose_hash())
        for env in self.sim.publish_telemetry(t):
            self.endpoint.publish_envelope(env)
        self.endpoint.publish(TOPIC_TICK_DONE, {"t": t})

    def _pose_hash(self) -> str:
        s = self.sim.state
        raw = repr(
            (
                s.body.pos.as_tuple(),
                yaw_of(s.body.rot),
                s.hand.pos.as_tuple(),
                (s.hand.rot.x, s.hand.rot.y, s.hand.rot.z, s.hand.rot.w),
                s.gripper_open,
                s.gripper_rotation,
            )
        ).encode()
        return hashlib.blake2b(raw, digest_size=8).hexdigest()

    def _on_end(self, topic: str, payload: dict) -> None:
        s = self.sim.state
        self.endpoint.publish(
            TOPIC_FINAL,
            {
                "body_pose": pose_payload(s.body),
                "hand_pose": pose_payload(s.hand),
                "gripper_open": s.gripper_open,
                "gripper_rotation": s.gripper_rotation,
                "path_length": self.path_length,
                "ticks": self.ticks,
                "rejections": self.rejections,
                "trajectory_hashes": self.trajectory_hashes,
                "colocalization_error": self.colocalization_error,
            },
        )
        self.done = True
