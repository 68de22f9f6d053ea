"""Operator-side state machine: voice grammar, modes, and pose publication.

Commands arrive as normalized text tokens. Recognition and acceptance are
separate: every recognized token raises a confirmation tooltip, but tokens
tied to a specific mode are rejected (without any state change) when that
mode is not current. Basic robot commands pass through in any mode.

The three modes publish on their own topics at their own rates while
active: FOLLOW streams the gaze-cursor position, SELECT streams the one
stored selection, ARM streams the head-derived hand pose. All outbound
positions are anchor-local in the wire convention (right-hand z-up); the
arm pose is relative to the robot body, also in the wire convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .bus.endpoint import encode_payload
from .bus.framing import Envelope
from .bus.rate import RateGate
from .frames import AnchorRecord, to_anchor_local
from .geometry import (
    Convention,
    Quat,
    Transform,
    Vec3,
    compose,
    convert_point,
    convert_transform,
    head_to_hand,
    init_vrobot,
    invert,
)

UNITY = Convention.UNITY_LH_YUP
ROS = Convention.ROS_RH_ZUP

GRIPPER_OPEN_ANGLE = 1.57

TOPIC_COMMAND = "/holo/command"
TOPIC_FOLLOW = "/holo/follow_pose"
TOPIC_SELECT = "/holo/select_pose"
TOPIC_ARM = "/holo/arm_pose"
TOPIC_ANCHOR_ID = "/holo/anchor_id"
TOPIC_UI_EVENTS = "/ui/events"

SERVICE_GRIPPER_ANGLE = "/spot/gripper_angle_open"


class ModeId(Enum):
    NONE = "none"
    FOLLOW = "follow"
    SELECT = "select"
    ARM = "arm"


BASIC_COMMANDS = (
    "sit",
    "stand",
    "power on",
    "power off",
    "claim",
    "release",
    "self right",
    "roll over left",
    "roll over right",
    "spin left",
    "spin right",
)

MODE_SWITCH = {
    "follow mode": ModeId.FOLLOW,
    "select mode": ModeId.SELECT,
    "arm mode": ModeId.ARM,
}

SELECT_ONLY = ("select item", "delete selection")
ARM_ONLY = ("grasp", "rotate hand", "stop rotate hand", "visualize on", "visualize off")
LIFECYCLE = ("activate", "terminate")
HELP_TOKENS = ("show help", "hide help")

GRAMMAR = frozenset(
    BASIC_COMMANDS
    + ("come here",)
    + tuple(MODE_SWITCH)
    + LIFECYCLE
    + SELECT_ONLY
    + ARM_ONLY
    + HELP_TOKENS
)


def normalize_token(text: str) -> str:
    return " ".join(text.lower().split())


# ---------------------------------------------------------------------------
# Effects emitted by dispatch; the runtime turns these into bus traffic.


@dataclass(frozen=True)
class RobotCommand:
    cmd: str
    anchor_id: str | None = None
    pos: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class ServiceCall:
    name: str
    request: dict


@dataclass(frozen=True)
class UiEvent:
    kind: str
    data: dict


@dataclass(frozen=True)
class Rejection:
    token: str
    reason: str


Effect = RobotCommand | ServiceCall | UiEvent | Rejection


@dataclass
class OperatorState:
    """Headset-side sensor snapshot driving the state machine."""

    world_head: Transform
    gaze_cursor: Vec3 | None = None
    head_roll: float = 0.0


@dataclass
class ModeContext:
    hand_offset: Transform  # UNITY_LH_YUP; where the hand starts relative to the head
    current: ModeId = ModeId.NONE
    active: bool = False
    selection: Vec3 | None = None  # anchor-local, wire convention
    selection_world: Vec3 | None = None  # operator world, for the marker
    stored_head_vrobot: Transform | None = None
    world_vrobot: Transform | None = None
    rotating_gripper: bool = False
    grasp_open: bool = False
    gripper_roll: float = 0.0
    visualize: bool = False
    help_visible: bool = False
    rotation_gain: float = 1.0
    rotation_deadzone: float = math.radians(5.0)
    gates: dict[ModeId, RateGate] = field(default_factory=dict)
    last_tick: float | None = None

    @staticmethod
    def create(
        hand_offset: Transform,
        follow_period: float = 0.5,
        select_period: float = 0.5,
        arm_period: float = 0.5,
    ) -> "ModeContext":
        if hand_offset.convention is not UNITY:
            hand_offset = convert_transform(hand_offset, UNITY)
        ctx = ModeContext(hand_offset=hand_offset)
        ctx.gates = {
            ModeId.FOLLOW: RateGate(follow_period),
            ModeId.SELECT: RateGate(select_period),
            ModeId.ARM: RateGate(arm_period),
        }
        return ctx


def gripper_rotation_rate(
    head_roll: float, gain: float = 1.0, deadzone: float = math.radians(5.0)
) -> float:
    """Head tilt to gripper roll rate, with a small deadzone around level."""
    if abs(head_roll) <= deadzone:
        return 0.0
    return gain * (head_roll - math.copysign(deadzone, head_roll))


def _allowed(token: str, mode: ModeId) -> bool:
    if token in SELECT_ONLY:
        return mode is ModeId.SELECT
    if token in ARM_ONLY:
        return mode is ModeId.ARM
    if token in LIFECYCLE:
        return mode is not ModeId.NONE
    return True  # basics, come here, mode switches, help


def dispatch(
    ctx: ModeContext,
    token: str,
    operator: OperatorState | None = None,
    anchor: AnchorRecord | None = None,
) -> list[Effect]:
    """Apply one command token; returns the effects it produced.

    A rejected token mutates nothing: gating is checked before any state
    is touched.
    """
    word = normalize_token(token)
    if word not in GRAMMAR:
        return [Rejection(word, "unknown_command")]

    effects: list[Effect] = [UiEvent("tooltip", {"text": word})]

    if not _allowed(word, ctx.current):
        effects.append(Rejection(word, f"requires_{_required_mode(word)}"))
        return effects

    if word in BASIC_COMMANDS:
        effects.append(RobotCommand(word))
        return effects

    if word == "come here":
        if operator is None or anchor is None:
            effects.append(Rejection(word, "no_anchor"))
            return effects
        head_wire = convert_point(operator.world_head.pos, UNITY, ROS)
        local = to_anchor_local(anchor, head_wire)
        effects.append(RobotCommand(word, anchor.id, local.as_tuple()))
        return effects

    if word in MODE_SWITCH:
        target = MODE_SWITCH[word]
        if ctx.active:
            _terminate_current(ctx, operator)
            effects.append(UiEvent("terminated", {"mode": ctx.current.value}))
        ctx.current = target
        ctx.active = False
        effects.append(UiEvent("mode_changed", {"mode": target.value}))
        return effects

    if word == "activate":
        if not ctx.active:
            if ctx.current is ModeId.ARM:
                arm_activate(ctx, operator)
            ctx.active = True
            effects.append(UiEvent("activated", {"mode": ctx.current.value}))
        return effects

    if word == "terminate":
        if ctx.active:
            _terminate_current(ctx, operator)
            effects.append(UiEvent("terminated", {"mode": ctx.current.value}))
        return effects

    if word == "select item":
        return effects + select_item(ctx, operator, anchor)

    if word == "delete selection":
        had = ctx.selection is not None
        ctx.selection = None
        ctx.selection_world = None
        if had:
            effects.append(UiEvent("marker_removed", {}))
        return effects

    if word == "grasp":
        ctx.grasp_open = not ctx.grasp_open
        angle = GRIPPER_OPEN_ANGLE if ctx.grasp_open else 0.0
        effects.append(ServiceCall(SERVICE_GRIPPER_ANGLE, {"angle": angle}))
        return effects

    if word == "rotate hand":
        ctx.rotating_gripper = True
        return effects

    if word == "stop rotate hand":
        ctx.rotating_gripper = False
        return effects

    if word == "visualize on":
        ctx.visualize = True
        effects.append(UiEvent("visualize", {"on": True}))
        return effects

    if word == "visualize off":
        ctx.visualize = False
        effects.append(UiEvent("visualize", {"on": False}))
        return effects

    if word == "show help":
        ctx.help_visible = True
        effects.append(UiEvent("help", {"visible": True}))
        return effects

    if word == "hide help":
        ctx.help_visible = False
        effects.append(UiEvent("help", {"visible": False}))
        return effects

    raise AssertionError(f"unhandled grammar token: {word}")


def _required_mode(token: str) -> str:
    if token in SELECT_ONLY:
        return ModeId.SELECT.value
    if token in ARM_ONLY:
        return ModeId.ARM.value
    return "mode"


def arm_activate(ctx: ModeContext, operator: OperatorState | None) -> None:
    """Place the virtual robot: fresh from the hand offset on first use,
    otherwise from the pose stored at the last terminate, so the commanded
    hand resumes exactly where it froze."""
    if operator is None:
        raise ValueError("arm activation needs the operator head pose")
    if ctx.stored_head_vrobot is None:
        ctx.world_vrobot = init_vrobot(operator.world_head, ctx.hand_offset)
    else:
        ctx.world_vrobot = compose(operator.world_head, ctx.stored_head_vrobot)


def arm_terminate(ctx: ModeContext, operator: OperatorState | None) -> None:
    if operator is None or ctx.world_vrobot is None:
        ctx.active = False
        return
    ctx.stored_head_vrobot = compose(invert(operator.world_head), ctx.world_vrobot)
    ctx.active = False


def _terminate_current(ctx: ModeContext, operator: OperatorState | None) -> None:
    if ctx.current is ModeId.ARM:
        arm_terminate(ctx, operator)
    else:
        ctx.active = False


def select_item(
    ctx: ModeContext, operator: OperatorState | None, anchor: AnchorRecord | None
) -> list[Effect]:
    if operator is None or operator.gaze_cursor is None:
        return [Rejection("select item", "no_cursor")]
    if anchor is None:
        return [Rejection("select item", "no_anchor")]
    cursor_wire = convert_point(operator.gaze_cursor, UNITY, ROS)
    ctx.selection = to_anchor_local(anchor, cursor_wire)
    ctx.selection_world = operator.gaze_cursor
    return [UiEvent("marker_placed", {"pos": operator.gaze_cursor.as_tuple()})]


def _envelope(topic: str, payload: dict) -> Envelope:
    return Envelope(topic, encode_payload(payload))


def tick(
    ctx: ModeContext,
    operator: OperatorState,
    anchor: AnchorRecord | None,
    now: float,
) -> list[Envelope]:
    """Periodic update: integrates gripper roll and emits the active mode's
    pose publication when its rate gate opens."""
    dt = 0.0 if ctx.last_tick is None else max(0.0, now - ctx.last_tick)
    ctx.last_tick = now

    if ctx.current is ModeId.NONE or not ctx.active:
        return []

    if ctx.current is ModeId.ARM and ctx.rotating_gripper and dt > 0.0:
        rate = gripper_rotation_rate(operator.head_roll, ctx.rotation_gain, ctx.rotation_deadzone)
        ctx.gripper_roll += rate * dt

    if not ctx.gates[ctx.current].allow(now):
        return []

    if anchor is None:
        return [_envelope(TOPIC_UI_EVENTS, {"kind": "warning", "data": {"reason": "no_anchor"}})]

    if ctx.current is ModeId.FOLLOW:
        if operator.gaze_cursor is None:
            return []
        local = to_anchor_local(anchor, convert_point(operator.gaze_cursor, UNITY, ROS))
        return [_envelope(TOPIC_FOLLOW, {"anchor_id": anchor.id, "pos": list(local.as_tuple())})]

    if ctx.current is ModeId.SELECT:
        if ctx.selection is None:
            return []
        return [
            _envelope(TOPIC_SELECT, {"anchor_id": anchor.id, "pos": list(ctx.selection.as_tuple())})
        ]

    if ctx.current is ModeId.ARM:
        if ctx.world_vrobot is None:
            return []
        rel = head_to_hand(operator.world_head, ctx.world_vrobot)
        rel_wire = convert_transform(rel, ROS)
        q = rel_wire.rot
        return [
            _envelope(
                TOPIC_ARM,
                {
                    "anchor_id": anchor.id,
                    "pos": list(rel_wire.pos.as_tuple()),
                    "quat": [q.x, q.y, q.z, q.w],
                    "roll": ctx.gripper_roll,
                },
            )
        ]

    return []
