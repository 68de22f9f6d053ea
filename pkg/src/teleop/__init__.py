"""Headset-style teleoperation stack for a simulated quadruped with arm.

Core pieces: rigid-transform algebra across three coordinate conventions,
an anchor registry for co-localization, a framed topic/service bus, the
operator-side mode state machine, a gaze-raycast scene, the robot
simulator, and a deterministic scenario harness.
"""

__version__ = "0.1.0"

from .geometry import (
    Convention,
    Quat,
    Transform,
    Vec3,
    compose,
    convert_point,
    convert_transform,
    head_to_hand,
    heading_quat,
    init_vrobot,
    invert,
)

__all__ = [
    "__version__",
    "Convention",
    "Quat",
    "Transform",
    "Vec3",
    "compose",
    "convert_point",
    "convert_transform",
    "head_to_hand",
    "heading_quat",
    "init_vrobot",
    "invert",
]
