"""Headless scenario execution with deterministic reports.

Both transports run the same lockstep: the operator applies timeline
events, publishes its mode traffic, then sends a clock tick and waits for
the robot's acknowledgement before checking success. Over TCP the robot
lives in a separate process connected by one FIFO stream, so the tick
interleaving — and therefore the whole trajectory — is identical to the
in-process run.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
import sys
import tempfile
import time

from ..bus.endpoint import BusEndpoint, connect_tcp, inproc_pair
from ..geometry import Vec3
from .runtime import (
    OperatorRuntime,
    RobotRuntime,
    build_operator_registry,
    build_robot_registry,
)
from .scenario import Scenario, load_scenario

REPORT_VERSION = 1

# Fields a replay re-derives and compares; "transport" is the only field
# allowed to differ between a report and its validation run.
_REPLAY_IGNORED = ("transport",)


class RunError(RuntimeError):
    pass


def _chain_hash(hashes: list[str]) -> str:
    h = hashlib.blake2b(digest_size=16)
    for item in hashes:
        h.update(item.encode())
    return h.hexdigest()


def _success_met(op: OperatorRuntime, scenario: Scenario) -> bool:
    target = scenario.success.pos
    if scenario.success.kind == "body_within":
        pose = op.body_world_pose()
        if pose is None:
            return False
        return (pose.pos - target).norm() <= scenario.success.eps
    pose = op.hand_world_pose()
    if pose is None:
        return False
    return (pose.pos - target).norm() <= scenario.success.eps


class _InProcTransport:
    def __init__(self, scenario: Scenario, anchor_store: str):
        op_ep, rb_ep = inproc_pair(build_operator_registry(), build_robot_registry())
        self.op_ep = op_ep
        self.rb_ep = rb_ep
        self.operator = OperatorRuntime(scenario, op_ep, anchor_store)
        self.robot = RobotRuntime(scenario, rb_ep, anchor_store)

    def exchange(self) -> None:
        self.rb_ep.pump()
        self.op_ep.pump()

    def wait_ack(self, deadline_s: float) -> None:
        self.exchange()
        if not self.operator.tick_acked():
            raise RunError("robot did not acknowledge the clock tick")

    def wait_final(self, deadline_s: float) -> None:
        self.exchange()
        if self.operator.final is None:
            raise RunError("robot did not report final state")

    def close(self) -> None:
        pass


class _TcpTransport:
    def __init__(self, scenario_path: str, scenario: Scenario, anchor_store: str, bus_port: int):
        self.proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "teleop.harness.robot_proc",
                "--scenario",
                scenario_path,
                "--anchor-store",
                anchor_store,
                "--port",
                str(bus_port),
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        line = self.proc.stdout.readline().strip()
        if not line.startswith("PORT "):
            raise RunError(f"robot process failed to start: {line!r} {self.proc.stderr.read()}")
        port = int(line.split()[1])
        self.op_ep = connect_tcp("127.0.0.1", port, build_operator_registry())
        self.operator = OperatorRuntime(scenario, self.op_ep, anchor_store)

    def _pump_until(self, predicate, deadline_s: float, what: str) -> None:
        deadline = time.monotonic() + deadline_s
        while not predicate():
            if self.op_ep.pump_blocking(0.1) == 0 and time.monotonic() > deadline:
                err = self.proc.stderr.read() if self.proc.poll() is not None else ""
                raise RunError(f"timed out waiting for {what}; robot stderr: {err}")

    def exchange(self) -> None:
        self.op_ep.pump()

    def wait_ack(self, deadline_s: float) -> None:
        self._pump_until(self.operator.tick_acked, deadline_s, "tick acknowledgement")

    def wait_final(self, deadline_s: float) -> None:
        self._pump_until(lambda: self.operator.final is not None, deadline_s, "final state")

    def close(self) -> None:
        self.op_ep.close()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()


def run_scenario(
    scenario_path: str,
    transport: str = "in_process",
    seed: int = 0,
    anchor_store: str | None = None,
    bus_port: int = 0,
) -> dict:
    """Run one scripted scenario to success or its time limit; returns the report."""
    if transport not in ("in_process", "tcp"):
        raise ValueError(f"unknown transport: {transport}")
    scenario = load_scenario(scenario_path)

    own_store = anchor_store is None
    if own_store:
        fd, anchor_store = tempfile.mkstemp(prefix="anchors-", suffix=".txt")
        os.close(fd)
    try:
        if transport == "in_process":
            link: _InProcTransport | _TcpTransport = _InProcTransport(scenario, anchor_store)
        else:
            link = _TcpTransport(scenario_path, scenario, anchor_store, bus_port)
        try:
            return _drive(link, scenario, transport, seed)
        finally:
            link.close()
    finally:
        if own_store and os.path.exists(anchor_store):
            os.unlink(anchor_store)


def _drive(link, scenario: Scenario, transport: str, seed: int) -> dict:
    op = link.operator
    op.announce_anchor()

    dt = scenario.dt
    n_ticks = max(1, int(round(scenario.time_limit / dt)))
    events = list(scenario.timeline)
    next_event = 0
    success = False
    completion_time: float | None = None

    for i in range(n_ticks):
        t = i * dt
        while next_event < len(events) and events[next_event].t <= t + 1e-9:
            op.apply_event(events[next_event])
            next_event += 1
        op.tick(t)
        op.send_clock(t, dt)
        link.wait_ack(30.0)
        if _success_met(op, scenario):
            success = True
            completion_time = t
            break

    op.endpoint.publish("~end", {})
    link.wait_final(30.0)
    final = op.final

    report = {
        "report_version": REPORT_VERSION,
        "scenario": scenario.name,
        "transport": transport,
        "seed": seed,
        "dt": dt,
        "time_limit": scenario.time_limit,
        "success": success,
        "completion_time": completion_time,
        "ticks": final["ticks"],
        "path_length": final["path_length"],
        "command_count": op.command_count,
        "rejection_count": op.rejection_count + final["rejections"],
        "envelopes_sent": dict(sorted(op.endpoint.sent_counts.items())),
        "envelopes_received": dict(sorted(op.endpoint.recv_counts.items())),
        "final_body_pose": final["body_pose"],
        "final_hand_pose": final["hand_pose"],
        "gripper_open": final["gripper_open"],
        "gripper_rotation": final["gripper_rotation"],
        "colocalization_error": final["colocalization_error"],
        "trajectory_hash": _chain_hash(final["trajectory_hashes"]),
        "trajectory_hashes": final["trajectory_hashes"],
    }
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def replay(report: dict, scenario_path: str) -> dict:
    """Re-run the scenario and confirm the report reproduces.

    Returns {"ok": bool, "mismatches": [...], "first_divergent_tick": int|None}.
    A tampered or stale report shows up as field mismatches; a trajectory
    mismatch pinpoints the first divergent tick.
    """
    fresh = run_scenario(scenario_path, transport="in_process", seed=report.get("seed", 0))
    mismatches = []
    first_divergent_tick = None
    for key in sorted(set(report) | set(fresh)):
        if key in _REPLAY_IGNORED:
            continue
        a, b = report.get(key), fresh.get(key)
        if a == b:
            continue
        if key == "trajectory_hashes" and isinstance(a, list) and isinstance(b, list):
            for i, (ha, hb) in enumerate(zip(a, b)):
                if ha != hb:
                    first_divergent_tick = i
                    break
            else:
                first_divergent_tick = min(len(a), len(b))
            mismatches.append(
                {"field": key, "first_divergent_tick": first_divergent_tick}
            )
        else:
            mismatches.append({"field": key, "report": a, "rerun": b})
    return {
        "ok": not mismatches,
        "mismatches": mismatches,
        "first_divergent_tick": first_divergent_tick,
    }
