import json
import time
from importlib import resources
from pathlib import Path

import pytest

from teleop.bus.endpoint import inproc_pair
from teleop.frames import AnchorRegistry
from teleop.geometry import Convention, Quat, Transform, Vec3
from teleop.harness.runner import replay, report_to_json, run_scenario
from teleop.harness.runtime import (
    OperatorRuntime,
    RobotRuntime,
    build_operator_registry,
    build_robot_registry,
)
from teleop.harness.scenario import ScenarioError, load_scenario, parse_scenario

ROS = Convention.ROS_RH_ZUP


def bundled(name: str) -> str:
    return str(resources.files("teleop") / "scenarios" / f"{name}.yaml")


MINIMAL = {
    "version": 1,
    "time_limit": 1.0,
    "success": {"kind": "body_within", "pos": [50.0, 0.0, 0.0], "eps": 0.1},
}


class TestScenarioParsing:
    def test_bundled_scenarios_parse(self):
        for name in ("walk_to_target", "touch_bottle"):
            sc = load_scenario(bundled(name))
            assert sc.time_limit > 0
            assert sc.timeline

    def test_missing_required_field(self):
        with pytest.raises(ScenarioError, match="time_limit"):
            parse_scenario({"version": 1, "success": MINIMAL["success"]})

    def test_bad_version(self):
        with pytest.raises(ScenarioError, match="version"):
            parse_scenario({**MINIMAL, "version": 2})

    def test_unsorted_timeline(self):
        doc = {
            **MINIMAL,
            "timeline": [{"t": 2.0, "command": "sit"}, {"t": 1.0, "command": "stand"}],
        }
        with pytest.raises(ScenarioError, match="sorted"):
            parse_scenario(doc)

    def test_unknown_success_kind(self):
        with pytest.raises(ScenarioError, match="kind"):
            parse_scenario({**MINIMAL, "success": {"kind": "blast_off", "pos": [0, 0, 0], "eps": 1}})

    def test_yaml_error_carries_path(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("version: [unclosed\n")
        with pytest.raises(ScenarioError, match="broken.yaml"):
            load_scenario(str(path))

    def test_event_requires_exactly_one_kind(self):
        doc = {**MINIMAL, "timeline": [{"t": 0.0, "command": "sit", "gaze": {}}]}
        with pytest.raises(ScenarioError, match="exactly one"):
            parse_scenario(doc)


class TestHeadlessRuns:
    def test_empty_timeline_fails_at_time_limit(self, tmp_path):
        import yaml

        path = tmp_path / "empty.yaml"
        path.write_text(yaml.safe_dump(MINIMAL))
        report = run_scenario(str(path))
        assert report["success"] is False
        assert report["completion_time"] is None
        assert report["ticks"] == 50  # 1.0 s at dt 0.02

    def test_walk_to_target_succeeds(self):
        report = run_scenario(bundled("walk_to_target"))
        assert report["success"] is True
        assert 0 < report["completion_time"] <= report["time_limit"]
        assert report["path_length"] > 5.0
        assert report["rejection_count"] == 0
        assert report["colocalization_error"] is None

    def test_touch_bottle_succeeds_with_gripper_open(self):
        report = run_scenario(bundled("touch_bottle"))
        assert report["success"] is True
        assert report["gripper_open"] == 1.57

    def test_reports_byte_identical(self):
        a = report_to_json(run_scenario(bundled("touch_bottle")))
        b = report_to_json(run_scenario(bundled("touch_bottle")))
        assert a == b

    @pytest.mark.parametrize("name", ["walk_to_target", "touch_bottle"])
    def test_matches_checked_in_golden_report(self, name):
        golden = (Path(__file__).parent / "golden" / f"{name}.json").read_text()
        fresh = report_to_json(run_scenario(bundled(name), transport="in_process", seed=0))
        assert fresh == golden

    def test_replay_validates_fresh_report(self):
        report = run_scenario(bundled("touch_bottle"))
        outcome = replay(report, bundled("touch_bottle"))
        assert outcome["ok"], outcome

    def test_replay_detects_tampering(self):
        report = run_scenario(bundled("touch_bottle"))
        report["completion_time"] = 0.123
        outcome = replay(report, bundled("touch_bottle"))
        assert not outcome["ok"]
        assert any(m["field"] == "completion_time" for m in outcome["mismatches"])

    def test_replay_pinpoints_divergent_tick(self):
        report = run_scenario(bundled("touch_bottle"))
        report["trajectory_hashes"][7] = "0" * 16
        outcome = replay(report, bundled("touch_bottle"))
        assert not outcome["ok"]
        assert outcome["first_divergent_tick"] == 7


class TestTransports:
    def test_tcp_matches_in_process_within_tolerance(self):
        a = run_scenario(bundled("walk_to_target"), transport="in_process")
        b = run_scenario(bundled("walk_to_target"), transport="tcp")
        pa, pb = a["final_body_pose"]["pos"], b["final_body_pose"]["pos"]
        assert max(abs(x - y) for x, y in zip(pa, pb)) < 1e-9
        assert a["trajectory_hashes"] == b["trajectory_hashes"]

    def test_wall_clock_budget(self):
        for name in ("walk_to_target", "touch_bottle"):
            t0 = time.monotonic()
            report = run_scenario(bundled(name))
            assert report["success"]
            assert time.monotonic() - t0 < 10.0


class TestBusWiring:
    @pytest.fixture
    def linked(self, tmp_path):
        scenario = load_scenario(bundled("walk_to_target"))
        store = str(tmp_path / "anchors.txt")
        op_ep, rb_ep = inproc_pair(build_operator_registry(), build_robot_registry())
        op = OperatorRuntime(scenario, op_ep, store)
        rb = RobotRuntime(scenario, rb_ep, store)
        op.announce_anchor()
        rb_ep.pump()
        for cmd in ("claim", "power on", "stand"):
            op.handle_command_text(cmd)
        rb_ep.pump()
        return op, rb, op_ep, rb_ep

    def test_come_here_sets_standoff_goal(self, linked):
        op, rb, op_ep, rb_ep = linked
        # Head sits 2 m behind the operator-world origin; the robot walks
        # toward its robot-world image and stops 0.5 m short.
        op.handle_command_text("come here")
        rb_ep.pump()
        assert rb.sim.state.goal_pos is not None
        head_wire = Vec3(-2.0, 0.0, 0.0)  # unity (0, 1.6, -2) ground-projected
        goal = rb.sim.state.goal_pos
        standoff = ((goal.x - head_wire.x) ** 2 + (goal.y - head_wire.y) ** 2) ** 0.5
        assert abs(standoff - 0.5) < 1e-9

    def test_gripper_pos_service_defaults_to_legacy_duration(self, linked):
        op, rb, op_ep, rb_ep = linked
        reply = op_ep.call_service(
            "/spot/gripper_pos",
            {"pos": [0.8, 0.0, 0.4], "quat": [0.0, 0.0, 0.0, 1.0]},
        )
        assert reply["ok"] is True
        assert rb.sim.state.arm_goal.duration == 5.0

    def test_gripper_pos_service_honors_duration(self, linked):
        op, rb, op_ep, rb_ep = linked
        reply = op_ep.call_service(
            "/spot/gripper_pos",
            {"pos": [0.8, 0.0, 0.4], "quat": [0.0, 0.0, 0.0, 1.0], "duration": 0.5},
        )
        assert reply["ok"] is True
        assert rb.sim.state.arm_goal.duration == 0.5

    def test_rejected_robot_command_counted(self, linked):
        op, rb, op_ep, rb_ep = linked
        op.handle_command_text("power off")
        op.handle_command_text("spin left")  # needs standing; power now off
        rb_ep.pump()
        assert rb.rejections == 1


class TestCoLocalization:
    def test_anchor_store_flows_operator_to_robot(self, tmp_path):
        store = str(tmp_path / "anchors.txt")
        report = run_scenario(bundled("walk_to_target"), anchor_store=store)
        assert report["success"]
        reg = AnchorRegistry()
        reg.load(store)
        assert len(reg) == 1

    def test_missing_anchor_store_surfaces_error(self, tmp_path):
        scenario = load_scenario(bundled("walk_to_target"))
        op_ep, rb_ep = inproc_pair(build_operator_registry(), build_robot_registry())
        store = str(tmp_path / "anchors.txt")
        op = OperatorRuntime(scenario, op_ep, store)
        rb = RobotRuntime(scenario, rb_ep, str(tmp_path / "missing.txt"))
        op.announce_anchor()
        rb_ep.pump()
        assert rb.colocalization_error is not None

    def test_perturbation_shifts_robot_belief(self, tmp_path):
        scenario = load_scenario(bundled("walk_to_target"))
        store = str(tmp_path / "anchors.txt")
        op_ep, rb_ep = inproc_pair(build_operator_registry(), build_robot_registry())
        op = OperatorRuntime(scenario, op_ep, store)
        shift = Transform(Vec3(0.25, 0.0, 0.0), Quat.identity(), ROS)
        rb = RobotRuntime(scenario, rb_ep, store, perturbation=shift)
        op.announce_anchor()
        rb_ep.pump()
        believed = rb._anchor_world()
        assert believed is not None
        true_pose = op.anchor.world_pose
        assert abs(believed.pos.x - (true_pose.pos.x + 0.25)) < 1e-12
