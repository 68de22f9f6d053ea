"""Standalone robot process for TCP runs.

Binds the bus port, prints the bound port for the parent to read, accepts
one bridge connection, and serves until the end-of-run handshake.
"""

from __future__ import annotations

import argparse

from ..bus.endpoint import TcpListener
from .runtime import RobotRuntime, build_robot_registry
from .scenario import load_scenario


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="teleop-robot")
    parser.add_argument("--scenario", required=True)
    parser.add_argument("--anchor-store", required=True)
    parser.add_argument("--port", type=int, default=0)
    args = parser.parse_args(argv)

    scenario = load_scenario(args.scenario)
    listener = TcpListener(args.port)
    print(f"PORT {listener.port}", flush=True)
    endpoint = listener.accept(build_robot_registry(), timeout=30.0)
    runtime = RobotRuntime(scenario, endpoint, args.anchor_store)
    while not runtime.done and not endpoint.closed:
        endpoint.pump_blocking(0.2)
    endpoint.close()
    listener.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
