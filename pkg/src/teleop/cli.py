"""Command-line entry point: run scenarios, validate replays, serve live."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .harness.runner import replay, report_to_json, run_scenario


def resolve_scenario(name_or_path: str) -> str:
    """Accept a path or the bare name of a bundled scenario."""
    if Path(name_or_path).exists():
        return name_or_path
    bundled = resources.files("teleop") / "scenarios" / f"{name_or_path}.yaml"
    if bundled.is_file():
        return str(bundled)
    raise SystemExit(f"scenario not found: {name_or_path}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="teleop")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario headlessly and emit a report")
    run_p.add_argument("scenario", help="scenario file or bundled name (walk_to_target, touch_bottle)")
    run_p.add_argument("--transport", choices=("in_process", "tcp"), default="in_process")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", help="write the JSON report here instead of stdout")
    run_p.add_argument("--bus-port", type=int, default=0, help="TCP bus port (0 = ephemeral)")
    run_p.add_argument("--anchor-store", help="anchor store file (default: per-run temp file)")

    replay_p = sub.add_parser("replay", help="re-run a scenario and validate a report against it")
    replay_p.add_argument("report")
    replay_p.add_argument("scenario")

    serve_p = sub.add_parser("serve", help="live mode: robot over TCP, browser console over WebSocket")
    serve_p.add_argument("--scenario", required=True)
    serve_p.add_argument("--bus-port", type=int, default=10000)
    serve_p.add_argument("--ui-port", type=int, default=8000)
    serve_p.add_argument("--static", default=None, help="directory with built frontend assets")
    serve_p.add_argument("--speed", type=float, default=1.0, help="simulated seconds per wall second")
    serve_p.add_argument("--anchor-store", default=None)

    args = parser.parse_args(argv)

    if args.command == "run":
        report = run_scenario(
            resolve_scenario(args.scenario),
            transport=args.transport,
            seed=args.seed,
            anchor_store=args.anchor_store,
            bus_port=args.bus_port,
        )
        text = report_to_json(report)
        if args.out:
            Path(args.out).write_text(text)
            print(f"report written to {args.out} (success={report['success']})")
        else:
            sys.stdout.write(text)
        return 0 if report["success"] else 1

    if args.command == "replay":
        report = json.loads(Path(args.report).read_text())
        outcome = replay(report, resolve_scenario(args.scenario))
        if outcome["ok"]:
            print("replay OK: report reproduces exactly")
            return 0
        print("replay MISMATCH:")
        for item in outcome["mismatches"]:
            print(f"  {json.dumps(item)}")
        return 1

    if args.command == "serve":
        static = args.static
        if static is None:
            default_dist = Path("frontend") / "dist"
            if default_dist.is_dir():
                static = str(default_dist)
        from .harness.serve import serve as run_serve

        print(f"bus on 127.0.0.1:{args.bus_port}, console on http://127.0.0.1:{args.ui_port}/")
        run_serve(
            resolve_scenario(args.scenario),
            bus_port=args.bus_port,
            ui_port=args.ui_port,
            static_dir=static,
            speed=args.speed,
            anchor_store=args.anchor_store,
        )
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
