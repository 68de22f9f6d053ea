"""Live mode: a human steers the simulated robot from the browser.

The simulation runs the same lockstep core as headless runs, paced by the
wall clock. The browser connects over a WebSocket that carries the exact
bus framing bytes; inbound envelopes become operator inputs (commands,
head pose, gaze ray) and outbound envelopes carry UI events, telemetry,
and scene/state snapshots the view renders from. The UI holds no
authoritative state, so a reconnect repaints the same picture.
"""

from __future__ import annotations

import asyncio
import json
import subprocess
import sys
import threading
import time
from collections import deque
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, HTMLResponse

from ..bus.endpoint import connect_tcp, encode_payload
from ..bus.framing import Envelope, ProtocolError, decode_frames, encode_frame
from ..bus.rate import RateGate
from ..modes import TOPIC_COMMAND
from ..robot import TOPIC_JOINT_STATES, TOPIC_STATUS
from .runtime import OperatorRuntime, build_operator_registry
from .scenario import Scenario, head_pose_from_fields, load_scenario

TOPIC_UI_HEAD = "/ui/head"
TOPIC_UI_GAZE = "/ui/gaze"
TOPIC_UI_STATE = "/ui/state"
TOPIC_UI_SCENE = "/ui/scene"
TOPIC_UI_EVENTS = "/ui/events"

STATE_PERIOD = 0.05  # 20 Hz snapshots


def _vec(v) -> list[float]:
    return [float(v[0]), float(v[1]), float(v[2])]


class LiveServer:
    def __init__(
        self,
        scenario_path: str,
        bus_port: int = 10000,
        ui_port: int = 8000,
        static_dir: str | None = None,
        speed: float = 1.0,
        anchor_store: str | None = None,
    ):
        self.scenario_path = scenario_path
        self.scenario: Scenario = load_scenario(scenario_path)
        self.bus_port = bus_port
        self.ui_port = ui_port
        self.static_dir = static_dir
        self.speed = speed
        self.anchor_store = anchor_store
        self._stop = threading.Event()
        self._inbox: deque[Envelope] = deque()
        self._inbox_lock = threading.Lock()
        self._clients: set[asyncio.Queue] = set()
        self._clients_lock = threading.Lock()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._state_gate = RateGate(STATE_PERIOD)
        self._last_tooltip: dict | None = None
        self._last_rejection: dict | None = None
        self.t = 0.0
        self.operator: OperatorRuntime | None = None
        self._proc: subprocess.Popen | None = None

    # -- robot link --------------------------------------------------------
    def start_robot(self) -> None:
        if self.anchor_store is None:
            import tempfile, os

            fd, self.anchor_store = tempfile.mkstemp(prefix="anchors-", suffix=".txt")
            os.close(fd)
        self._proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "teleop.harness.robot_proc",
                "--scenario",
                self.scenario_path,
                "--anchor-store",
                self.anchor_store,
                "--port",
                str(self.bus_port),
            ],
            stdout=subprocess.PIPE,
            stderr=None,
            text=True,
        )
        line = self._proc.stdout.readline().strip()
        if not line.startswith("PORT "):
            raise RuntimeError(f"robot process failed to start: {line!r}")
        port = int(line.split()[1])
        endpoint = connect_tcp("127.0.0.1", port, build_operator_registry())
        self.operator = OperatorRuntime(self.scenario, endpoint, self.anchor_store)
        endpoint.subscribe(TOPIC_JOINT_STATES, self._forward_to_ui)
        endpoint.subscribe(TOPIC_STATUS, self._forward_to_ui)
        self.operator.announce_anchor()

    def _forward_to_ui(self, topic: str, payload: dict) -> None:
        self.broadcast(Envelope(topic, encode_payload(payload)))

    # -- websocket fan-out ---------------------------------------------------
    def attach_loop(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    def register_client(self, queue: asyncio.Queue) -> None:
        with self._clients_lock:
            self._clients.add(queue)

    def unregister_client(self, queue: asyncio.Queue) -> None:
        with self._clients_lock:
            self._clients.discard(queue)

    def broadcast(self, env: Envelope) -> None:
        if self._loop is None:
            return
        data = encode_frame(env)
        with self._clients_lock:
            clients = list(self._clients)
        for queue in clients:
            self._loop.call_soon_threadsafe(queue.put_nowait, data)

    def feed_from_ui(self, data: bytes) -> None:
        try:
            frames, rest = decode_frames(data)
        except ProtocolError:
            return
        with self._inbox_lock:
            self._inbox.extend(frames)

    # -- snapshots ---------------------------------------------------------
    def scene_envelope(self) -> Envelope:
        sc = self.scenario
        payload = {
            "ground_height": sc.ground_height,
            "boxes": [
                {"min": _vec(b.lo.as_tuple()), "max": _vec(b.hi.as_tuple())} for b in sc.boxes
            ],
            "markers": [{"id": m.id, "pos": _vec(m.pos.as_tuple())} for m in sc.markers],
        }
        return Envelope(TOPIC_UI_SCENE, encode_payload(payload))

    def state_envelope(self) -> Envelope:
        op = self.operator
        ctx = op.ctx
        head = op.operator.world_head
        payload = {
            "t": self.t,
            "mode": ctx.current.value,
            "active": ctx.active,
            "help_visible": ctx.help_visible,
            "visualize": ctx.visualize,
            "selection": _vec(ctx.selection_world.as_tuple()) if ctx.selection_world else None,
            "cursor": _vec(op.operator.gaze_cursor.as_tuple()) if op.operator.gaze_cursor else None,
            "head": {
                "pos": _vec(head.pos.as_tuple()),
                "quat": [head.rot.x, head.rot.y, head.rot.z, head.rot.w],
                "roll": op.operator.head_roll,
            },
            "robot": {
                "status": op.latest_status,
                "joints": op.latest_joint,
            },
            "last_tooltip": self._last_tooltip,
            "last_rejection": self._last_rejection,
        }
        return Envelope(TOPIC_UI_STATE, encode_payload(payload))

    # -- simulation thread ---------------------------------------------------
    def _apply_ui_envelope(self, env: Envelope) -> None:
        op = self.operator
        try:
            payload = json.loads(env.payload)
        except ValueError:
            return
        if env.topic == TOPIC_COMMAND:
            op.command_count += 1
            op.handle_command_text(str(payload.get("cmd", "")))
        elif env.topic == TOPIC_UI_HEAD:
            try:
                pose, roll = head_pose_from_fields(payload, "ui.head")
            except Exception:
                return
            op.operator.world_head = pose
            op.operator.head_roll = roll
        elif env.topic == TOPIC_UI_GAZE:
            from ..geometry import Vec3
            from ..scene import Ray

            try:
                origin = Vec3(*payload["from"])
                toward = Vec3(*payload["toward"])
                op.gaze = Ray.through(origin, toward)
            except (KeyError, ValueError, TypeError):
                return

    def sim_loop(self) -> None:
        dt = self.scenario.dt
        period = dt / self.speed
        next_wall = time.monotonic()
        while not self._stop.is_set():
            with self._inbox_lock:
                pending = list(self._inbox)
                self._inbox.clear()
            for env in pending:
                self._apply_ui_envelope(env)
            op = self.operator
            op.tick(self.t)
            op.send_clock(self.t, dt)
            deadline = time.monotonic() + 5.0
            while not op.tick_acked():
                if op.endpoint.pump_blocking(0.1) == 0 and time.monotonic() > deadline:
                    self._stop.set()
                    return
            for event in op.ui_events:
                if event.get("kind") == "tooltip":
                    self._last_tooltip = {"text": event["data"].get("text", ""), "t": self.t}
                elif event.get("kind") == "rejected":
                    self._last_rejection = {**event.get("data", {}), "t": self.t}
                self.broadcast(Envelope(TOPIC_UI_EVENTS, encode_payload(event)))
            op.ui_events.clear()
            if self._state_gate.allow(self.t):
                self.broadcast(self.state_envelope())
            self.t += dt
            next_wall += period
            delay = next_wall - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_wall = time.monotonic()

    def shutdown(self) -> None:
        self._stop.set()
        if self.operator is not None:
            try:
                self.operator.endpoint.publish("~end", {})
                self.operator.endpoint.close()
            except Exception:
                pass
        if self._proc is not None:
            try:
                self._proc.wait(timeout=3)
            except subprocess.TimeoutExpired:
                self._proc.kill()


_FALLBACK_PAGE = """<!doctype html>
<html><head><title>teleop console</title></head>
<body style="font-family: monospace; background: #111; color: #ddd;">
<h2>teleop live server</h2>
<p>The operator console frontend is not built. Build it with:</p>
<pre>cd frontend && npm run build</pre>
<p>then restart with <code>teleop serve --static frontend/dist ...</code>.
The WebSocket bridge is live at <code>/ws</code>.</p>
</body></html>"""


def build_app(server: LiveServer) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        server.attach_loop(asyncio.get_running_loop())
        yield

    app = FastAPI(title="teleop live server", lifespan=lifespan)

    @app.get("/")
    async def index():
        if server.static_dir:
            index_path = Path(server.static_dir) / "index.html"
            if index_path.exists():
                return FileResponse(index_path)
        return HTMLResponse(_FALLBACK_PAGE)

    @app.get("/{name:path}")
    async def static_file(name: str):
        if server.static_dir:
            path = (Path(server.static_dir) / name).resolve()
            if path.is_file() and str(path).startswith(str(Path(server.static_dir).resolve())):
                return FileResponse(path)
        return HTMLResponse("not found", status_code=404)

    @app.websocket("/ws")
    async def ws_bridge(ws: WebSocket):
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()
        server.register_client(queue)
        try:
            await ws.send_bytes(encode_frame(server.scene_envelope()))
            await ws.send_bytes(encode_frame(server.state_envelope()))

            async def pump_out():
                while True:
                    data = await queue.get()
                    await ws.send_bytes(data)

            async def pump_in():
                while True:
                    data = await ws.receive_bytes()
                    server.feed_from_ui(data)

            out_task = asyncio.create_task(pump_out())
            in_task = asyncio.create_task(pump_in())
            done, pending = await asyncio.wait(
                {out_task, in_task}, return_when=asyncio.FIRST_COMPLETED
            )
            for task in pending:
                task.cancel()
        except WebSocketDisconnect:
            pass
        finally:
            server.unregister_client(queue)

    return app


def serve(
    scenario_path: str,
    bus_port: int = 10000,
    ui_port: int = 8000,
    static_dir: str | None = None,
    speed: float = 1.0,
    anchor_store: str | None = None,
) -> None:
    import uvicorn

    server = LiveServer(scenario_path, bus_port, ui_port, static_dir, speed, anchor_store)
    server.start_robot()
    sim_thread = threading.Thread(target=server.sim_loop, daemon=True)
    sim_thread.start()
    app = build_app(server)
    try:
        uvicorn.run(app, host="127.0.0.1", port=ui_port, log_level="warning")
    finally:
        server.shutdown()
