"""Bus endpoints: pub/sub topics plus request/response services on one stream.

Two endpoint flavors share the same surface: an in-process pair wired
inbox-to-inbox for deterministic single-threaded runs, and a TCP endpoint
with a reader thread for real sockets. Payloads are canonical JSON objects;
the framing layer underneath is payload-agnostic.

Services are multiplexed over the same stream using the reserved topic
prefix "~svc/" and correlated by a monotonically increasing "sid" carried
in the payload. Inbound envelopes are queued and drained by the consumer
at tick boundaries via pump(); handlers must not block.
"""

from __future__ import annotations

import itertools
import json
import queue
import socket
import threading
import time
from collections import deque
from typing import Callable

from .framing import Envelope, ProtocolError, decode_frames, encode_frame

SERVICE_PREFIX = "~svc/"

Payload = dict
TopicHandler = Callable[[str, Payload], None]
ServiceHandler = Callable[[Payload], Payload]


class BusError(RuntimeError):
    pass


class UnregisteredTopic(BusError):
    pass


class ServiceError(BusError):
    pass


class ServiceTimeout(ServiceError):
    pass


class ConnectionClosed(BusError):
    pass


class TopicRegistry:
    """Startup-time declaration of which topics flow in which direction."""

    def __init__(self):
        self._topics: dict[tuple[str, str], str] = {}
        self._frozen = False

    def register(self, topic: str, direction: str, schema: str = "json") -> None:
        if self._frozen:
            raise BusError("topic registry is frozen; registration happens at startup")
        if direction not in ("in", "out"):
            raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")
        if not topic:
            raise ValueError("empty topic name")
        key = (topic, direction)
        if key in self._topics:
            raise BusError(f"topic already registered: {topic} ({direction})")
        self._topics[key] = schema

    def freeze(self) -> None:
        self._frozen = True

    def can_publish(self, topic: str) -> bool:
        return (topic, "out") in self._topics

    def can_receive(self, topic: str) -> bool:
        return (topic, "in") in self._topics

    def schema(self, topic: str, direction: str) -> str | None:
        return self._topics.get((topic, direction))


def encode_payload(payload: Payload) -> bytes:
    return json.dumps(payload, separators=(",", ":"), sort_keys=True).encode("utf-8")


def decode_payload(raw: bytes) -> Payload:
    obj = json.loads(raw.decode("utf-8"))
    if not isinstance(obj, dict):
        raise ProtocolError("payload is not a JSON object")
    return obj


class BusEndpoint:
    """Common pub/sub + service logic; subclasses supply the transport."""

    def __init__(self, registry: TopicRegistry):
        self.registry = registry
        self._handlers: dict[str, list[TopicHandler]] = {}
        self._services: dict[str, ServiceHandler] = {}
        self._sid = itertools.count(1)
        self._sid_lock = threading.Lock()
        self.sent_counts: dict[str, int] = {}
        self.recv_counts: dict[str, int] = {}

    # -- transport hooks -------------------------------------------------
    def _send_envelope(self, env: Envelope) -> None:
        raise NotImplementedError

    def pump(self) -> int:
        """Dispatch all queued inbound envelopes; returns how many ran."""
        raise NotImplementedError

    def close(self) -> None:
        pass

    # -- topics ----------------------------------------------------------
    def subscribe(self, topic: str, handler: TopicHandler) -> None:
        if not self.registry.can_receive(topic):
            raise UnregisteredTopic(f"subscribe to unregistered topic: {topic}")
        self._handlers.setdefault(topic, []).append(handler)

    def publish(self, topic: str, payload: Payload) -> None:
        if not self.registry.can_publish(topic):
            raise UnregisteredTopic(f"publish to unregistered topic: {topic}")
        self._emit(Envelope(topic, encode_payload(payload)))

    def publish_envelope(self, env: Envelope) -> None:
        """Send a pre-encoded envelope; same registration rules as publish."""
        if not self.registry.can_publish(env.topic):
            raise UnregisteredTopic(f"publish to unregistered topic: {env.topic}")
        self._emit(env)

    def _emit(self, env: Envelope) -> None:
        self.sent_counts[env.topic] = self.sent_counts.get(env.topic, 0) + 1
        self._send_envelope(env)

    # -- services ----------------------------------------------------------
    def register_service(self, name: str, handler: ServiceHandler) -> None:
        self._services[name] = handler

    def next_sid(self) -> int:
        with self._sid_lock:
            return next(self._sid)

    def call_service(self, name: str, request: Payload, timeout: float = 2.0) -> Payload:
        raise NotImplementedError

    def _service_request_env(self, name: str, sid: int, request: Payload) -> Envelope:
        body = {"sid": sid, "op": "request", "body": request}
        return Envelope(SERVICE_PREFIX + name, encode_payload(body))

    def _handle_service_request(self, name: str, msg: Payload) -> None:
        sid = msg.get("sid")
        handler = self._services.get(name)
        if handler is None:
            reply: Payload = {"sid": sid, "op": "error", "error": f"unknown service: {name}"}
        else:
            try:
                reply = {"sid": sid, "op": "response", "body": handler(msg.get("body", {}))}
            except Exception as exc:  # surfaced to the caller as a peer error
                reply = {"sid": sid, "op": "error", "error": str(exc)}
        self._emit(Envelope(SERVICE_PREFIX + name, encode_payload(reply)))

    # -- dispatch ----------------------------------------------------------
    def _dispatch(self, env: Envelope) -> None:
        self.recv_counts[env.topic] = self.recv_counts.get(env.topic, 0) + 1
        if env.topic.startswith(SERVICE_PREFIX):
            name = env.topic[len(SERVICE_PREFIX):]
            msg = decode_payload(env.payload)
            if msg.get("op") == "request":
                self._handle_service_request(name, msg)
            else:
                self._resolve_reply(msg)
            return
        handlers = self._handlers.get(env.topic)
        if not handlers:
            return
        payload = decode_payload(env.payload)
        for handler in handlers:
            handler(env.topic, payload)

    def _resolve_reply(self, msg: Payload) -> None:
        raise NotImplementedError


def _unwrap_reply(msg: Payload) -> Payload:
    if msg.get("op") == "response":
        body = msg.get("body", {})
        return body if isinstance(body, dict) else {}
    raise ServiceError(str(msg.get("error", "service call failed")))


class InProcEndpoint(BusEndpoint):
    """Deterministic in-process endpoint; envelopes still round-trip the framing."""

    def __init__(self, registry: TopicRegistry):
        super().__init__(registry)
        self.peer: InProcEndpoint | None = None
        self._inbox: deque[Envelope] = deque()

    def _send_envelope(self, env: Envelope) -> None:
        if self.peer is None:
            raise ConnectionClosed("in-process peer not attached")
        # Round-trip the wire encoding so limits and byte fidelity hold
        # exactly as they would on a socket.
        frames, rest = decode_frames(encode_frame(env))
        assert not rest
        self.peer._inbox.extend(frames)

    def pump(self) -> int:
        n = 0
        while self._inbox:
            self._dispatch(self._inbox.popleft())
            n += 1
        return n

    def call_service(self, name: str, request: Payload, timeout: float = 2.0) -> Payload:
        if self.peer is None:
            raise ConnectionClosed("in-process peer not attached")
        sid = self.next_sid()
        self._emit(self._service_request_env(name, sid, request))
        # The peer drains its queue (FIFO, so everything sent before the
        # request is handled first), which lands the reply in our inbox.
        self.peer.pump()
        for env in list(self._inbox):
            if env.topic == SERVICE_PREFIX + name:
                msg = decode_payload(env.payload)
                if msg.get("op") in ("response", "error") and msg.get("sid") == sid:
                    self._inbox.remove(env)
                    self.recv_counts[env.topic] = self.recv_counts.get(env.topic, 0) + 1
                    return _unwrap_reply(msg)
        raise ServiceTimeout(f"no reply from in-process peer for {name}")

    def _resolve_reply(self, msg: Payload) -> None:
        # Replies are consumed inside call_service; anything left over is a
        # stale correlation and is dropped.
        pass


def inproc_pair(
    registry_a: TopicRegistry, registry_b: TopicRegistry
) -> tuple[InProcEndpoint, InProcEndpoint]:
    a, b = InProcEndpoint(registry_a), InProcEndpoint(registry_b)
    a.peer, b.peer = b, a
    return a, b


class _Pending:
    __slots__ = ("event", "result")

    def __init__(self):
        self.event = threading.Event()
        self.result: Payload | None = None


class TcpEndpoint(BusEndpoint):
    """Endpoint over a connected stream socket with a background reader."""

    def __init__(self, sock: socket.socket, registry: TopicRegistry):
        super().__init__(registry)
        self._sock = sock
        self._send_lock = threading.Lock()
        self._rx: queue.SimpleQueue[Envelope] = queue.SimpleQueue()
        self._pending: dict[int, _Pending] = {}
        self._pending_lock = threading.Lock()
        self._closed = threading.Event()
        self.error: Exception | None = None
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        buf = b""
        try:
            while not self._closed.is_set():
                chunk = self._sock.recv(65536)
                if not chunk:
                    break
                buf += chunk
                frames, buf = decode_frames(buf)
                for env in frames:
                    self._route(env)
        except (ProtocolError, OSError) as exc:
            self.error = exc
        finally:
            self._teardown()

    def _route(self, env: Envelope) -> None:
        if env.topic.startswith(SERVICE_PREFIX):
            try:
                msg = decode_payload(env.payload)
            except (ProtocolError, ValueError):
                msg = None
            if msg is not None and msg.get("op") in ("response", "error"):
                with self._pending_lock:
                    pending = self._pending.pop(int(msg.get("sid", -1)), None)
                if pending is not None:
                    self.recv_counts[env.topic] = self.recv_counts.get(env.topic, 0) + 1
                    pending.result = msg
                    pending.event.set()
                return
        self._rx.put(env)

    def _teardown(self) -> None:
        self._closed.set()
        try:
            self._sock.close()
        except OSError:
            pass
        with self._pending_lock:
            pending = list(self._pending.values())
            self._pending.clear()
        for p in pending:
            p.event.set()

    def _send_envelope(self, env: Envelope) -> None:
        if self._closed.is_set():
            raise ConnectionClosed(f"connection closed: {self.error}")
        data = encode_frame(env)
        try:
            with self._send_lock:
                self._sock.sendall(data)
        except OSError as exc:
            self.error = self.error or exc
            self._teardown()
            raise ConnectionClosed(str(exc)) from exc

    def pump(self) -> int:
        n = 0
        while True:
            try:
                env = self._rx.get_nowait()
            except queue.Empty:
                return n
            self._dispatch(env)
            n += 1

    def pump_blocking(self, timeout: float) -> int:
        """Wait up to `timeout` for at least one envelope, then drain."""
        try:
            env = self._rx.get(timeout=timeout)
        except queue.Empty:
            return 0
        self._dispatch(env)
        return 1 + self.pump()

    def call_service(self, name: str, request: Payload, timeout: float = 2.0) -> Payload:
        sid = self.next_sid()
        pending = _Pending()
        with self._pending_lock:
            self._pending[sid] = pending
        try:
            self._emit(self._service_request_env(name, sid, request))
            if not pending.event.wait(timeout):
                raise ServiceTimeout(f"service {name} timed out after {timeout}s")
            if pending.result is None:
                raise ConnectionClosed(f"connection closed during call: {self.error}")
            return _unwrap_reply(pending.result)
        finally:
            with self._pending_lock:
                self._pending.pop(sid, None)

    def _resolve_reply(self, msg: Payload) -> None:
        # Replies are resolved in the reader thread; reaching here means the
        # correlation was already dropped.
        pass

    @property
    def closed(self) -> bool:
        return self._closed.is_set()

    def close(self) -> None:
        self._teardown()


class TcpListener:
    """Accepts one bridge connection at a time, allowing reconnects."""

    def __init__(self, port: int, host: str = "127.0.0.1"):
        self._srv = socket.create_server((host, port))
        self._srv.settimeout(0.2)
        self.port = self._srv.getsockname()[1]

    def accept(self, registry: TopicRegistry, timeout: float = 10.0) -> TcpEndpoint:
        deadline = time.monotonic() + timeout
        while True:
            try:
                sock, _ = self._srv.accept()
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                return TcpEndpoint(sock, registry)
            except socket.timeout:
                if time.monotonic() > deadline:
                    raise ConnectionClosed("accept timed out") from None

    def close(self) -> None:
        self._srv.close()


def connect_tcp(
    host: str, port: int, registry: TopicRegistry, timeout: float = 10.0
) -> TcpEndpoint:
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=1.0)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            sock.settimeout(None)
            return TcpEndpoint(sock, registry)
        except OSError:
            if time.monotonic() > deadline:
                raise ConnectionClosed(f"could not connect to {host}:{port}") from None
            time.sleep(0.05)
