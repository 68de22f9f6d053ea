"""Bit-exact wire framing.

One frame is:

    [u32 LE topic byte-length][topic bytes (UTF-8)]
    [u32 LE payload byte-length][payload bytes]

The framing layer is payload-agnostic; limits are enforced on both encode
and decode so a bad peer cannot make us buffer unbounded garbage. A
declared length beyond the limits is a protocol error and the connection
carrying it must be dropped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAX_TOPIC_BYTES = 255
MAX_PAYLOAD_BYTES = 1 << 20  # 1 MiB

_U32 = struct.Struct("<I")


class ProtocolError(ValueError):
    """Malformed frame; the stream is poisoned and must be dropped."""


@dataclass(frozen=True)
class Envelope:
    topic: str
    payload: bytes


def encode_frame(env: Envelope) -> bytes:
    topic_bytes = env.topic.encode("utf-8")
    if not topic_bytes:
        raise ProtocolError("empty topic")
    if len(topic_bytes) > MAX_TOPIC_BYTES:
        raise ProtocolError(f"topic too long: {len(topic_bytes)} bytes")
    if len(env.payload) > MAX_PAYLOAD_BYTES:
        raise ProtocolError(f"payload too large: {len(env.payload)} bytes")
    return b"".join(
        (_U32.pack(len(topic_bytes)), topic_bytes, _U32.pack(len(env.payload)), env.payload)
    )


def decode_frames(buffer: bytes) -> tuple[list[Envelope], bytes]:
    """Parse every complete frame in `buffer`; return them plus the unconsumed tail.

    Feeding the stream byte-at-a-time (re-passing the remainder each call)
    yields the same envelope sequence as one whole-buffer call.
    """
    envelopes: list[Envelope] = []
    pos = 0
    n = len(buffer)
    while True:
        if n - pos < 4:
            break
        (topic_len,) = _U32.unpack_from(buffer, pos)
        if topic_len == 0 or topic_len > MAX_TOPIC_BYTES:
            raise ProtocolError(f"bad topic length: {topic_len}")
        if n - pos < 4 + topic_len + 4:
            break
        topic_end = pos + 4 + topic_len
        (payload_len,) = _U32.unpack_from(buffer, topic_end)
        if payload_len > MAX_PAYLOAD_BYTES:
            raise ProtocolError(f"bad payload length: {payload_len}")
        if n - topic_end < 4 + payload_len:
            break
        try:
            topic = buffer[pos + 4 : topic_end].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"topic is not valid UTF-8: {exc}") from None
        payload = bytes(buffer[topic_end + 4 : topic_end + 4 + payload_len])
        envelopes.append(Envelope(topic, payload))
        pos = topic_end + 4 + payload_len
    return envelopes, bytes(buffer[pos:])
