"""Topic/service message bus over length-prefixed stream framing."""

from .framing import (
    MAX_PAYLOAD_BYTES,
    MAX_TOPIC_BYTES,
    Envelope,
    ProtocolError,
    decode_frames,
    encode_frame,
)
from .rate import RateGate
from .endpoint import (
    BusEndpoint,
    BusError,
    InProcEndpoint,
    ServiceError,
    ServiceTimeout,
    TcpEndpoint,
    TcpListener,
    TopicRegistry,
    UnregisteredTopic,
    connect_tcp,
    inproc_pair,
)

__all__ = [
    "MAX_PAYLOAD_BYTES",
    "MAX_TOPIC_BYTES",
    "Envelope",
    "ProtocolError",
    "decode_frames",
    "encode_frame",
    "RateGate",
    "BusEndpoint",
    "BusError",
    "InProcEndpoint",
    "ServiceError",
    "ServiceTimeout",
    "TcpEndpoint",
    "TcpListener",
    "TopicRegistry",
    "UnregisteredTopic",
    "connect_tcp",
    "inproc_pair",
]
