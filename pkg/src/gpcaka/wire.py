"""Framed byte-stream wire protocol.

Frame layout (big-endian)::

    4 bytes  magic  "GPCA"
    1 byte   version (0x01)
    1 byte   message type
    4 bytes  payload length (<= 65536)
    N bytes  payload

Payloads are sequences of 2-byte-length-prefixed byte strings in a fixed
order per message type:

    REGISTER_REQ   [dn, Ppub]
    REGISTER_RESP  [R, D, P0, domain]
    HS_INIT        [dn, domain, Ppub, R, T]
    HS_RESP        [dn, domain, Ppub, R, T]
    CONFIRM        [tag]
    ERROR          [code byte, message]

Parsing is fail-closed: field counts and sizes must match exactly and every
byte of the payload must be consumed.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from .curves import CurveParams, PointDecodeError, Scalar, decode_point, encode_point
from .keys import Identity, PartialPrivateKey, SystemParams
from .protocol import HandshakeMessage, InvalidPeerError

MAGIC = b"GPCA"
WIRE_VERSION = 1
MAX_PAYLOAD = 65536
HEADER = struct.Struct(">4sBBI")


class FrameError(ValueError):
    """Structurally malformed frame or payload."""


class MsgType(enum.IntEnum):
    REGISTER_REQ = 0x01
    REGISTER_RESP = 0x02
    HS_INIT = 0x03
    HS_RESP = 0x04
    CONFIRM = 0x05
    ERROR = 0x7F


class ErrorCode(enum.IntEnum):
    DUPLICATE_DN = 0x01
    INVALID_POINT = 0x02
    UNKNOWN_DOMAIN = 0x03
    BAD_REQUEST = 0x04
    CONFIRM_MISMATCH = 0x05


@dataclass(frozen=True, slots=True)
class WireFrame:
    msg_type: MsgType
    payload: bytes

    def __post_init__(self) -> None:
        if len(self.payload) > MAX_PAYLOAD:
            raise FrameError("payload exceeds 64 KiB limit")


def pack_frame(frame: WireFrame) -> bytes:
    return HEADER.pack(MAGIC, WIRE_VERSION, frame.msg_type, len(frame.payload)) + frame.payload


def parse_frame(data: bytes) -> WireFrame:
    if len(data) < HEADER.size:
        raise FrameError("short frame header")
    magic, version, msg_type, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FrameError("bad magic")
    if version != WIRE_VERSION:
        raise FrameError(f"unsupported wire version {version}")
    if length > MAX_PAYLOAD:
        raise FrameError("declared payload exceeds 64 KiB limit")
    payload = data[HEADER.size:]
    if len(payload) != length:
        raise FrameError("payload length mismatch")
    try:
        mt = MsgType(msg_type)
    except ValueError:
        raise FrameError(f"unknown message type {msg_type:#04x}") from None
    return WireFrame(msg_type=mt, payload=payload)


def read_frame(reader) -> WireFrame:
    """Read one frame from a file-like object; raises FrameError on EOF/garbage."""
    header = reader.read(HEADER.size)
    if len(header) != HEADER.size:
        raise FrameError("connection closed mid-header")
    magic, version, msg_type, length = HEADER.unpack(header)
    if magic != MAGIC or version != WIRE_VERSION:
        raise FrameError("bad magic or version")
    if length > MAX_PAYLOAD:
        raise FrameError("declared payload exceeds 64 KiB limit")
    payload = reader.read(length)
    if len(payload) != length:
        raise FrameError("connection closed mid-payload")
    try:
        mt = MsgType(msg_type)
    except ValueError:
        raise FrameError(f"unknown message type {msg_type:#04x}") from None
    return WireFrame(msg_type=mt, payload=payload)


def pack_fields(fields: list[bytes]) -> bytes:
    out = bytearray()
    for f in fields:
        if len(f) > 0xFFFF:
            raise FrameError("field too long for 2-byte length prefix")
        out += len(f).to_bytes(2, "big")
        out += f
    return bytes(out)


def unpack_fields(payload: bytes, expected: int) -> list[bytes]:
    fields: list[bytes] = []
    pos = 0
    while pos < len(payload):
        if pos + 2 > len(payload):
            raise FrameError("truncated field length")
        n = int.from_bytes(payload[pos:pos + 2], "big")
        pos += 2
        if pos + n > len(payload):
            raise FrameError("truncated field body")
        fields.append(payload[pos:pos + n])
        pos += n
    if len(fields) != expected:
        raise FrameError(f"expected {expected} fields, got {len(fields)}")
    return fields


def _decode_dn(raw: bytes) -> Identity:
    try:
        return Identity(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise FrameError(f"bad identity field: {exc}") from None


def _decode_ascii(raw: bytes, what: str) -> str:
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise FrameError(f"{what} is not ASCII") from None
    if not text:
        raise FrameError(f"empty {what}")
    return text


def _decode_wire_point(raw: bytes, curve: CurveParams, what: str):
    try:
        return decode_point(raw, curve)
    except PointDecodeError as exc:
        raise FrameError(f"{what}: {exc}") from None


def _decode_wire_scalar(raw: bytes, curve: CurveParams, what: str) -> Scalar:
    width = (curve.q.bit_length() + 7) // 8
    if len(raw) != width:
        raise FrameError(f"{what}: wrong scalar width")
    n = int.from_bytes(raw, "big")
    if n >= curve.q:
        raise FrameError(f"{what}: scalar out of range")
    return Scalar(n, curve.q)


def encode_register_req(id: Identity, p_pub, curve: CurveParams) -> WireFrame:
    payload = pack_fields([id.encode(), encode_point(p_pub, curve)])
    return WireFrame(MsgType.REGISTER_REQ, payload)


def decode_register_req(payload: bytes, curve: CurveParams):
    dn_raw, pub_raw = unpack_fields(payload, 2)
    return _decode_dn(dn_raw), _decode_wire_point(pub_raw, curve, "Ppub")


def encode_register_resp(ppk: PartialPrivateKey, params: SystemParams) -> WireFrame:
    curve = params.curve
    payload = pack_fields(
        [
            encode_point(ppk.r_point, curve),
            ppk.d.to_bytes(),
            encode_point(params.p0, curve),
            params.domain_id.encode("ascii"),
        ]
    )
    return WireFrame(MsgType.REGISTER_RESP, payload)


def decode_register_resp(payload: bytes, curve: CurveParams):
    r_raw, d_raw, p0_raw, dom_raw = unpack_fields(payload, 4)
    ppk = PartialPrivateKey(
        r_point=_decode_wire_point(r_raw, curve, "R"),
        d=_decode_wire_scalar(d_raw, curve, "D"),
    )
    p0 = _decode_wire_point(p0_raw, curve, "P0")
    return ppk, p0, _decode_ascii(dom_raw, "domain")


def encode_handshake(msg: HandshakeMessage, curve: CurveParams, msg_type: MsgType) -> WireFrame:
    payload = pack_fields(
        [
            msg.id.encode(),
            msg.domain_id.encode("ascii"),
            encode_point(msg.p_pub, curve),
            encode_point(msg.r_point, curve),
            encode_point(msg.t_point, curve),
        ]
    )
    return WireFrame(msg_type, payload)


def decode_handshake(payload: bytes, curve: CurveParams) -> HandshakeMessage:
    dn_raw, dom_raw, pub_raw, r_raw, t_raw = unpack_fields(payload, 5)
    try:
        return HandshakeMessage(
            id=_decode_dn(dn_raw),
            domain_id=_decode_ascii(dom_raw, "domain"),
            p_pub=_decode_wire_point(pub_raw, curve, "Ppub"),
            r_point=_decode_wire_point(r_raw, curve, "R"),
            t_point=_decode_wire_point(t_raw, curve, "T"),
        )
    except InvalidPeerError as exc:
        raise FrameError(str(exc)) from None


def encode_confirm(tag: bytes) -> WireFrame:
    return WireFrame(MsgType.CONFIRM, pack_fields([tag]))


def decode_confirm(payload: bytes) -> bytes:
    (tag,) = unpack_fields(payload, 1)
    if len(tag) != 32:
        raise FrameError("confirm tag must be 32 bytes")
    return tag


def encode_error(code: ErrorCode, message: str) -> WireFrame:
    return WireFrame(MsgType.ERROR, pack_fields([bytes([code]), message.encode()]))


def decode_error(payload: bytes) -> tuple[ErrorCode, str]:
    code_raw, msg_raw = unpack_fields(payload, 2)
    if len(code_raw) != 1:
        raise FrameError("error code must be one byte")
    try:
        code = ErrorCode(code_raw[0])
    except ValueError:
        raise FrameError(f"unknown error code {code_raw[0]:#04x}") from None
    return code, msg_raw.decode("utf-8", errors="replace")
