"""Classical-channel messages and their wire format.

Every message starts with a one-byte type tag. Round identifiers are unsigned
64-bit big-endian; basis, bit and op code each take one byte. Round ids are
addressing, so they are excluded from the payload-bit count used for
efficiency accounting.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

from .quantum import Basis, EncodingOp

_U64 = struct.Struct(">Q")


class MsgType(enum.IntEnum):
    BASIS_REQUEST = 1
    MEAS_RESULT = 2
    BELL_ANNOUNCE = 3
    DECOY_POSITIONS = 4
    SAMPLE_REVEAL = 5


class WireFormatError(ValueError):
    pass


@dataclass(frozen=True)
class BasisRequest:
    round: int
    basis: Basis

    kind = MsgType.BASIS_REQUEST
    payload_bits = 1

    def _body(self) -> bytes:
        return _U64.pack(self.round) + bytes([self.basis])


@dataclass(frozen=True)
class MeasResult:
    round: int
    basis: Basis
    bit: int

    kind = MsgType.MEAS_RESULT
    payload_bits = 2

    def _body(self) -> bytes:
        return _U64.pack(self.round) + bytes([self.basis, self.bit])


@dataclass(frozen=True)
class BellAnnounce:
    round: int
    op: EncodingOp

    kind = MsgType.BELL_ANNOUNCE
    payload_bits = 2

    def _body(self) -> bytes:
        return _U64.pack(self.round) + bytes([self.op])


@dataclass(frozen=True)
class SampleReveal:
    round: int
    op: EncodingOp

    kind = MsgType.SAMPLE_REVEAL
    payload_bits = 2

    def _body(self) -> bytes:
        return _U64.pack(self.round) + bytes([self.op])


@dataclass(frozen=True)
class DecoyPositions:
    round_ids: tuple[int, ...]

    kind = MsgType.DECOY_POSITIONS

    @property
    def payload_bits(self) -> int:
        # one decoy flag per disclosed position
        return len(self.round_ids)

    def _body(self) -> bytes:
        return _U64.pack(len(self.round_ids)) + b"".join(_U64.pack(r) for r in self.round_ids)


Message = BasisRequest | MeasResult | BellAnnounce | SampleReveal | DecoyPositions


def encode(msg: Message) -> bytes:
    return bytes([msg.kind]) + msg._body()


def _byte(data: bytes, pos: int, limit: int) -> int:
    value = data[pos]
    if value >= limit:
        raise WireFormatError(f"field value {value} out of range at offset {pos}")
    return value


def decode(data: bytes) -> Message:
    if not data:
        raise WireFormatError("empty message")
    try:
        kind = MsgType(data[0])
    except ValueError:
        raise WireFormatError(f"unknown message tag {data[0]}") from None
    expected = {
        MsgType.BASIS_REQUEST: 10,
        MsgType.MEAS_RESULT: 11,
        MsgType.BELL_ANNOUNCE: 10,
        MsgType.SAMPLE_REVEAL: 10,
    }
    if kind is MsgType.DECOY_POSITIONS:
        if len(data) < 9:
            raise WireFormatError("truncated decoy-position message")
        (count,) = _U64.unpack_from(data, 1)
        if len(data) != 9 + 8 * count:
            raise WireFormatError("decoy-position length mismatch")
        ids = tuple(_U64.unpack_from(data, 9 + 8 * i)[0] for i in range(count))
        return DecoyPositions(ids)
    if len(data) != expected[kind]:
        raise WireFormatError(f"{kind.name} must be {expected[kind]} bytes, got {len(data)}")
    (rnd,) = _U64.unpack_from(data, 1)
    if kind is MsgType.BASIS_REQUEST:
        return BasisRequest(rnd, Basis(_byte(data, 9, 2)))
    if kind is MsgType.MEAS_RESULT:
        return MeasResult(rnd, Basis(_byte(data, 9, 2)), _byte(data, 10, 2))
    op = EncodingOp(_byte(data, 9, 4))
    if kind is MsgType.BELL_ANNOUNCE:
        return BellAnnounce(rnd, op)
    return SampleReveal(rnd, op)


def to_dict(msg: Message) -> dict:
    out: dict = {"type": msg.kind.name}
    if isinstance(msg, DecoyPositions):
        out["round_ids"] = list(msg.round_ids)
        return out
    out["round"] = msg.round
    if isinstance(msg, (BasisRequest, MeasResult)):
        out["basis"] = msg.basis.name
    if isinstance(msg, MeasResult):
        out["bit"] = msg.bit
    if isinstance(msg, (BellAnnounce, SampleReveal)):
        out["op_code"] = int(msg.op)
    return out


@dataclass
class ClassicalChannel:
    """Authenticated broadcast channel; keeps the full message log."""

    log: list[tuple[str, Message]] = field(default_factory=list)
    payload_bits: int = 0

    def send(self, sender: str, msg: Message) -> None:
        self.log.append((sender, msg))
        self.payload_bits += msg.payload_bits
