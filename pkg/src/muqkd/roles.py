"""Decision points of the server (Alice), sender (Bob) and receiver (Carol).

Each function advances one round: it consumes the pair as it arrives, fills
in the role's part of the :class:`RoundRecord`, posts any classical messages,
and returns the pair to forward (``None`` when the particle stops there).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields

from numpy.random import Generator

from .messages import BasisRequest, BellAnnounce, ClassicalChannel, MeasResult
from .network import ConfigError
from .quantum import (
    BELL_TO_OP,
    Basis,
    BellLabel,
    EncodingOp,
    Qubit,
    TwoQubitState,
    apply_encoding,
    bell_measure,
    bell_state,
    compose_encodings,
    measure_qubit,
    measure_slot,
    prepare_decoy,
)

ALICE, BOB, CAROL = "alice", "bob", "carol"


class ProtocolError(RuntimeError):
    """A role operation was invoked outside its contract."""


class Mode(enum.Enum):
    CONTROL = "control"
    CODING = "coding"
    DECOY = "decoy"


@dataclass(frozen=True)
class ModeProbabilities:
    p_control_bob: float = 0.1
    p_decoy_bob: float = 0.1
    p_control_carol: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{f.name} must lie in [0, 1], got {v}")
        if self.p_control_bob + self.p_decoy_bob > 1.0:
            raise ConfigError("p_control_bob + p_decoy_bob exceeds 1")

    @classmethod
    def uniform(cls, p: float) -> "ModeProbabilities":
        return cls(p, p, p)


Measurement = tuple[Basis, int]


@dataclass
class RoundRecord:
    round_id: int
    bob_mode: Mode | None = None
    carol_mode: Mode | None = None
    bob_op: EncodingOp | None = None
    carol_op: EncodingOp | None = None
    decoy: Measurement | None = None
    bob_measurement: Measurement | None = None
    carol_measurement: Measurement | None = None
    alice_measurement: Measurement | None = None
    alice_announcement: EncodingOp | None = None
    lost: bool = False

    @property
    def is_decoy(self) -> bool:
        return self.bob_mode is Mode.DECOY

    @property
    def double_coding(self) -> bool:
        return self.bob_mode is Mode.CODING and self.carol_mode is Mode.CODING and not self.lost

    def to_dict(self) -> dict:
        def meas(m):
            return None if m is None else [m[0].name, m[1]]

        def op(o):
            return None if o is None else int(o)

        def mode(m):
            return None if m is None else m.value

        return {
            "round_id": self.round_id,
            "bob_mode": mode(self.bob_mode),
            "carol_mode": mode(self.carol_mode),
            "bob_op": op(self.bob_op),
            "carol_op": op(self.carol_op),
            "decoy": meas(self.decoy),
            "bob_measurement": meas(self.bob_measurement),
            "carol_measurement": meas(self.carol_measurement),
            "alice_measurement": meas(self.alice_measurement),
            "alice_announcement": op(self.alice_announcement),
            "lost": self.lost,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundRecord":
        def meas(m):
            return None if m is None else (Basis[m[0]], int(m[1]))

        def op(o):
            return None if o is None else EncodingOp(o)

        def mode(m):
            return None if m is None else Mode(m)

        return cls(
            round_id=d["round_id"],
            bob_mode=mode(d["bob_mode"]),
            carol_mode=mode(d["carol_mode"]),
            bob_op=op(d["bob_op"]),
            carol_op=op(d["carol_op"]),
            decoy=meas(d["decoy"]),
            bob_measurement=meas(d["bob_measurement"]),
            carol_measurement=meas(d["carol_measurement"]),
            alice_measurement=meas(d["alice_measurement"]),
            alice_announcement=op(d["alice_announcement"]),
            lost=d["lost"],
        )


def _basis(rng: Generator) -> Basis:
    return Basis.X if rng.random() < 0.5 else Basis.Z


def _op(rng: Generator) -> EncodingOp:
    return EncodingOp(int(rng.random() * 4))


def alice_prepare() -> TwoQubitState:
    """Fresh |phi+> pair; the second slot is particle B, sent to Bob."""
    return TwoQubitState(bell_state(BellLabel.PHI_PLUS).amplitudes)


def alice_measure(
    record: RoundRecord, partner: Qubit, basis: Basis, rng: Generator, channel: ClassicalChannel
) -> int:
    """Alice measures A on request and publishes the result."""
    bit, _ = measure_qubit(partner, basis, rng)
    record.alice_measurement = (basis, bit)
    channel.send(ALICE, MeasResult(record.round_id, basis, bit))
    return bit


def _control(
    who: str, record: RoundRecord, state: TwoQubitState, rng: Generator, channel: ClassicalChannel
) -> Measurement:
    basis = _basis(rng)
    bit, partner = measure_slot(state, basis, rng)
    channel.send(who, BasisRequest(record.round_id, basis))
    alice_measure(record, partner, basis, rng, channel)
    return basis, bit


def bob_decide(
    record: RoundRecord,
    state: TwoQubitState,
    rng: Generator,
    probs: ModeProbabilities,
    channel: ClassicalChannel,
) -> TwoQubitState | None:
    if record.lost:
        raise ProtocolError("Bob cannot act on a lost particle")
    u = rng.random()
    if u < probs.p_control_bob:
        record.bob_mode = Mode.CONTROL
        record.bob_measurement = _control(BOB, record, state, rng, channel)
        return None
    if u < probs.p_control_bob + probs.p_decoy_bob:
        record.bob_mode = Mode.DECOY
        basis = _basis(rng)
        value = 1 if rng.random() < 0.5 else 0
        record.decoy = (basis, value)
        # B is kept and measured in the decoy's basis; d travels instead.
        bit, a_side = measure_slot(state, basis, rng)
        record.bob_measurement = (basis, bit)
        return TwoQubitState.product(a_side, prepare_decoy(basis, value))
    record.bob_mode = Mode.CODING
    record.bob_op = _op(rng)
    return apply_encoding(state, record.bob_op)


def carol_decide(
    record: RoundRecord,
    state: TwoQubitState,
    rng: Generator,
    probs: ModeProbabilities,
    channel: ClassicalChannel,
) -> TwoQubitState | None:
    if record.lost:
        raise ProtocolError("Carol cannot act on a lost particle")
    if rng.random() < probs.p_control_carol:
        record.carol_mode = Mode.CONTROL
        record.carol_measurement = _control(CAROL, record, state, rng, channel)
        return None
    record.carol_mode = Mode.CODING
    record.carol_op = _op(rng)
    return apply_encoding(state, record.carol_op)


def alice_announce(
    record: RoundRecord, state: TwoQubitState, rng: Generator, channel: ClassicalChannel
) -> EncodingOp:
    """Bell-measure the returned pair and broadcast the combined operation."""
    op = BELL_TO_OP[bell_measure(state, rng)]
    record.alice_announcement = op
    channel.send(ALICE, BellAnnounce(record.round_id, op))
    return op


def decode(announced: EncodingOp, own: EncodingOp) -> int:
    """Bob's 2-bit code from Alice's announcement and Carol's own operation."""
    return int(compose_encodings(announced, own))


def carol_decode(record: RoundRecord, decoy_positions: frozenset[int]) -> int:
    if record.round_id in decoy_positions:
        raise ProtocolError(f"round {record.round_id} is a disclosed decoy position")
    if record.carol_mode is not Mode.CODING or record.alice_announcement is None:
        raise ProtocolError(f"round {record.round_id} is not a coding round")
    return decode(record.alice_announcement, record.carol_op)
