"""Attack strategies: external intercept-resend and a malicious server."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from numpy.random import Generator

from .network import ConfigError, Segment
from .quantum import (
    BELL_TO_OP,
    Basis,
    BellLabel,
    EncodingOp,
    TwoQubitState,
    bell_measure,
    bell_state,
    measure_slot,
    prepare_decoy,
)


class AdversaryKind(enum.Enum):
    NONE = "none"
    EXTERNAL_EVE = "external_eve"
    MALICIOUS_SERVER = "malicious_server"


@dataclass(frozen=True)
class AdversaryModel:
    kind: AdversaryKind = AdversaryKind.NONE
    segment: Segment = Segment.BOB_TO_CAROL
    attack_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.attack_fraction <= 1.0:
            raise ConfigError(f"attack_fraction must lie in [0, 1], got {self.attack_fraction}")

    @property
    def target(self) -> Segment | None:
        """Segment on which the attack fires, if any.

        The server attacks right after Bob's send, i.e. on Bob -> Carol,
        whatever segment is configured.
        """
        if self.kind is AdversaryKind.NONE:
            return None
        if self.kind is AdversaryKind.MALICIOUS_SERVER:
            return Segment.BOB_TO_CAROL
        return self.segment


@dataclass(frozen=True)
class AttackRecord:
    round_id: int
    segment: Segment
    basis: Basis | None = None
    outcome: int | None = None
    bell: BellLabel | None = None
    # the adversary's guess for Bob's encoding, when it has one
    inferred_op: EncodingOp | None = None


def eve_intercept_resend(
    state: TwoQubitState, rng: Generator
) -> tuple[TwoQubitState, Basis, int]:
    """Measure the traveling particle in a uniformly random basis and resend
    the eigenstate matching the outcome."""
    basis = Basis.X if rng.random() < 0.5 else Basis.Z
    outcome, partner = measure_slot(state, basis, rng)
    return TwoQubitState.product(partner, prepare_decoy(basis, outcome)), basis, outcome


def server_bell_attack(state: TwoQubitState, rng: Generator) -> tuple[TwoQubitState, BellLabel]:
    """Joint Bell measurement on (A, traveling particle) after Bob's coding.

    The pair is left in the measured Bell state. On a genuine pair this is no
    disturbance at all; on a decoy (a product state) it is.
    """
    label = bell_measure(state, rng)
    return bell_state(label), label


def attack(
    model: AdversaryModel,
    segment: Segment,
    round_id: int,
    state: TwoQubitState,
    rng: Generator,
    log: list[AttackRecord],
) -> TwoQubitState:
    if model.target is not segment:
        return state
    if model.attack_fraction < 1.0 and rng.random() >= model.attack_fraction:
        return state
    if model.kind is AdversaryKind.EXTERNAL_EVE:
        state, basis, outcome = eve_intercept_resend(state, rng)
        log.append(AttackRecord(round_id, segment, basis=basis, outcome=outcome))
    else:
        state, label = server_bell_attack(state, rng)
        # pair started as phi+, so the label reads off Bob's operation
        log.append(AttackRecord(round_id, segment, bell=label, inferred_op=BELL_TO_OP[label]))
    return state
