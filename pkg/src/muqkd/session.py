"""One key-distribution session between a sender and a receiver."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from .adversaries import AdversaryKind, AdversaryModel, AttackRecord, attack
from .distill import bits_to_hex, codes_to_bits, distill
from .messages import ClassicalChannel, DecoyPositions, MeasResult, SampleReveal
from .network import Channels, Segment, transmit
from .roles import (
    BOB,
    ModeProbabilities,
    RoundRecord,
    alice_announce,
    alice_prepare,
    bob_decide,
    carol_decide,
    carol_decode,
)
from .quantum import TwoQubitState


@dataclass(frozen=True)
class SessionSettings:
    rounds: int = 10_000
    probabilities: ModeProbabilities = field(default_factory=ModeProbabilities)
    channels: Channels = field(default_factory=Channels)
    adversary: AdversaryModel = field(default_factory=AdversaryModel)
    thresholds: dict = field(default_factory=dict)
    reveal_fraction: float = 0.1

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if not 0.0 <= self.reveal_fraction <= 1.0:
            raise ValueError("reveal_fraction must lie in [0, 1]")

    def threshold(self, cls: an.SampleClass) -> float:
        return self.thresholds.get(cls, an.DEFAULT_THRESHOLD)


@dataclass
class SessionReport:
    stats: dict[an.SampleClass, an.ClassStats]
    verdict: an.Verdict
    raw_key_bits: int
    sifted_key_bits: int
    final_key_bits: int
    counters: an.Counters
    eta_t: float | None
    eta_q: float | None
    key_hex: str | None = None
    keys_agree: bool | None = None
    leak_fraction: float | None = None
    corrected_key_bits: int | None = None
    adversary_informed_fraction: float | None = None
    lost_rounds: int = 0
    index: int = 0
    slot: int | None = None
    route: list | None = None

    def to_dict(self) -> dict:
        classes = [
            {
                "class": cls.value,
                "events": st.events,
                "matched": st.matched,
                "errors": st.errors,
                "rate": st.rate,
                "by_basis": {b: {"matched": m, "errors": e} for b, (m, e) in sorted(st.by_basis.items())},
            }
            for cls, st in self.stats.items()
        ]
        return {
            "session": self.index,
            "slot": self.slot,
            "route": self.route,
            "classes": classes,
            "verdict": self.verdict.value,
            "raw_key_bits": self.raw_key_bits,
            "sifted_key_bits": self.sifted_key_bits,
            "corrected_key_bits": self.corrected_key_bits,
            "final_key_bits": self.final_key_bits,
            "leak_fraction": self.leak_fraction,
            "keys_agree": self.keys_agree,
            "qubits_used": self.counters.qubits_used,
            "useful_qubits": self.counters.useful_qubits,
            "classical_bits_exchanged": self.counters.classical_bits,
            "eta_t": self.eta_t,
            "eta_q": self.eta_q,
            "adversary_informed_fraction": self.adversary_informed_fraction,
            "lost_rounds": self.lost_rounds,
            "key_hex": self.key_hex,
        }


@dataclass
class SessionOutcome:
    report: SessionReport
    transcript: list[RoundRecord]
    channel: ClassicalChannel
    attacks: list[AttackRecord]
    classified: an.Classified
    bob_key: np.ndarray | None = None
    carol_key: np.ndarray | None = None


def run_rounds(
    settings: SessionSettings,
    rng: np.random.Generator,
    channel: ClassicalChannel,
    attacks: list[AttackRecord],
) -> list[RoundRecord]:
    """Quantum phase: pairs go server -> sender -> receiver -> server."""
    probs, adv, chans = settings.probabilities, settings.adversary, settings.channels

    def hop(segment: Segment, rec: RoundRecord, state: TwoQubitState) -> TwoQubitState | None:
        state = attack(adv, segment, rec.round_id, state, rng, attacks)
        return transmit(state, chans[segment], rng)

    transcript = []
    for rid in range(settings.rounds):
        rec = RoundRecord(rid)
        transcript.append(rec)
        state = hop(Segment.ALICE_TO_BOB, rec, alice_prepare())
        if state is None:
            rec.lost = True
            continue
        state = bob_decide(rec, state, rng, probs, channel)
        if state is None:
            continue
        state = hop(Segment.BOB_TO_CAROL, rec, state)
        if state is None:
            rec.lost = True
            continue
        state = carol_decide(rec, state, rng, probs, channel)
        if state is None:
            continue
        state = hop(Segment.CAROL_TO_ALICE, rec, state)
        if state is None:
            rec.lost = True
            continue
        alice_announce(rec, state, rng, channel)
    return transcript


def _informed_fraction(transcript, attacks, kind) -> float | None:
    if kind is AdversaryKind.NONE:
        return None
    guesses = {a.round_id: a.inferred_op for a in attacks}
    genuine = [r for r in transcript if r.double_coding]
    if not genuine:
        return None
    hits = sum(1 for r in genuine if guesses.get(r.round_id) is r.bob_op)
    return hits / len(genuine)


def run_session(settings: SessionSettings, seed: np.random.SeedSequence | int, index: int = 0) -> SessionOutcome:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    proto_seed, post_seed = seed.spawn(2)
    rng = np.random.default_rng(proto_seed)
    post_rng = np.random.default_rng(post_seed)

    channel = ClassicalChannel()
    attacks: list[AttackRecord] = []
    transcript = run_rounds(settings, rng, channel, attacks)

    # decoy positions disclosed after the quantum phase
    decoys = tuple(r.round_id for r in transcript if r.is_decoy)
    channel.send(BOB, DecoyPositions(decoys))

    # sampling and the reveals it needs
    classified = an.classify_samples(transcript, frozenset(decoys), settings.reveal_fraction, post_rng)
    for rec in classified.samples[an.SampleClass.S_CC0]:
        channel.send(BOB, SampleReveal(rec.round_id, rec.bob_op))
    for rec in classified.samples[an.SampleClass.S_CC1]:
        channel.send(BOB, MeasResult(rec.round_id, *rec.decoy))
    for rec in classified.samples[an.SampleClass.S_W]:
        channel.send(BOB, SampleReveal(rec.round_id, rec.bob_op))

    stats = an.error_rates(classified)
    thresholds = {c: settings.threshold(c) for c in an.SampleClass}
    v = an.verdict(stats, thresholds)

    counters = an.Counters(
        qubits_used=an.count_qubits(transcript),
        classical_bits=channel.payload_bits,
        useful_qubits=2 * classified.raw_rounds,
    )
    report = SessionReport(
        stats=stats,
        verdict=v,
        raw_key_bits=2 * classified.raw_rounds,
        sifted_key_bits=2 * len(classified.key_rounds),
        final_key_bits=0,
        counters=counters,
        eta_t=None,
        eta_q=None,
        adversary_informed_fraction=_informed_fraction(transcript, attacks, settings.adversary.kind),
        lost_rounds=classified.lost,
        index=index,
    )
    outcome = SessionOutcome(report, transcript, channel, attacks, classified)

    # distill only on accept
    if v is an.Verdict.ACCEPT:
        keyed = classified.key_rounds
        bob_bits = codes_to_bits([int(r.bob_op) for r in keyed])
        carol_bits = codes_to_bits([carol_decode(r, classified.decoy_positions) for r in keyed])
        d = distill(bob_bits, carol_bits, stats[an.SampleClass.S_W].rate, post_rng)
        counters.final_key_bits = len(d.bob_key)
        report.final_key_bits = len(d.bob_key)
        report.key_hex = bits_to_hex(d.bob_key)
        report.keys_agree = d.keys_agree
        report.leak_fraction = d.leak_fraction
        report.corrected_key_bits = d.corrected_length
        outcome.bob_key, outcome.carol_key = d.bob_key, d.carol_key
    report.eta_t, report.eta_q = an.compute_efficiency(counters)
    return outcome
