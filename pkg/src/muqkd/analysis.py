"""Check-sample classification, error rates, verdicts and efficiency."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

from .quantum import Basis
from .roles import Mode, ProtocolError, RoundRecord, carol_decode


class SampleClass(enum.Enum):
    S_BC = "s_Bc"
    S_CC0 = "s_Cc0"
    S_CC1 = "s_Cc1"
    S_W = "s_w"


class Verdict(enum.Enum):
    ACCEPT = "accept"
    ABORT = "abort"


DEFAULT_THRESHOLD = 0.08


@dataclass
class Classified:
    samples: dict[SampleClass, list[RoundRecord]]
    key_rounds: list[RoundRecord]
    decoy_positions: frozenset[int]
    unclassified: int
    lost: int

    @property
    def raw_rounds(self) -> int:
        """Double-coding genuine rounds, before any of them is revealed."""
        return len(self.key_rounds) + len(self.samples[SampleClass.S_W])


def classify_samples(
    transcript: list[RoundRecord],
    decoy_positions: frozenset[int] | None,
    reveal_fraction: float,
    rng: Generator,
) -> Classified:
    """Sort rounds into check classes; every non-lost round lands in at most one.

    The revealed set s_w is an exact-size uniform draw from the genuine
    double-coding rounds.
    """
    if decoy_positions is None:
        raise ProtocolError("decoy positions must be disclosed before sampling")
    if not 0.0 <= reveal_fraction <= 1.0:
        raise ValueError("reveal_fraction must lie in [0, 1]")
    samples: dict[SampleClass, list[RoundRecord]] = {c: [] for c in SampleClass}
    candidates = []
    unclassified = lost = 0
    for rec in transcript:
        if rec.lost:
            lost += 1
            continue
        decoy = rec.round_id in decoy_positions
        if decoy != rec.is_decoy:
            raise ProtocolError(f"decoy disclosure disagrees with round {rec.round_id}")
        if rec.bob_mode is Mode.CONTROL:
            samples[SampleClass.S_BC].append(rec)
        elif rec.carol_mode is Mode.CONTROL:
            samples[SampleClass.S_CC1 if decoy else SampleClass.S_CC0].append(rec)
        elif rec.carol_mode is Mode.CODING and not decoy:
            candidates.append(rec)
        else:
            unclassified += 1
    k = int(round(reveal_fraction * len(candidates)))
    chosen = set(rng.choice(len(candidates), size=k, replace=False).tolist()) if k else set()
    key_rounds = []
    for i, rec in enumerate(candidates):
        (samples[SampleClass.S_W] if i in chosen else key_rounds).append(rec)
    return Classified(samples, key_rounds, frozenset(decoy_positions), unclassified, lost)


@dataclass
class ClassStats:
    events: int = 0
    matched: int = 0
    errors: int = 0
    by_basis: dict[str, list[int]] = field(default_factory=dict)

    @property
    def rate(self) -> float | None:
        return self.errors / self.matched if self.matched else None

    def add(self, basis: Basis | None, error: bool) -> None:
        self.matched += 1
        self.errors += int(error)
        if basis is not None:
            m, e = self.by_basis.setdefault(basis.name, [0, 0])
            self.by_basis[basis.name] = [m + 1, e + int(error)]

    def basis_rate(self, basis: Basis) -> float | None:
        m, e = self.by_basis.get(basis.name, (0, 0))
        return e / m if m else None

    def merge(self, other: "ClassStats") -> None:
        self.events += other.events
        self.matched += other.matched
        self.errors += other.errors
        for b, (m, e) in other.by_basis.items():
            m0, e0 = self.by_basis.get(b, (0, 0))
            self.by_basis[b] = [m0 + m, e0 + e]


def expected_disagreement(bob_op, basis: Basis) -> int:
    """Outcome disagreement of the two halves of (I ⊗ U)|phi+>.

    Z outcomes disagree iff U flips (x bit); X outcomes iff U has a phase (z bit).
    """
    return bob_op.x if basis is Basis.Z else bob_op.z


def error_rates(classified: Classified) -> dict[SampleClass, ClassStats]:
    stats = {c: ClassStats() for c in SampleClass}
    s = classified.samples

    for rec in s[SampleClass.S_BC]:
        st = stats[SampleClass.S_BC]
        st.events += 1
        basis, bob = rec.bob_measurement
        st.add(basis, rec.alice_measurement[1] != bob)

    for rec in s[SampleClass.S_CC0]:
        st = stats[SampleClass.S_CC0]
        st.events += 1
        basis, carol = rec.carol_measurement
        flip = expected_disagreement(rec.bob_op, basis)
        st.add(basis, (rec.alice_measurement[1] ^ carol) != flip)

    for rec in s[SampleClass.S_CC1]:
        st = stats[SampleClass.S_CC1]
        st.events += 1
        basis, carol = rec.carol_measurement
        d_basis, d_value = rec.decoy
        if basis is d_basis:
            st.add(basis, carol != d_value)

    for rec in s[SampleClass.S_W]:
        st = stats[SampleClass.S_W]
        st.events += 1
        st.add(None, carol_decode(rec, classified.decoy_positions) != int(rec.bob_op))
    return stats


def verdict(stats: dict[SampleClass, ClassStats], thresholds: dict[SampleClass, float]) -> Verdict:
    """Accept iff every class that has a rate is strictly below its threshold."""
    for cls, st in stats.items():
        rate = st.rate
        if rate is not None and not rate < thresholds.get(cls, DEFAULT_THRESHOLD):
            return Verdict.ABORT
    return Verdict.ACCEPT


@dataclass
class Counters:
    final_key_bits: int = 0  # b_s
    qubits_used: int = 0  # q_t
    classical_bits: int = 0  # b_t
    useful_qubits: int = 0  # q_u

    def merge(self, other: "Counters") -> None:
        self.final_key_bits += other.final_key_bits
        self.qubits_used += other.qubits_used
        self.classical_bits += other.classical_bits
        self.useful_qubits += other.useful_qubits


def compute_efficiency(c: Counters) -> tuple[float | None, float | None]:
    """(eta_t, eta_q) = (b_s / (q_t + b_t), q_u / q_t); absent when q_t = 0."""
    if c.qubits_used == 0:
        return None, None
    return (
        c.final_key_bits / (c.qubits_used + c.classical_bits),
        c.useful_qubits / c.qubits_used,
    )


def count_qubits(transcript: list[RoundRecord]) -> int:
    # every emitted pair is two qubits, lost or not; a decoy is one more
    return sum(3 if rec.is_decoy else 2 for rec in transcript)


def binomial_se(p: float, n: int) -> float:
    return float(np.sqrt(p * (1 - p) / n)) if n else float("inf")
