"""Exact statevector algebra for one EPR pair and one single qubit.

Amplitudes of a pair are ordered (|00>, |01>, |10>, |11>); the first slot is
the server-held particle A, the second the traveling particle.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

TOL = 1e-12
_S = 1.0 / np.sqrt(2.0)


class Basis(enum.IntEnum):
    Z = 0
    X = 1


class Slot(enum.Enum):
    A = "A"
    TRAVELING = "traveling"


class BellLabel(enum.Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS = "psi+"
    PHI_MINUS = "phi-"
    PHI_PLUS = "phi+"


class EncodingOp(enum.IntEnum):
    """Local Pauli encoding, valued by its agreed 2-bit code.

    Modulo global phase the four operations form a Klein four-group; each is
    stored as an (x, z) pair and composes by XOR.
    """

    U0 = 0b00
    U1 = 0b01
    U2 = 0b10
    U3 = 0b11

    @property
    def x(self) -> int:
        return _BITS[self][0]

    @property
    def z(self) -> int:
        return _BITS[self][1]

    @classmethod
    def from_bits(cls, x: int, z: int) -> "EncodingOp":
        return _FROM_BITS[(x & 1, z & 1)]

    @property
    def matrix(self) -> np.ndarray:
        return _MATRICES[self]

    def then(self, second: "EncodingOp") -> "EncodingOp":
        return compose_encodings(self, second)


_BITS = {
    EncodingOp.U0: (0, 0),
    EncodingOp.U1: (1, 1),
    EncodingOp.U2: (1, 0),
    EncodingOp.U3: (0, 1),
}
_FROM_BITS = {bits: op for op, bits in _BITS.items()}

_MATRICES = {
    EncodingOp.U0: np.array([[1, 0], [0, 1]], dtype=complex),
    # |0><1| - |1><0|
    EncodingOp.U1: np.array([[0, 1], [-1, 0]], dtype=complex),
    # |1><0| + |0><1|
    EncodingOp.U2: np.array([[0, 1], [1, 0]], dtype=complex),
    # |0><0| - |1><1|
    EncodingOp.U3: np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _MATRICES.values():
    _m.setflags(write=False)

_BELL_VECTORS = {
    BellLabel.PSI_MINUS: np.array([0, _S, -_S, 0], dtype=complex),
    BellLabel.PSI_PLUS: np.array([0, _S, _S, 0], dtype=complex),
    BellLabel.PHI_MINUS: np.array([_S, 0, 0, -_S], dtype=complex),
    BellLabel.PHI_PLUS: np.array([_S, 0, 0, _S], dtype=complex),
}
_BELL_ORDER = tuple(BellLabel)
_BELL_MATRIX = np.array([_BELL_VECTORS[b] for b in _BELL_ORDER]).conj()

# Operation that carries |phi+> onto each Bell state (mod phase).
BELL_TO_OP = {
    BellLabel.PHI_PLUS: EncodingOp.U0,
    BellLabel.PSI_MINUS: EncodingOp.U1,
    BellLabel.PSI_PLUS: EncodingOp.U2,
    BellLabel.PHI_MINUS: EncodingOp.U3,
}
OP_TO_BELL = {op: label for label, op in BELL_TO_OP.items()}

# Rows are basis eigenvectors: row k is the ket for outcome k.
_EIGENVECTORS = {
    Basis.Z: np.array([[1, 0], [0, 1]], dtype=complex),
    Basis.X: np.array([[_S, _S], [_S, -_S]], dtype=complex),
}


def _frozen(amps) -> np.ndarray:
    arr = np.array(amps, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Qubit:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (2,):
            raise ValueError(f"qubit needs 2 amplitudes, got shape {amps.shape}")
        if abs(np.vdot(amps, amps).real - 1.0) > TOL:
            raise ValueError("qubit amplitudes are not normalized")
        object.__setattr__(self, "amplitudes", amps)

    def isclose(self, other: "Qubit", up_to_phase: bool = False) -> bool:
        return _close(self.amplitudes, other.amplitudes, up_to_phase)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (4,):
            raise ValueError(f"pair needs 4 amplitudes, got shape {amps.shape}")
        if abs(np.vdot(amps, amps).real - 1.0) > TOL:
            raise ValueError("pair amplitudes are not normalized")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def product(cls, a: Qubit, traveling: Qubit) -> "TwoQubitState":
        return cls(np.outer(a.amplitudes, traveling.amplitudes).reshape(4))

    def isclose(self, other: "TwoQubitState", up_to_phase: bool = False) -> bool:
        return _close(self.amplitudes, other.amplitudes, up_to_phase)

    def overlap(self, other: "TwoQubitState") -> float:
        """|<other|self>|, equal to 1 for states identical up to phase."""
        return float(abs(np.vdot(other.amplitudes, self.amplitudes)))


def _close(a: np.ndarray, b: np.ndarray, up_to_phase: bool) -> bool:
    if up_to_phase:
        return abs(abs(np.vdot(a, b)) - 1.0) <= TOL
    return bool(np.allclose(a, b, rtol=0.0, atol=TOL))


def bell_state(label: BellLabel) -> TwoQubitState:
    return _BELL_STATES[label]


def apply_encoding(
    state: TwoQubitState, op: EncodingOp, slot: Slot = Slot.TRAVELING
) -> TwoQubitState:
    """Return (I ⊗ U) or (U ⊗ I) applied to ``state``."""
    m = state.amplitudes.reshape(2, 2)
    u = _MATRICES[op]
    out = m @ u.T if slot is Slot.TRAVELING else u @ m
    return TwoQubitState(out.reshape(4))


def apply_to_qubit(qubit: Qubit, op: EncodingOp) -> Qubit:
    return Qubit(_MATRICES[op] @ qubit.amplitudes)


def compose_encodings(first: EncodingOp, second: EncodingOp) -> EncodingOp:
    """Group product of ``first`` followed by ``second``, modulo global phase."""
    return EncodingOp.from_bits(first.x ^ second.x, first.z ^ second.z)


def prepare_decoy(basis: Basis, value: int) -> Qubit:
    """|0>/|1> for Z, |+x>/|-x> for X."""
    return _EIGENSTATES[basis, value]


# States are immutable, so the fixed ones are shared.
_BELL_STATES = {label: TwoQubitState(vec) for label, vec in _BELL_VECTORS.items()}
_EIGENSTATES = {(b, k): Qubit(_EIGENVECTORS[b][k]) for b in Basis for k in (0, 1)}


def _draw(p0: float, rng: Generator) -> int:
    return 0 if rng.random() < p0 else 1


def measure_qubit(qubit: Qubit, basis: Basis, rng: Generator) -> tuple[int, Qubit]:
    amps = _EIGENVECTORS[basis].conj() @ qubit.amplitudes
    p0 = float(abs(amps[0]) ** 2)
    outcome = _draw(p0, rng)
    return outcome, prepare_decoy(basis, outcome)


def slot_probabilities(
    state: TwoQubitState, basis: Basis, slot: Slot = Slot.TRAVELING
) -> np.ndarray:
    return np.array([np.vdot(v, v).real for v in _conditionals(state, basis, slot)])


def _conditionals(state: TwoQubitState, basis: Basis, slot: Slot) -> np.ndarray:
    # Row k: unnormalized state of the partner given outcome k on ``slot``.
    m = state.amplitudes.reshape(2, 2)
    e = _EIGENVECTORS[basis].conj()
    return e @ m.T if slot is Slot.TRAVELING else e @ m


def measure_slot(
    state: TwoQubitState,
    basis: Basis,
    rng: Generator,
    slot: Slot = Slot.TRAVELING,
) -> tuple[int, Qubit]:
    """Measure one particle of the pair.

    Returns the outcome and the normalized conditional state of the other
    particle. The measured particle is left in the basis eigenstate for the
    outcome, i.e. ``prepare_decoy(basis, outcome)``.
    """
    cond = _conditionals(state, basis, slot)
    p0 = float(np.vdot(cond[0], cond[0]).real)
    outcome = _draw(p0, rng)
    v = cond[outcome]
    return outcome, Qubit(v / np.sqrt(np.vdot(v, v).real))


def bell_probabilities(state: TwoQubitState) -> dict[BellLabel, float]:
    amps = _BELL_MATRIX @ state.amplitudes
    return {label: float(abs(a) ** 2) for label, a in zip(_BELL_ORDER, amps)}


def bell_measure(state: TwoQubitState, rng: Generator) -> BellLabel:
    """Sample a Bell label with probability |<Bell_i|state>|^2."""
    probs = np.abs(_BELL_MATRIX @ state.amplitudes) ** 2
    u = rng.random() * probs.sum()
    acc = 0.0
    for label, p in zip(_BELL_ORDER, probs):
        acc += p
        if u < acc:
            return label
    # float round-off at the top edge
    return _BELL_ORDER[int(np.flatnonzero(probs > 0)[-1])]
