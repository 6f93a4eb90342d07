import itertools

import numpy as np
import pytest

from muqkd.adversaries import (
    AdversaryKind,
    AdversaryModel,
    eve_intercept_resend,
    server_bell_attack,
)
from muqkd.analysis import SampleClass
from muqkd.network import ConfigError, Segment
from muqkd.quantum import BellLabel, EncodingOp, apply_encoding, bell_state
from muqkd.roles import ModeProbabilities
from muqkd.session import SessionSettings, run_session

S = 1 / np.sqrt(2)
KETS = {
    ("Z", 0): np.array([1, 0]),
    ("Z", 1): np.array([0, 1]),
    ("X", 0): np.array([S, S]),
    ("X", 1): np.array([S, -S]),
}
BELL = {
    "phi+": np.array([S, 0, 0, S]),
    "phi-": np.array([S, 0, 0, -S]),
    "psi+": np.array([0, S, S, 0]),
    "psi-": np.array([0, S, -S, 0]),
}
PAULI = {
    EncodingOp.U0: np.eye(2),
    EncodingOp.U1: np.array([[0, 1], [-1, 0]]),
    EncodingOp.U2: np.array([[0, 1], [1, 0]]),
    EncodingOp.U3: np.array([[1, 0], [0, -1]]),
}


def oracle_eve_on_pair() -> float:
    """Intercept-resend on half of phi+, then same-basis check of both halves."""
    err = 0.0
    for eb, o, cb in itertools.product("ZX", (0, 1), "ZX"):
        # Eve's outcome o has prob 1/2 and leaves |o>|o> in her basis
        pair = np.kron(KETS[eb, o], KETS[eb, o])
        for a, c in itertools.product((0, 1), repeat=2):
            p = abs(np.vdot(np.kron(KETS[cb, a], KETS[cb, c]), pair)) ** 2
            if a != c:
                err += 0.5 * 0.5 * 0.5 * p
    return err


def oracle_eve_on_decoy() -> float:
    """Intercept-resend on a BB84-style decoy, basis-matched check."""
    err = 0.0
    for db, v, eb in itertools.product("ZX", (0, 1), "ZX"):
        for o in (0, 1):
            p_o = abs(np.vdot(KETS[eb, o], KETS[db, v])) ** 2
            p_err = abs(np.vdot(KETS[db, 1 - v], KETS[eb, o])) ** 2
            err += 0.25 * 0.5 * p_o * p_err
    return err


def oracle_server_on_decoy() -> float:
    """Bell measurement on (A, d) with A collapsed to Bob's B outcome.

    Sums over decoy preparation, A's state, Bell outcome and Carol's
    basis-matched result.
    """
    err = total = 0.0
    for db, v, a in itertools.product("ZX", (0, 1), (0, 1)):
        prior = 0.5 * 0.5 * 0.5
        pre = np.kron(KETS[db, a], KETS[db, v])
        for vec in BELL.values():
            p_bell = abs(np.vdot(vec, pre)) ** 2
            m = vec.reshape(2, 2)
            for c in (0, 1):
                p_c = np.linalg.norm(m @ KETS[db, c]) ** 2
                w = prior * p_bell * p_c
                total += w
                if c != v:
                    err += w
    return err / total


def test_oracle_values():
    assert oracle_eve_on_pair() == pytest.approx(0.25, abs=1e-12)
    assert oracle_eve_on_decoy() == pytest.approx(0.25, abs=1e-12)
    assert oracle_server_on_decoy() == pytest.approx(0.5, abs=1e-12)


def test_server_attack_on_genuine_pair_is_silent(rng):
    for op in EncodingOp:
        vec = np.kron(np.eye(2), PAULI[op]) @ BELL["phi+"]
        probs = sorted(abs(np.vdot(b, vec)) ** 2 for b in BELL.values())
        assert probs[-1] == pytest.approx(1, abs=1e-12)
        state = apply_encoding(bell_state(BellLabel.PHI_PLUS), op)
        after, label = server_bell_attack(state, rng)
        assert after.isclose(state, up_to_phase=True)


def test_eve_forwards_eigenstate(rng):
    state = bell_state(BellLabel.PHI_PLUS)
    for _ in range(50):
        out, basis, bit = eve_intercept_resend(state, rng)
        m = out.amplitudes.reshape(2, 2)
        # product state: rank one
        assert abs(np.linalg.det(m)) < 1e-12


def test_model_validation():
    with pytest.raises(ConfigError):
        AdversaryModel(AdversaryKind.EXTERNAL_EVE, attack_fraction=1.2)
    assert AdversaryModel(AdversaryKind.MALICIOUS_SERVER, Segment.ALICE_TO_BOB).target is Segment.BOB_TO_CAROL
    assert AdversaryModel().target is None


CHECKS = ModeProbabilities(0.1, 0.5, 0.5)


def run(adv, rounds=100_000, seed=11, probs=CHECKS):
    return run_session(SessionSettings(rounds=rounds, probabilities=probs, adversary=adv), seed).report


def within(rate, expected, n, k=3.0):
    se = np.sqrt(max(expected * (1 - expected), 1e-12) / n)
    return abs(rate - expected) <= k * se or (expected == 0 and rate == 0)


class TestStatistics:
    def test_fraction_zero_leaves_everything_clean(self):
        r = run(AdversaryModel(AdversaryKind.EXTERNAL_EVE, Segment.BOB_TO_CAROL, 0.0), rounds=20_000)
        assert all(st.errors == 0 for st in r.stats.values())

    @pytest.mark.parametrize(
        "segment, cls",
        [
            (Segment.ALICE_TO_BOB, SampleClass.S_BC),
            (Segment.ALICE_TO_BOB, SampleClass.S_CC0),
            (Segment.BOB_TO_CAROL, SampleClass.S_CC0),
            (Segment.BOB_TO_CAROL, SampleClass.S_CC1),
        ],
    )
    def test_eve_full_attack_quarter_error(self, segment, cls):
        r = run(AdversaryModel(AdversaryKind.EXTERNAL_EVE, segment, 1.0))
        st = r.stats[cls]
        assert within(st.rate, oracle_eve_on_pair() if cls is not SampleClass.S_CC1 else oracle_eve_on_decoy(), st.matched)

    def test_server_detection_asymmetry(self):
        r = run(AdversaryModel(AdversaryKind.MALICIOUS_SERVER, attack_fraction=1.0))
        cc0, cc1 = r.stats[SampleClass.S_CC0], r.stats[SampleClass.S_CC1]
        assert cc0.errors == 0
        assert r.stats[SampleClass.S_W].errors == 0
        assert cc1.matched >= 10_000
        assert within(cc1.rate, oracle_server_on_decoy(), cc1.matched)
        assert r.adversary_informed_fraction == 1.0

    @pytest.mark.parametrize("fraction", [0.25, 0.5, 1.0])
    def test_intercept_resend_scaling(self, fraction):
        r = run(AdversaryModel(AdversaryKind.EXTERNAL_EVE, Segment.BOB_TO_CAROL, fraction), seed=12)
        st = r.stats[SampleClass.S_CC1]
        assert within(st.rate, oracle_eve_on_decoy() * fraction, st.matched)

    def test_informed_fraction_monotone(self):
        probs = ModeProbabilities(0.05, 0.05, 0.05)
        vals = [
            run(AdversaryModel(AdversaryKind.MALICIOUS_SERVER, attack_fraction=f), rounds=20_000, probs=probs).adversary_informed_fraction
            for f in (0.0, 0.25, 0.5, 1.0)
        ]
        assert vals[0] == 0.0 and vals[-1] == 1.0
        n = 20_000 * 0.9 * 0.95
        assert all(b >= a - 3 * np.sqrt(0.25 / n) for a, b in zip(vals, vals[1:]))

    def test_external_eve_learns_nothing_about_bob(self):
        r = run(AdversaryModel(AdversaryKind.EXTERNAL_EVE, Segment.BOB_TO_CAROL, 1.0), rounds=5_000)
        assert r.adversary_informed_fraction == 0.0
