import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import toeplitz

from muqkd.distill import (
    _pivots,
    amplified_length,
    bits_to_hex,
    codes_to_bits,
    distill,
    reconcile,
    residual_after_pass,
    toeplitz_hash,
)


def oracle_toeplitz(bits, out_len, seed):
    n = len(bits)
    # T[i, j] = seed[i - j + n - 1]
    col = seed[n - 1 : n - 1 + out_len]
    row = seed[n - 1 :: -1]
    return (toeplitz(col, row).astype(np.int64) @ np.asarray(bits, dtype=np.int64)) % 2


def gf2_rank(rows: list[int]) -> int:
    rank, rows = 0, list(rows)
    while rows:
        pivot = max(rows)
        if pivot == 0:
            break
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if (r >> top) & 1 else r for r in rows if r != pivot]
        rank += 1
    return rank


@given(st.integers(1, 200), st.integers(1, 120), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_toeplitz_matches_dense_oracle(n, m, s):
    r = np.random.default_rng(s)
    bits = r.integers(0, 2, n, dtype=np.uint8)
    seed = r.integers(0, 2, m + n - 1, dtype=np.uint8)
    assert np.array_equal(toeplitz_hash(bits, m, seed), oracle_toeplitz(bits, m, seed))


def test_toeplitz_seed_length_checked():
    with pytest.raises(ValueError):
        toeplitz_hash(np.ones(4, dtype=np.uint8), 2, np.ones(4, dtype=np.uint8))


@given(st.lists(st.integers(1, 2**8 - 1), min_size=1, max_size=8))
def test_pivots_select_an_invertible_minor(rows):
    piv = _pivots(rows)
    assert len(piv) == len(set(piv)) == gf2_rank(rows)
    mask = sum(1 << p for p in piv)
    assert gf2_rank([r & mask for r in rows]) == len(piv)


def test_bisection_rows_are_independent():
    # block parity plus the first-half parities of a size-8 bisection
    rows = [0xFF, 0x0F, 0x03, 0x01]
    assert len(_pivots(rows)) == 4


def test_codes_to_bits():
    assert codes_to_bits([0, 1, 2, 3]).tolist() == [0, 0, 0, 1, 1, 0, 1, 1]
    assert bits_to_hex(codes_to_bits([3, 3, 0, 1])) == "f1"


def test_residual_formula():
    assert residual_after_pass(0.0) == 0.0
    # two errors in a block of two survive with probability p^2
    assert residual_after_pass(0.1, 2) == pytest.approx(0.1**2)


class TestReconcile:
    def test_five_percent(self):
        r = np.random.default_rng(99)
        n = 200_000
        ref = r.integers(0, 2, n, dtype=np.uint8)
        noisy = ref ^ (r.random(n) < 0.05).astype(np.uint8)
        res = reconcile(ref, noisy, r, 0.05)
        assert len(res.corrected) >= 100_000
        assert np.mean(res.corrected != res.reference) < 1e-3

    def test_empty(self, rng):
        res = reconcile(np.zeros(0), np.zeros(0), rng, 0.05)
        assert len(res.corrected) == 0 and res.revealed_parities == 0

    def test_noiseless_with_zero_estimate_is_identity(self, rng):
        ref = rng.integers(0, 2, 1000, dtype=np.uint8)
        res = reconcile(ref, ref, rng, 0.0)
        assert res.passes == 0 and np.array_equal(res.corrected, ref)

    def test_unknown_estimate_runs_a_pass(self, rng):
        ref = rng.integers(0, 2, 1000, dtype=np.uint8)
        assert reconcile(ref, ref, rng, None).passes >= 1

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            reconcile(np.zeros(3), np.zeros(4), rng, 0.1)


class TestDistill:
    def test_noiseless_keeps_key(self, rng):
        bits = rng.integers(0, 2, 4000, dtype=np.uint8)
        d = distill(bits, bits, 0.0, rng)
        assert d.leak_fraction == 0.0 and np.array_equal(d.bob_key, bits)

    def test_length_shrinks_by_leak(self):
        r = np.random.default_rng(4)
        n = 120_000
        ref = r.integers(0, 2, n, dtype=np.uint8)
        noisy = ref ^ (r.random(n) < 0.05).astype(np.uint8)
        d = distill(ref, noisy, 0.05, r)
        c = d.correction
        assert np.mean(c.corrected != c.reference) < 1e-3
        assert len(d.bob_key) == amplified_length(d.corrected_length, d.leak_fraction)
        assert len(d.bob_key) == int(np.floor(d.corrected_length * (1 - d.leak_fraction)))
        assert len(d.bob_key) < d.corrected_length

    def test_excess_leak_gives_empty_key(self, rng):
        bits = rng.integers(0, 2, 100, dtype=np.uint8)
        d = distill(bits, bits, 0.6, rng)
        assert len(d.bob_key) == 0
