"""Error correction by block parities with bisection, then Toeplitz hashing.

Every revealed parity costs one discarded bit, chosen so the kept bits are
independent of what was revealed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator
from scipy.signal import fftconvolve
from scipy.stats import binom

BLOCK = 8
TARGET_RESIDUAL = 1e-3
MAX_PASSES = 64


def codes_to_bits(codes) -> np.ndarray:
    """2-bit codes to a bit array, high bit first."""
    codes = np.asarray(codes, dtype=np.uint8)
    return np.stack([(codes >> 1) & 1, codes & 1], axis=1).reshape(-1)


def bits_to_hex(bits: np.ndarray) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def _block_error_estimate(mismatch_fraction: float, size: int) -> float:
    # P(odd errors in a block of n) = (1 - (1 - 2e)^n) / 2, inverted.
    f = min(mismatch_fraction, 0.5 - 1e-9)
    return (1.0 - (1.0 - 2.0 * f) ** (1.0 / size)) / 2.0


def residual_after_pass(error_rate: float, size: int = BLOCK) -> float:
    """Expected per-bit error left after one pass at the given error rate.

    Blocks with an even error count pass unnoticed; an odd count loses
    exactly one error to bisection.
    """
    if error_rate <= 0.0:
        return 0.0
    k = np.arange(size + 1)
    p = binom.pmf(k, size, error_rate)
    left = np.where(k % 2 == 1, k - 1, k)
    return float(np.dot(p, left) / size)


def _pivots(rows: list[int]) -> list[int]:
    """Columns making the revealed GF(2) rows an invertible square minor."""
    basis: list[tuple[int, int]] = []
    out = []
    for row in rows:
        for p, r in basis:
            if (row >> p) & 1:
                row ^= r
        if row == 0:
            continue
        p = row.bit_length() - 1
        basis.append((p, row))
        basis.sort(reverse=True)
        out.append(p)
    return out


@dataclass
class CorrectionResult:
    reference: np.ndarray
    corrected: np.ndarray
    revealed_parities: int
    passes: int
    estimated_residual: float
    input_length: int


def reconcile(
    reference: np.ndarray,
    noisy: np.ndarray,
    rng: Generator,
    estimated_error: float | None,
    block: int = BLOCK,
    target: float = TARGET_RESIDUAL,
    max_passes: int = MAX_PASSES,
) -> CorrectionResult:
    """Correct ``noisy`` towards ``reference`` with public parity exchanges.

    Passes repeat, each under a fresh public shuffle, until the estimated
    residual error drops below ``target``. With no prior estimate one pass
    is always run to measure it.
    """
    a = np.asarray(reference, dtype=np.uint8).copy()
    b = np.asarray(noisy, dtype=np.uint8).copy()
    if a.shape != b.shape:
        raise ValueError("keys differ in length")
    n0 = len(a)
    revealed = 0
    passes = 0
    estimate = estimated_error
    while len(a) and (estimate is None or estimate >= target) and passes < max_passes:
        passes += 1
        perm = rng.permutation(len(a))
        a, b = a[perm], b[perm]
        n = len(a)
        starts = np.arange(0, n, block)
        ends = np.minimum(starts + block, n)
        pa = np.add.reduceat(a, starts) & 1
        pb = np.add.reduceat(b, starts) & 1
        bad = np.flatnonzero(pa != pb)
        revealed += len(starts)

        # Default discard: last bit of each block (pivot of the full-block row).
        discard = set((ends - 1).tolist())
        full_blocks = int(np.sum(ends - starts == block))
        for i in bad:
            lo, hi = int(starts[i]), int(ends[i])
            size = hi - lo
            rows = [(1 << size) - 1]
            l, h = 0, size
            while h - l > 1:
                m = (l + h) // 2
                rows.append(((1 << (m - l)) - 1) << l)
                revealed += 1
                if (int(a[lo + l : lo + m].sum()) ^ int(b[lo + l : lo + m].sum())) & 1:
                    h = m
                else:
                    l = m
            b[lo + l] ^= 1
            discard.update(lo + p for p in _pivots(rows))
        keep = np.ones(n, dtype=bool)
        keep[list(discard)] = False
        a, b = a[keep], b[keep]

        n_bad_full = int(np.sum(ends[bad] - starts[bad] == block))
        frac = n_bad_full / full_blocks if full_blocks else 0.0
        estimate = residual_after_pass(_block_error_estimate(frac, block), block)
    return CorrectionResult(a, b, revealed, passes, estimate if estimate is not None else 0.0, n0)


def toeplitz_hash(bits: np.ndarray, out_len: int, seed: np.ndarray) -> np.ndarray:
    """Multiply by the out_len x n Toeplitz matrix T[i, j] = seed[i - j + n - 1] over GF(2)."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = len(bits)
    if out_len == 0 or n == 0:
        return np.zeros(0, dtype=np.uint8)
    if len(seed) != out_len + n - 1:
        raise ValueError(f"seed must have {out_len + n - 1} bits, got {len(seed)}")
    full = fftconvolve(np.asarray(seed, dtype=float), bits.astype(float))
    return (np.rint(full[n - 1 : n - 1 + out_len]).astype(np.int64) & 1).astype(np.uint8)


@dataclass
class DistillResult:
    bob_key: np.ndarray
    carol_key: np.ndarray
    raw_length: int
    corrected_length: int
    revealed_parities: int
    leak_fraction: float
    correction: CorrectionResult

    @property
    def keys_agree(self) -> bool:
        return bool(np.array_equal(self.bob_key, self.carol_key))


def amplified_length(corrected_length: int, leak_fraction: float) -> int:
    return max(0, int(np.floor(corrected_length * (1.0 - leak_fraction))))


def distill(
    bob_bits: np.ndarray,
    carol_bits: np.ndarray,
    observed_error: float | None,
    rng: Generator,
) -> DistillResult:
    """Correct Carol's copy, then compress both by the leak fraction.

    leak_fraction = revealed parities / raw length + 2 * observed error.
    """
    bob_bits = np.asarray(bob_bits, dtype=np.uint8)
    carol_bits = np.asarray(carol_bits, dtype=np.uint8)
    corr = reconcile(bob_bits, carol_bits, rng, observed_error)
    raw = len(bob_bits)
    leak = (corr.revealed_parities / raw if raw else 0.0) + 2.0 * (observed_error or 0.0)
    leak = min(leak, 1.0)
    n = len(corr.reference)
    if leak == 0.0:
        bob_key, carol_key = corr.reference, corr.corrected
    else:
        m = amplified_length(n, leak)
        if m == 0:
            bob_key = carol_key = np.zeros(0, dtype=np.uint8)
        else:
            seed = rng.integers(0, 2, size=m + n - 1, dtype=np.uint8)
            bob_key = toeplitz_hash(corr.reference, m, seed)
            carol_key = toeplitz_hash(corr.corrected, m, seed)
    return DistillResult(bob_key, carol_key, raw, n, corr.revealed_parities, leak, corr)
