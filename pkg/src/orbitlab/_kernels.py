"""Batched orbit computation over prime ranges (numba hot path).

The per-prime visited set is an open-addressing hash table with generation
stamps, so the same buffers serve every prime in a range without clearing.
All modular arithmetic is done in uint64: residues are < 2**32, so z*z + c
never wraps.  A table overflow (orbit larger than the load limit) aborts the
current prime without committing anything; the driver grows the table and
retries from that prime, which keeps accumulation order exact.
"""

import math

import numpy as np
from numba import njit

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_U0 = np.uint64(0)
_U1 = np.uint64(1)

_EMPTY_I64 = np.empty(0, dtype=np.int64)


@njit(cache=True, nogil=True)
def _orbit_one(c_u, a_u, p_u, keys, steps, stamps, gen, shift, mask, limit):
    """One orbit; returns (m, tail, zero_hit, ok). ok=0 means table too small."""
    z = a_u % p_u
    step = 0
    zero = 0
    while True:
        h = (z * _GOLD) >> shift
        while stamps[h] == gen and keys[h] != z:
            h = (h + _U1) & mask
        if stamps[h] == gen:
            return step, steps[h], zero, 1
        if step >= limit:
            return -1, -1, 0, 0
        stamps[h] = gen
        keys[h] = z
        steps[h] = step
        if z == _U0:
            zero = 1
        z = (z * z + c_u) % p_u
        step += 1


@njit(cache=True, nogil=True)
def _run_pair_range(primes_u, c, alpha, keys, steps, stamps, gen0, shift, limit,
                    sums, counters, hist, w, nbins, raw_m, raw_tail, raw_zero, start):
    """Accumulate orbit statistics for one (c, alpha) over primes_u[start:].

    sums[0..3] collect ratio**r for ratio = m/sqrt(p), r = 1..4, added in
    ascending-p order (a pure left fold, so results are reproducible).
    counters = [primes_consumed, zero_hits].  Histogram and raw outputs are
    filled only when their arrays are non-empty.

    Returns (next_index, gen): next_index == len(primes_u) when the range is
    complete, else the index of the prime that overflowed the table.
    """
    mask = np.uint64(len(keys) - 1)
    gen = gen0
    do_hist = hist.size > 0
    do_raw = raw_m.size > 0
    for i in range(start, len(primes_u)):
        p_u = primes_u[i]
        p_i = np.int64(p_u)
        c_u = np.uint64(c % p_i)
        a_u = np.uint64(alpha % p_i)
        gen += 1
        m, tail, zero, ok = _orbit_one(c_u, a_u, p_u, keys, steps, stamps,
                                       gen, shift, mask, limit)
        if ok == 0:
            return i, gen
        ratio = m / np.sqrt(np.float64(p_u))
        r2 = ratio * ratio
        sums[0] += ratio
        sums[1] += r2
        sums[2] += r2 * ratio
        sums[3] += r2 * r2
        counters[0] += 1
        counters[1] += zero
        if do_hist:
            k = np.int64(ratio / w)
            if k < nbins:
                hist[k] += 1
        if do_raw:
            raw_m[i] = m
            raw_tail[i] = tail
            raw_zero[i] = zero
    return len(primes_u), gen


class PairWorker:
    """Owns the scratch hash table for one worker thread.

    Not thread-safe: each thread must use its own instance.  The table grows
    geometrically when an orbit exceeds the load limit (half the slots) and
    is retained across primes and ranges.
    """

    MAX_BITS = 28

    def __init__(self, table_bits: int = 16):
        self._bits = table_bits
        self._alloc()

    def _alloc(self):
        n = 1 << self._bits
        self._keys = np.zeros(n, dtype=np.uint64)
        self._steps = np.zeros(n, dtype=np.int64)
        self._stamps = np.zeros(n, dtype=np.int64)
        self._gen = 0
        self._shift = np.uint64(64 - self._bits)
        self._limit = n >> 1

    def _grow(self):
        if self._bits + 2 > self.MAX_BITS:
            raise RuntimeError(
                f"orbit exceeds {(1 << self.MAX_BITS) // 2} distinct residues; "
                "such pairs fall outside the statistical regime this sweep supports"
            )
        self._bits += 2
        self._alloc()

    def run_range(self, primes_u, c, alpha, sums, counters,
                  hist=_EMPTY_I64, w=1.0, raw=None):
        """Run one (c, alpha) pair over a uint64 prime array, mutating
        sums (float64[4]) and counters (int64[2]) in place."""
        raw_m, raw_tail, raw_zero = raw if raw is not None else (_EMPTY_I64,) * 3
        nbins = len(hist)
        start = 0
        n = len(primes_u)
        while start < n:
            start, self._gen = _run_pair_range(
                primes_u, c, alpha, self._keys, self._steps, self._stamps,
                self._gen, self._shift, self._limit,
                sums, counters, hist, w, nbins, raw_m, raw_tail, raw_zero, start)
            if start < n:
                self._grow()


def orbit_batch(c: int, alpha: int, primes) -> tuple:
    """Per-prime (m, tail, cycle, zero_hit) arrays for one pair.

    Convenience wrapper over the jitted kernel; primes may be any integer
    array-like of primes below 2**32.
    """
    primes_u = np.ascontiguousarray(primes, dtype=np.uint64)
    n = len(primes_u)
    raw = (np.zeros(n, np.int64), np.zeros(n, np.int64), np.zeros(n, np.int64))
    worker = PairWorker()
    worker.run_range(primes_u, c, alpha,
                     np.zeros(4), np.zeros(2, np.int64), raw=raw)
    m, tail, zero = raw
    return m, tail, m - tail, zero.astype(bool)


def term_powers(m: int, p: int) -> tuple:
    """The four accumulated terms for one record, bit-for-bit as the kernel
    computes them: (r, r**2, r**3, r**4) with r = m/sqrt(p)."""
    ratio = m / math.sqrt(p)
    r2 = ratio * ratio
    return ratio, r2, r2 * ratio, r2 * r2
