"""Segmented prime sieving, prime counting, and explicit pi(x) sanity bounds."""

import math
from dataclasses import dataclass, field

import numpy as np

# Flag array for one segment is SEGMENT_SIZE bytes (1 MiB), small enough to
# stay cache-resident while sweeping to 2**27.
SEGMENT_SIZE = 1 << 20

_MAX_HI = 1 << 32


@dataclass(frozen=True)
class PrimeRange:
    """The primes in the half-open interval [lo, hi), in ascending order."""

    lo: int
    hi: int
    primes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.primes.setflags(write=False)

    def __len__(self) -> int:
        return len(self.primes)


def _simple_sieve(limit: int) -> np.ndarray:
    """Primes <= limit by a plain sieve; used for base primes only."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for q in range(2, math.isqrt(limit) + 1):
        if flags[q]:
            flags[q * q :: q] = False
    return np.flatnonzero(flags).astype(np.int64)


def _sieve_segment(base: np.ndarray, lo: int, hi: int) -> np.ndarray:
    flags = np.ones(hi - lo, dtype=bool)
    if lo < 2:
        flags[: min(2 - lo, hi - lo)] = False
    for q in base:
        q = int(q)
        start = max(q * q, ((lo + q - 1) // q) * q)
        if start >= hi:
            continue
        flags[start - lo :: q] = False
    return np.flatnonzero(flags) + lo


def sieve_range(lo: int, hi: int) -> PrimeRange:
    """All primes in [lo, hi), hi <= 2**32, sieved in cache-sized segments.

    Memory is O(sqrt(hi) + (hi - lo)): base primes up to sqrt(hi) plus one
    boolean flag per candidate in the requested window.
    """
    if not 0 <= lo < hi <= _MAX_HI:
        raise ValueError(f"invalid range [{lo}, {hi}): need 0 <= lo < hi <= 2**32")
    base = _simple_sieve(math.isqrt(hi - 1))
    chunks = []
    for a in range(lo, hi, SEGMENT_SIZE):
        b = min(a + SEGMENT_SIZE, hi)
        chunks.append(_sieve_segment(base, a, b))
    primes = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return PrimeRange(lo=lo, hi=hi, primes=primes)


def iter_prime_ranges(bounds):
    """Yield PrimeRange per consecutive [bounds[i], bounds[i+1]) interval.

    Base primes are sieved once; ranges come out in ascending order and are
    never all held in memory together, so a sweep to 2**27 streams.
    """
    bounds = list(bounds)
    if len(bounds) < 2:
        return
    if any(b <= a for a, b in zip(bounds, bounds[1:])):
        raise ValueError("bounds must be strictly ascending")
    if not 0 <= bounds[0] or bounds[-1] > _MAX_HI:
        raise ValueError("bounds must lie in [0, 2**32]")
    base = _simple_sieve(math.isqrt(bounds[-1] - 1))
    for lo, hi in zip(bounds, bounds[1:]):
        chunks = [
            _sieve_segment(base, a, min(a + SEGMENT_SIZE, hi))
            for a in range(lo, hi, SEGMENT_SIZE)
        ]
        yield PrimeRange(lo=lo, hi=hi, primes=np.concatenate(chunks))


def prime_count(x: int) -> int:
    """pi(x): the number of primes <= x."""
    if x < 0:
        raise ValueError("x must be non-negative")
    if x < 2:
        return 0
    return sum(len(r) for r in iter_prime_ranges(_span_bounds(x + 1)))


def _span_bounds(hi: int):
    bounds = list(range(0, hi, SEGMENT_SIZE))
    bounds.append(hi)
    return bounds


def rosser_check(x: int, pi_x: int) -> bool:
    """True iff x/(ln x + 2) < pi_x < x/(ln x - 4); valid for x >= 55."""
    if x < 55:
        raise ValueError(f"rosser_check requires x >= 55, got {x}")
    lx = math.log(x)
    return x / (lx + 2.0) < pi_x < x / (lx - 4.0)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 3.3 * 10**24."""
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        z = pow(a, d, n)
        if z in (1, n - 1):
            continue
        for _ in range(s - 1):
            z = z * z % n
            if z == n - 1:
                break
        else:
            return False
    return True
