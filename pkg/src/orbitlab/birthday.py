"""Exact and limiting birthday-collision mathematics.

X_n is the number of uniform draws (with replacement) from {1..n} until the
first repeat.  X_n/sqrt(n) converges in distribution to F(t) = 1 - exp(-t^2/2),
whose moments have a closed double-factorial form; these are the comparison
targets for the empirical orbit-length statistics.
"""

import math

# Direct product evaluation is exact enough below this many factors; longer
# products switch to log-space to dodge underflow.
_LOG_SPACE_FACTORS = 10_000


def _no_repeat_prob(n: int, k: int) -> float:
    """Probability that k uniform draws from {1..n} are all distinct,
    i.e. prod_{j=1}^{k-1} (n - j)/n."""
    if k > n:
        return 0.0
    if k <= _LOG_SPACE_FACTORS:
        return math.prod((n - j) / n for j in range(1, k))
    return math.exp(math.fsum(math.log1p(-j / n) for j in range(1, k)))


def collision_prob(k: int, p: int) -> float:
    """Probability that k+1 values drawn uniformly from a p-element set are
    not all distinct: 1 - prod_{j=1}^{k}(p - j)/p, evaluated as the product
    (never via factorials).  Returns exactly 1 for k >= p (pigeonhole).

    k counts draws past the first, so the classic two-people-in-23 crossover
    sits at k = 22.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= p:
        return 1.0
    return 1.0 - _no_repeat_prob(p, k + 1)


def tail_prob(n: int, k: int) -> float:
    """P(X_n > k) = prod_{j=1}^{k-1} (1 - j/n); 1 for k <= 1, 0 for k > n+1
    (X_n is supported on {2, ..., n+1})."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k <= 1:
        return 1.0
    if k > n + 1:
        return 0.0
    return _no_repeat_prob(n, k)


def exact_moment(n: int, r: int) -> float:
    """E[(X_n/sqrt(n))**r] by direct summation over the support.

    P(X_n = k) = P(X_n > k-1) - P(X_n > k); terms are added in ascending k.
    Linear in n (the tail underflows to exactly 0 long before k = n+1, after
    which every remaining term is a float-exact zero).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= r <= 4:
        raise ValueError("r must be in 1..4")
    if n > 10 ** 8:
        raise ValueError("n capped at 10**8 (verification-oracle use only)")
    sqrt_n = math.sqrt(n)
    total = 0.0
    prev = 1.0  # P(X_n > 1)
    for k in range(2, n + 2):
        cur = prev * ((n - (k - 1)) / n)  # P(X_n > k), same factors as tail_prob
        total += (k / sqrt_n) ** r * (prev - cur)
        if cur == 0.0:
            break
        prev = cur
    return total


def limit_cdf(t: float) -> float:
    """F(t) = 1 - exp(-t**2/2) for t >= 0, else 0."""
    if t < 0:
        return 0.0
    return -math.expm1(-0.5 * t * t)


def limit_pdf(t: float) -> float:
    """F'(t) = t*exp(-t**2/2) for t >= 0, else 0."""
    if t < 0:
        return 0.0
    return t * math.exp(-0.5 * t * t)


def limit_moment(r: int) -> float:
    """r-th moment of the limit law: the double-factorial descent
    r(r-2)...2 for even r, and r(r-2)...1 * sqrt(pi/2) for odd r."""
    if r < 1:
        raise ValueError("r must be >= 1")
    acc = math.sqrt(math.pi / 2.0) if r % 2 else 1.0
    while r >= 2:
        acc *= r
        r -= 2
    return acc


def sample_collision_time(n: int, rng) -> int:
    """Draw uniformly from {1..n} until a repeat; returns the number of draws
    (between 2 and n+1).  rng is a numpy Generator owned by the caller."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seen = set()
    draws = 0
    while True:
        draws += 1
        v = int(rng.integers(1, n + 1))
        if v in seen:
            return draws
        seen.add(v)
