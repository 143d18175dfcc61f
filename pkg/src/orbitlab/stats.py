"""Streaming statistics over orbit records: moments, zero-hit counts, G(x),
histograms, and cross-pair deviation reports.

Reproducibility contract: power sums are kept per chunk (a chunk is a
contiguous prime interval, sealed by close_chunk or add_chunk), each chunk is
a left fold of its terms in ascending p, and totals fold the chunk sums in
ascending order.  Two accumulations that seal chunks at the same bounds are
bitwise identical however the work was split, which is what makes threaded
and resumed sweeps reproduce serial ones exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import birthday
from ._kernels import term_powers
from .primes import SEGMENT_SIZE, iter_prime_ranges
from .orbits import OrbitRecord


class MomentAccumulator:
    """Running sums of (m_p/sqrt(p))**r for r = 1..4 plus zero-hit counts.

    Records must arrive in strictly ascending p.  Chunks sealed at matching
    bounds make accumulate/merge bitwise-reproducible (see module docstring).
    """

    def __init__(self):
        self._chunk_bounds = []  # ascending hi bounds of sealed chunks
        self._chunk_sums = []    # float64[4] per sealed chunk
        self._open = np.zeros(4, dtype=np.float64)
        self._open_terms = 0
        self.count = 0
        self.q_count = 0
        self.last_prime = 0

    def accumulate(self, rec: OrbitRecord) -> "MomentAccumulator":
        """Consume one record; raises on out-of-order primes."""
        if rec.p <= self.last_prime:
            raise ValueError(f"out-of-order prime {rec.p} (last was {self.last_prime})")
        if self._chunk_bounds and rec.p < self._chunk_bounds[-1]:
            raise ValueError(f"prime {rec.p} falls inside an already-sealed chunk")
        t1, t2, t3, t4 = term_powers(rec.m, rec.p)
        self._open[0] += t1
        self._open[1] += t2
        self._open[2] += t3
        self._open[3] += t4
        self._open_terms += 1
        self.count += 1
        self.q_count += bool(rec.zero_hit)
        self.last_prime = rec.p
        return self

    def close_chunk(self, bound: int):
        """Seal everything accumulated so far at the exclusive bound."""
        if bound <= self.last_prime:
            raise ValueError("chunk bound must exceed the last consumed prime")
        if self._chunk_bounds and bound <= self._chunk_bounds[-1]:
            raise ValueError("chunk bounds must be ascending")
        if self._open_terms:
            self._chunk_bounds.append(bound)
            self._chunk_sums.append(self._open.copy())
            self._open[:] = 0.0
            self._open_terms = 0

    def add_chunk(self, bound: int, sums, count: int, q_count: int, last_prime: int):
        """Append a pre-reduced chunk (the per-range kernel partial)."""
        if self._open_terms:
            raise ValueError("seal open records before appending chunks")
        if self._chunk_bounds and bound <= self._chunk_bounds[-1]:
            raise ValueError("chunk bounds must be ascending")
        if last_prime <= self.last_prime and count:
            raise ValueError("chunk overlaps already-consumed primes")
        if count:
            self._chunk_bounds.append(bound)
            self._chunk_sums.append(np.asarray(sums, dtype=np.float64).copy())
            self.count += count
            self.q_count += q_count
            self.last_prime = last_prime

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Append a later-range accumulator; both must be sealed."""
        if self._open_terms or other._open_terms:
            raise ValueError("merge requires both accumulators sealed (close_chunk first)")
        if other._chunk_bounds and self._chunk_bounds:
            if other.count and self.count and other._first_prime_bound() < self._chunk_bounds[-1]:
                raise ValueError("merge requires disjoint ascending ranges")
        for bound, sums in zip(other._chunk_bounds, other._chunk_sums):
            if self._chunk_bounds and bound <= self._chunk_bounds[-1]:
                raise ValueError("merge requires disjoint ascending ranges")
            self._chunk_bounds.append(bound)
            self._chunk_sums.append(sums.copy())
        self.count += other.count
        self.q_count += other.q_count
        self.last_prime = max(self.last_prime, other.last_prime)
        return self

    def _first_prime_bound(self) -> int:
        return self._chunk_bounds[0] if self._chunk_bounds else 0

    def power_sums(self) -> np.ndarray:
        """Fold sealed chunks in ascending order, then the open partial."""
        total = np.zeros(4, dtype=np.float64)
        for sums in self._chunk_sums:
            total += sums
        total += self._open
        return total


@dataclass(frozen=True)
class CheckpointStats:
    """Aggregates for one (c, alpha) at prime bound x."""

    x: int
    prime_count: int
    M: tuple
    q_count: int
    q_scaled: float
    g_of_x: float


def q_scaled_value(q_count: int, x: int) -> float:
    """|Q(x)| * ln(x) / sqrt(x), with a fixed operation order."""
    return q_count * math.log(x) / math.sqrt(x)


def checkpoint(acc: MomentAccumulator, x: int, g: float) -> CheckpointStats:
    """Snapshot the accumulator at bound x; the accumulator is unchanged."""
    if acc.count == 0:
        raise ValueError("cannot checkpoint an empty accumulator")
    if acc.last_prime > x:
        raise ValueError(f"accumulator has consumed primes beyond x={x}")
    sums = acc.power_sums()
    m = tuple(float(s) / acc.count for s in sums)
    return CheckpointStats(
        x=x,
        prime_count=acc.count,
        M=m,
        q_count=acc.q_count,
        q_scaled=q_scaled_value(acc.q_count, x),
        g_of_x=g,
    )


def g_value(x: int, inv_sqrt_sum: float) -> float:
    """(ln x / sqrt x) * sqrt(pi/2) * sum_{p<=x} 1/sqrt(p), fixed op order."""
    return math.log(x) / math.sqrt(x) * math.sqrt(math.pi / 2.0) * inv_sqrt_sum


def inv_sqrt_sum(primes) -> float:
    """sum 1/sqrt(p) over one ascending prime array."""
    return float(np.sum(1.0 / np.sqrt(np.asarray(primes, dtype=np.float64))))


def compute_G(x: int, primes=None) -> float:
    """The partial-sum proxy G(x) for sqrt(2*pi).

    primes may be an iterable of the primes <= x (ints, arrays, or objects
    with a .primes array, consumed in ascending order); when omitted they are
    sieved internally.
    """
    if x < 2:
        raise ValueError("x must be >= 2 (no primes otherwise)")
    if primes is None:
        bounds = list(range(0, x + 1, SEGMENT_SIZE)) + [x + 1]
        primes = iter_prime_ranges(sorted(set(bounds)))
    total = 0.0
    scalars = []
    for item in primes:
        if isinstance(item, (int, np.integer)):
            scalars.append(item)
        else:
            arr = getattr(item, "primes", item)
            total += inv_sqrt_sum(arr)
    if scalars:
        total += inv_sqrt_sum(np.asarray(scalars))
    return g_value(x, total)


def g_series(checkpoints) -> dict:
    """G(x) at each checkpoint from a single ascending sieve sweep."""
    xs = sorted(set(int(x) for x in checkpoints))
    if not xs or xs[0] < 2:
        raise ValueError("checkpoints must be >= 2")
    bounds = sorted({0, xs[-1] + 1}
                    | {x + 1 for x in xs}
                    | set(range(0, xs[-1] + 1, SEGMENT_SIZE)))
    out = {}
    total = 0.0
    pending = iter(xs)
    nxt = next(pending)
    for prange in iter_prime_ranges(bounds):
        total += inv_sqrt_sum(prange.primes)
        while nxt is not None and prange.hi == nxt + 1:
            out[nxt] = g_value(nxt, total)
            nxt = next(pending, None)
    return out


@dataclass(frozen=True)
class Histogram:
    """Binned empirical density of m_p/sqrt(p): bin k covers [w*k, w*(k+1))."""

    w: float
    t_max: float
    counts: np.ndarray = field(repr=False)
    total_primes: int
    x: int

    @property
    def bins(self) -> np.ndarray:
        """Density values: counts / (w * total_primes)."""
        return self.counts / (self.w * self.total_primes)

    @property
    def edges(self) -> np.ndarray:
        return np.arange(len(self.counts) + 1) * self.w


DEFAULT_HIST_W = 5.6 / 800
DEFAULT_HIST_TMAX = 5.6


def hist_bin_count(w: float, t_max: float) -> int:
    return int(round(t_max / w))


def hist_bin_index(ratio: float, w: float) -> int:
    """Must match the kernel's binning bit-for-bit: truncate ratio/w."""
    return int(ratio / w)


def build_histogram(records, w: float = DEFAULT_HIST_W,
                    t_max: float = DEFAULT_HIST_TMAX, x: int = 0) -> Histogram:
    """Bin a record stream; ratios at or above t_max are left unbinned and
    show up only through total_primes (the mass identity then reads
    sum(bins)*w == binned/total)."""
    if w <= 0 or t_max <= 0:
        raise ValueError("w and t_max must be positive")
    nbins = hist_bin_count(w, t_max)
    counts = np.zeros(nbins, dtype=np.int64)
    total = 0
    max_p = 0
    for rec in records:
        ratio = rec.m / math.sqrt(rec.p)
        k = hist_bin_index(ratio, w)
        if k < nbins:
            counts[k] += 1
        total += 1
        max_p = max(max_p, rec.p)
    return Histogram(w=w, t_max=t_max, counts=counts,
                     total_primes=total, x=x or max_p)


@dataclass(frozen=True)
class ReportRow:
    label: str
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class DeviationReport:
    """Cross-pair spread of the moments and the scaled zero-hit counts at one
    bound, with distances from the conjectured limits."""

    x: int
    rows: tuple            # ReportRow per metric, in fixed order
    g_of_x: float
    g_abs_err: float       # |G(x) - mean q_scaled|


def _row(label: str, values: np.ndarray) -> ReportRow:
    mean = float(values.mean())
    return ReportRow(label=label,
                     mean=mean,
                     std=float(np.sqrt(np.mean((values - mean) ** 2))),
                     min=float(values.min()),
                     max=float(values.max()))


def deviation_report(stats: list) -> DeviationReport:
    """Aggregate per-pair CheckpointStats (all at the same x).

    Standard deviations are population (divide by n).  For each moment order
    the report carries both the M_r spread and the spread of the absolute
    distance |mu_r - M_r| from the limiting moment.
    """
    if not stats:
        raise ValueError("need at least one pair")
    x = stats[0].x
    if any(s.x != x for s in stats):
        raise ValueError("all stats must share the same x")
    rows = []
    for r in range(1, 5):
        vals = np.array([s.M[r - 1] for s in stats], dtype=np.float64)
        rows.append(_row(f"M{r}", vals))
        mu = birthday.limit_moment(r)
        rows.append(_row(f"|mu{r}-M{r}|", np.abs(mu - vals)))
    q_vals = np.array([s.q_scaled for s in stats], dtype=np.float64)
    rows.append(_row("q_scaled", q_vals))
    g = stats[0].g_of_x
    return DeviationReport(x=x, rows=tuple(rows), g_of_x=g,
                           g_abs_err=abs(g - float(q_vals.mean())))
