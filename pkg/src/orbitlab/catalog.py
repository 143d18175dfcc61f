"""Map/seed pairs, finite-orbit classification, and the default study grid.

A pair (c, alpha) has a finite orbit over the integers exactly when one of
three algebraic conditions holds; such pairs (and c in {0, -2}, where orbit
lengths grow on a different scale) are excluded from the statistical sweeps.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MapSeed:
    """The map z -> z**2 + c together with its starting integer alpha."""

    c: int
    alpha: int


@dataclass(frozen=True)
class ClassificationFlags:
    finite_case_i: bool
    finite_case_ii: bool
    finite_case_iii: bool
    excluded_c: bool
    zero_preimage: bool

    @property
    def finite(self) -> bool:
        return self.finite_case_i or self.finite_case_ii or self.finite_case_iii

    @property
    def eligible(self) -> bool:
        """Safe for the orbit-length statistics (moment sweeps)."""
        return not (self.finite or self.excluded_c)

    @property
    def eligible_zero_count(self) -> bool:
        """Additionally safe for the zero-hit prime counts."""
        return self.eligible and not self.zero_preimage

    def triggered(self) -> list:
        return [name for name in ("finite_case_i", "finite_case_ii",
                                  "finite_case_iii", "excluded_c", "zero_preimage")
                if getattr(self, name)]


def _root_candidates(disc: int) -> set:
    """Integer values of +-(1 +- sqrt(disc))/2, empty unless disc is a
    non-negative perfect square giving integral candidates."""
    if disc < 0:
        return set()
    s = math.isqrt(disc)
    if s * s != disc:
        return set()
    out = set()
    for num in (1 + s, 1 - s):
        if num % 2 == 0:
            out.update((num // 2, -(num // 2)))
    return out


def classify(seed: MapSeed) -> ClassificationFlags:
    """Flag every exclusion condition the pair triggers.

    Cases (i)/(ii) are decided with integer square roots, never floats, so
    the test is exact for arbitrarily large |c|.
    """
    c, alpha = seed.c, seed.alpha
    return ClassificationFlags(
        finite_case_i=alpha in _root_candidates(1 - 4 * c),
        finite_case_ii=alpha in _root_candidates(-3 - 4 * c),
        finite_case_iii=alpha in (0, 1, -1) and c in (0, -1, -2),
        excluded_c=c in (0, -2),
        zero_preimage=alpha * alpha == -c,
    )


def finite_orbit_oracle(seed: MapSeed) -> bool:
    """Brute-force finiteness check by direct integer iteration.

    Iterates with exact integer arithmetic until a value repeats (finite) or
    leaves [-B, B] with B = max(|alpha|, |c|) + 2 (infinite: once |z| > B,
    |z**2 + c| > |z| and the iterates escape monotonically).
    """
    c, alpha = seed.c, seed.alpha
    bound = max(abs(alpha), abs(c)) + 2
    seen = set()
    z = alpha
    while z not in seen:
        if abs(z) > bound:
            return False
        seen.add(z)
        z = z * z + c
    return True


def default_grid() -> list:
    """The 42-pair study grid: c in {1, -1, 2, 3, -3} x alpha in 1..9, minus
    the three finite-orbit pairs (-3, 1), (-3, 2), (-1, 1)."""
    grid = [MapSeed(c, a)
            for c in (1, -1, 2, 3, -3)
            for a in range(1, 10)]
    return [s for s in grid if not classify(s).finite]


def parse_grid_spec(c_spec: str, alpha_spec: str) -> list:
    """Cross product of two integer list specs, e.g. c='1,-1,2,3,-3' and
    alpha='1..9' (comma-separated values and lo..hi ranges may be mixed)."""
    return [MapSeed(c, a)
            for c in _parse_int_list(c_spec)
            for a in _parse_int_list(alpha_spec)]


def _parse_int_list(spec: str) -> list:
    out = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo_s, hi_s = part.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError(f"no integers in spec {spec!r}")
    return out
