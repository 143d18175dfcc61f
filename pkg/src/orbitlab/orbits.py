"""Orbit structure of z -> z**2 + c modulo a single prime.

The iterate sequence z_0 = alpha, z_{n+1} = z_n**2 + c (mod p) is eventually
periodic: a tail of `tail` pre-periodic residues followed by a cycle of length
`cycle`.  The orbit size m = tail + cycle counts the distinct residues visited.
"""

from dataclasses import dataclass

from .primes import is_prime


@dataclass(frozen=True)
class OrbitRecord:
    """Per-prime orbit summary for one (c, alpha) pair."""

    p: int
    m: int
    tail: int
    cycle: int
    zero_hit: bool

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if not (self.cycle >= 1 and self.tail >= 0 and self.m == self.tail + self.cycle):
            raise ValueError(f"inconsistent orbit decomposition m={self.m}, tail={self.tail}, cycle={self.cycle}")
        if not 1 <= self.m <= self.p:
            raise ValueError(f"orbit size {self.m} outside [1, {self.p}]")


def iterate_once(z: int, c: int, p: int) -> int:
    """One step (z**2 + c) mod p for reduced residues z, c."""
    if not (0 <= z < p and 0 <= c < p):
        raise ValueError("z and c must be reduced modulo p")
    return (z * z + c) % p


def orbit_stats(c: int, alpha: int, p: int) -> OrbitRecord:
    """Orbit summary by a single forward pass over the iterates.

    Visited residues are stored with their step index; the first revisit of a
    residue first seen at step j, happening at step n, gives tail = j,
    cycle = n - j, m = n.  zero_hit records whether 0 is ever an iterate,
    including the n = 0 case p | alpha.

    c and alpha may be any integers (reduced mod p internally); p is trusted
    to be prime by contract with the caller.
    """
    if p < 2:
        raise ValueError(f"invalid modulus p={p}")
    c %= p
    z = alpha % p
    seen = {}
    step = 0
    zero_hit = False
    while z not in seen:
        seen[z] = step
        if z == 0:
            zero_hit = True
        z = (z * z + c) % p
        step += 1
    tail = seen[z]
    return OrbitRecord(p=p, m=step, tail=tail, cycle=step - tail, zero_hit=zero_hit)


def orbit_stats_oracle(c: int, alpha: int, p: int) -> OrbitRecord:
    """Same contract as orbit_stats, by brute force over a plain list.

    Quadratic in the orbit size; intended for p <= 10**4 as an independent
    cross-check of orbit_stats.
    """
    if p < 2:
        raise ValueError(f"invalid modulus p={p}")
    c %= p
    z = alpha % p
    trajectory = []
    while z not in trajectory:
        trajectory.append(z)
        z = (z * z + c) % p
    tail = trajectory.index(z)
    m = len(trajectory)
    return OrbitRecord(p=p, m=m, tail=tail, cycle=m - tail, zero_hit=0 in trajectory)
