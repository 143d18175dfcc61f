import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitlab._kernels import PairWorker, orbit_batch
from orbitlab.orbits import OrbitRecord, iterate_once, orbit_stats, orbit_stats_oracle
from orbitlab.primes import sieve_range

PRIMES_1K = [int(p) for p in sieve_range(0, 1000).primes]


@pytest.mark.parametrize("z,c,p,expected", [(3, 1, 7, 3), (0, 0, 5, 0), (2, 1, 5, 0)])
def test_iterate_once(z, c, p, expected):
    assert iterate_once(z, c, p) == expected


@pytest.mark.parametrize("c,alpha,p,m,tail,cycle,zero", [
    (1, 3, 5, 4, 1, 3, True),    # 3 -> 0 -> 1 -> 2 -> 0
    (1, 3, 7, 1, 0, 1, False),   # 3 is a fixed point mod 7
    (1, 2, 7, 2, 1, 1, False),   # 2 -> 5 -> 5
    (1, 1, 2, 2, 0, 2, True),    # 1 -> 0 -> 1
])
def test_known_orbits(c, alpha, p, m, tail, cycle, zero):
    for fn in (orbit_stats, orbit_stats_oracle):
        rec = fn(c, alpha, p)
        assert (rec.m, rec.tail, rec.cycle, rec.zero_hit) == (m, tail, cycle, zero)


@pytest.mark.parametrize("p", [0, 1])
def test_invalid_modulus(p):
    with pytest.raises(ValueError):
        orbit_stats(1, 3, p)
    with pytest.raises(ValueError):
        orbit_stats_oracle(1, 3, p)


def test_record_validates_primality():
    with pytest.raises(ValueError):
        OrbitRecord(p=4, m=2, tail=1, cycle=1, zero_hit=False)


def test_record_validates_decomposition():
    with pytest.raises(ValueError):
        OrbitRecord(p=5, m=3, tail=1, cycle=1, zero_hit=False)


@given(st.integers(-50, 50), st.integers(-50, 50), st.sampled_from(PRIMES_1K))
@settings(max_examples=300, deadline=None)
def test_matches_oracle(c, alpha, p):
    assert orbit_stats(c, alpha, p) == orbit_stats_oracle(c, alpha, p)


@given(st.integers(-100, 100), st.integers(-100, 100), st.sampled_from(PRIMES_1K))
@settings(max_examples=100, deadline=None)
def test_translation_by_p_invariance(c, alpha, p):
    assert orbit_stats(c, alpha, p) == orbit_stats(c + p, alpha + p, p)


@given(st.integers(-100, 100), st.integers(-100, 100), st.sampled_from(PRIMES_1K))
@settings(max_examples=100, deadline=None)
def test_negated_seed(c, alpha, p):
    # f(alpha) == f(-alpha), so the orbits agree from step 1 onward and the
    # sizes differ by at most the first element.
    a = orbit_stats(c, alpha, p)
    b = orbit_stats(c, -alpha, p)
    assert abs(a.m - b.m) <= 1
    assert a.zero_hit == b.zero_hit
    z1 = iterate_once(alpha % p, c % p, p)
    z1_neg = iterate_once((-alpha) % p, c % p, p)
    assert z1 == z1_neg


@given(st.integers(-100, 100), st.integers(-100, 100), st.sampled_from(PRIMES_1K))
@settings(max_examples=100, deadline=None)
def test_orbit_size_bounds(c, alpha, p):
    rec = orbit_stats(c, alpha, p)
    assert 1 <= rec.m <= p


def test_kernel_agrees_with_orbit_stats():
    primes = sieve_range(0, 2000).primes
    for c, alpha in [(1, 3), (-1, 2), (3, 7), (-3, 9), (2, 1), (-17, 23)]:
        m, tail, cycle, zero = orbit_batch(c, alpha, primes)
        for i, p in enumerate(primes):
            rec = orbit_stats(c, alpha, int(p))
            assert (rec.m, rec.tail, rec.cycle, rec.zero_hit) == \
                (m[i], tail[i], cycle[i], bool(zero[i]))


def test_kernel_large_prime():
    p = 4294967291  # largest prime below 2**32
    m, tail, cycle, zero = orbit_batch(1, 3, np.array([p], dtype=np.uint64))
    assert 1 <= m[0] <= p
    assert m[0] == tail[0] + cycle[0]


def test_kernel_table_growth():
    # Tiny initial table forces the growth path; results must be unaffected.
    primes = sieve_range(1000, 3000).primes.astype(np.uint64)
    small = PairWorker(table_bits=4)
    sums_a = np.zeros(4)
    counts_a = np.zeros(2, np.int64)
    small.run_range(primes, 1, 3, sums_a, counts_a)
    big = PairWorker(table_bits=16)
    sums_b = np.zeros(4)
    counts_b = np.zeros(2, np.int64)
    big.run_range(primes, 1, 3, sums_b, counts_b)
    assert sums_a.tolist() == sums_b.tolist()
    assert counts_a.tolist() == counts_b.tolist()
