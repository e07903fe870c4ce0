import math

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from qeq import arith
from qeq.errors import InvalidInput, ScaleGuardExceeded


def _naive_primes(lo, hi):
    return [n for n in range(max(lo, 2), hi + 1) if all(n % d for d in range(2, math.isqrt(n) + 1))]


@pytest.mark.parametrize("lo, hi", [(1, 1), (2, 10), (90, 100), (1, 1000), (10**6, 10**6 + 500), (24, 28)])
def test_primes_between(lo, hi):
    assert list(arith.primes_between(lo, hi)) == _naive_primes(lo, hi)


def test_primes_near_1e8():
    got = arith.primes_between(10**8, 10**8 + 1000)
    assert list(got) == list(sympy.primerange(10**8, 10**8 + 1001))
    assert len(got) == 54


def test_segment_cap():
    with pytest.raises(ScaleGuardExceeded):
        arith.prime_flags(1, arith.SEGMENT_CAP + 10)
    with pytest.raises(InvalidInput):
        arith.prime_flags(10, 5)


@given(st.integers(1, 10**7))
def test_factorize_against_sympy(n):
    assert dict(arith.factorize(n)) == sympy.factorint(n)


@given(st.integers(1, 5000))
def test_scalar_functions(n):
    assert arith.tau_k(n) == sympy.divisor_count(n)
    assert arith.euler_phi(n) == sympy.totient(n)
    assert arith.mobius(n) == sympy.mobius(n)
    f = sympy.factorint(n)
    lam = math.log(next(iter(f))) if len(f) == 1 else 0.0
    assert arith.mangoldt(n) == pytest.approx(lam)
    sp = arith.square_part(n)
    assert sp.n == n and sp.s * sp.r**2 == n and sympy.ntheory.factor_.core(sp.s) == sp.s


def test_tau3_brute():
    for n in range(1, 200):
        brute = sum(1 for a in range(1, n + 1) for b in range(1, n + 1) if n % (a * b) == 0)
        assert arith.tau_k(n, 3) == brute
    assert arith.tau_k(12) == 6 and arith.tau_k(4, 3) == 6


def test_segments_match_scalar():
    lo, hi = 9000, 11000
    ns = range(lo, hi + 1)
    assert np.allclose(arith.mangoldt_segment(lo, hi), [arith.mangoldt(n) for n in ns])
    assert list(arith.tau_k_segment(lo, hi, 3)) == [arith.tau_k(n, 3) for n in ns]
    assert list(arith.phi_segment(lo, hi)) == [arith.euler_phi(n) for n in ns]
    r, s = arith.square_part_segment(lo, hi)
    assert list(s) == [arith.square_part(n).s for n in ns]
    assert list(r) == [arith.square_part(n).r for n in ns]
    assert list(arith.mobius_segment(300)[1:]) == [sympy.mobius(n) for n in range(1, 301)]


def test_sieve_tables():
    t = arith.sieve_segment(100, 200)
    assert list(t.primes()) == _naive_primes(100, 200)
    assert t.lpf(143) == 11
    assert t.factor(360) == [(2, 3), (3, 2), (5, 1)]


@given(st.integers(0, 2**64))
def test_is_prime(n):
    assert arith.is_prime(n) == sympy.isprime(n)


def test_chebyshev_psi():
    assert arith.chebyshev_psi(10) == pytest.approx(math.log(2 * 2 * 2 * 3 * 3 * 5 * 7))
    assert arith.chebyshev_psi(10, 4, 1) == pytest.approx(math.log(5 * 3))
    lam = [arith.mangoldt(n) for n in range(1, 2001)]
    for d, a in [(3, 1), (7, 2), (16, 1), (1, 0)]:
        brute = math.fsum(lam[n - 1] for n in range(1, 2001) if n % d == a % d)
        assert arith.chebyshev_psi(2000, d, a) == pytest.approx(brute, rel=1e-14)


def test_divisor_sum():
    assert sum(arith.tau_k(n) for n in range(1, 101)) == 482
    m = arith.tau_moment_check(10**4, 2, 1)
    assert m.total == sum(arith.tau_k(n) for n in range(1, 10**4 + 1))
    assert m.ratio == m.total / (10**4 * math.log(10**4))
    m2 = arith.tau_moment_check(2000, 2, 2)
    assert m2.total == sum(arith.tau_k(n) ** 2 for n in range(1, 2001))


def test_sieve_cache_roundtrip(tmp_path):
    path = tmp_path / "p.qesv"
    first = arith.primes_between(1000, 5000, path)
    assert path.exists()
    lo, hi, flags = arith.load_sieve_cache(path)
    assert (lo, hi) == (1000, 5000)
    assert list(np.flatnonzero(flags) + lo) == list(first)
    # a sub-range is served from the file
    assert list(arith.primes_between(2000, 3000, path)) == _naive_primes(2000, 3000)
    raw = path.read_bytes()
    assert raw[:4] == b"QESV"


def test_sieve_cache_rejects_corruption(tmp_path):
    path = tmp_path / "p.qesv"
    arith.save_sieve_cache(path, 10, 100)
    data = bytearray(path.read_bytes())
    data[0:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(InvalidInput):
        arith.load_sieve_cache(path)
    arith.save_sieve_cache(path, 10, 100)
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(InvalidInput):
        arith.load_sieve_cache(path)
