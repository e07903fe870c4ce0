import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from qeq import arith
from qeq.bump import build_bump, eval_bump
from qeq.counting import (
    ZETA2,
    GammaReport,
    QuadraticForm,
    Witness,
    equidist_histogram,
    gamma1_gamma3,
    gamma2,
    gamma_count,
    hl_density,
    kronecker_symbol,
    singular_series,
)
from qeq.errors import InvalidForm, InvalidInput, ScaleGuardExceeded

mpmath.mp.prec = 200
SQRT2 = mpmath.sqrt(2)


def _norm(x):
    x = x - mpmath.floor(x)
    return min(x, 1 - x)


def _square_free_part(n):
    return math.prod(p for p, e in sympy.factorint(n).items() if e % 2)


def _gamma_brute(x, alpha, theta, eta):
    e = 2 / 3 + 4 * theta + eta
    count = 0
    for p in sympy.primerange(x + 1, 2 * x + 1):
        s = _square_free_part(p - 1)
        if math.log(s) <= e * math.log(p) and _norm(alpha * p) < mpmath.mpf(p) ** (-theta):
            count += 1
    return count


def test_gamma_count_brute():
    theta, eta = 1 / 108 - 0.002, 0.016
    rep = gamma_count(20000, "sqrt:2", 0, theta, eta)
    assert rep.gamma == _gamma_brute(20000, SQRT2, theta, eta)
    assert rep.gamma > 0


def test_gamma_count_vacuous_norm():
    x, eta = 5000, 0.01
    rep = gamma_count(x, "sqrt:3", 0, 1e-15, eta)
    e = 2 / 3 + 4e-15 + eta
    only_sq = sum(
        1 for p in sympy.primerange(x + 1, 2 * x + 1) if math.log(_square_free_part(p - 1)) <= e * math.log(p)
    )
    assert rep.gamma == only_sq


def test_gamma_count_trivial():
    rep = gamma_count(1, "phi", 0, 0.005, 0.01)
    assert rep.gamma == 0 and rep.witnesses == ()
    with pytest.raises(InvalidInput):
        gamma_count(1000, "phi", 0, 0.02, 0.01)
    with pytest.raises(InvalidInput):
        gamma_count(1000, "phi", 0, 0.005, 0)


def test_gamma_count_monotone_in_theta():
    # hold the square-part exponent 2/3 + 4 theta + eta fixed so only the norm threshold moves
    budget = 0.056
    thetas = (0.009, 0.006, 0.003, 0.001)
    counts = [gamma_count(30000, "sqrt:5", Fraction(1, 7), t, budget - 4 * t).gamma for t in thetas]
    assert counts == sorted(counts)


def test_witnesses_recheck_independently():
    theta, eta = 0.007, 0.016
    rep = gamma_count(10**5, "sqrt:2", 0, theta, eta, max_witnesses=50)
    assert len(rep.witnesses) == min(50, rep.gamma)
    for w in rep.witnesses:
        assert sympy.isprime(w.p)
        assert w.p == w.a * w.r**2 + 1
        assert _square_free_part(w.p - 1) == w.a
        assert _norm(SQRT2 * w.p) < mpmath.mpf(w.p) ** (-theta)


def test_report_rejects_bad_witness():
    good = Witness(101, 1, 10, 0.01)
    GammaReport(100, 2.0, 0.005, 0.01, 1, 1.0, (good,))
    with pytest.raises(ValueError):
        GammaReport(100, 2.0, 0.005, 0.01, 1, 1.0, (Witness(103, 1, 10, 0.01),))
    with pytest.raises(ValueError):
        GammaReport(100, 2.0, 0.005, 0.01, 0, 1.0, (good,))
    with pytest.raises(ValueError):
        GammaReport(100, 2.0, 0.005, 0.01, 1, 1.0, (Witness(101, 1, 10, 0.99),))


def _gamma2_sieve(x, y):
    lam = [arith.mangoldt(n) for n in range(x + 1, 2 * x + 1)]
    terms = []
    for r in range(math.floor(y) + 1, math.floor(2 * y) + 1):
        for i, n in enumerate(range(x + 1, 2 * x + 1)):
            if (n - 1) % (r * r) == 0:
                terms.append(lam[i])
    return math.fsum(terms)


@pytest.mark.parametrize("x, y", [(10**4, 3), (3 * 10**4, 7.5), (5000, 2)])
def test_gamma2_two_ways(x, y):
    assert gamma2(x, y).gamma2 == _gamma2_sieve(x, y)


def test_gamma2_modulus_one():
    x = 10**5
    rep = gamma2(x, 0.5)
    assert rep.gamma2 == pytest.approx(arith.chebyshev_psi(2 * x) - arith.chebyshev_psi(x), rel=1e-13)


def test_gamma2_constants():
    assert 1 / (2 * ZETA2) == pytest.approx(0.3039636, abs=1e-7)
    rep = gamma2(10**5, 4)
    assert rep.main_term == 10**5 / (2 * ZETA2 * 4)
    assert rep.pnt_prediction == pytest.approx(sum(10**5 / sympy.totient(r * r) for r in range(5, 9)))
    with pytest.raises(InvalidInput):
        gamma2(100, 11)


def _fourier_brute(x, y, theta, alpha, beta):
    delta = x ** (-theta)
    chi = build_bump(delta, x)
    g1, g3 = mpmath.mpf(0), mpmath.mpf(0)
    rs = range(math.floor(y) + 1, math.floor(2 * y) + 1)
    for n in range(x + 1, 2 * x + 1):
        c = sum(1 for r in rs if (n - 1) % (r * r) == 0)
        lam = arith.mangoldt(n)
        if not c or not lam:
            continue
        t = alpha * n + beta
        g1 += lam * c * eval_bump(chi, float(t - mpmath.floor(t)))
        ks = np.arange(1, chi.K + 1)
        phases = np.array([float(k * t - mpmath.floor(k * t)) for k in range(1, chi.K + 1)])
        g3 += 2 * lam * c * math.fsum(chi.coeffs(ks) * np.cos(2 * np.pi * phases))
    return float(g1), float(g3 / delta)


def test_fourier_identity_brute():
    x, y, theta = 10**5, 2, 0.005
    f = gamma1_gamma3(x, y, theta, "sqrt:2", Fraction(1, 5))
    g1, g3 = _fourier_brute(x, y, theta, SQRT2, mpmath.mpf(1) / 5)
    assert f.gamma1 == pytest.approx(g1, rel=1e-12)
    assert f.gamma3 == pytest.approx(g3, rel=1e-9, abs=1e-9)
    assert f.gamma2 == gamma2(x, y).gamma2
    assert f.identity_residual <= f.residual_bound


def test_fourier_beta_periodic():
    a = gamma1_gamma3(10**5, 3, 0.005, "phi", Fraction(1, 3))
    b = gamma1_gamma3(10**5, 3, 0.005, "phi", Fraction(4, 3))
    assert (a.gamma1, a.gamma3) == (b.gamma1, b.gamma3)


def test_fourier_threads_identical():
    a = gamma1_gamma3(10**5, 3, 0.005, "sqrt:2", 0, threads=1)
    b = gamma1_gamma3(10**5, 3, 0.005, "sqrt:2", 0, threads=4)
    assert a == b


def test_fourier_guard():
    with pytest.raises(ScaleGuardExceeded):
        gamma1_gamma3(10**7 + 1, 3, 0.005, "phi", 0)
    with pytest.raises(InvalidInput):
        gamma1_gamma3(10**4, 3, 0.01, "phi", 0)


def test_quadratic_form_hypotheses():
    with pytest.raises(InvalidForm, match="perfect square"):
        QuadraticForm(1, 3, 2)
    with pytest.raises(InvalidForm, match="gcd"):
        QuadraticForm(2, 4, 6)
    with pytest.raises(InvalidForm, match="positive"):
        QuadraticForm(-1, 0, 1)
    with pytest.raises(InvalidForm, match="both be even"):
        QuadraticForm(1, 1, 2)
    assert QuadraticForm(1, 0, 1).D == -4


def _qr_table(p):
    return {(k * k) % p for k in range(1, p)}


def test_kronecker_brute():
    for p in sympy.primerange(3, 200):
        qr = _qr_table(p)
        for D in range(-50, 51):
            expected = 0 if D % p == 0 else (1 if D % p in qr else -1)
            assert kronecker_symbol(D, p) == expected
    assert kronecker_symbol(-4, 5) == 1
    assert kronecker_symbol(1, 7) == 1
    with pytest.raises(InvalidInput):
        kronecker_symbol(3, 2)


def test_singular_series_n2_plus_1():
    assert singular_series(QuadraticForm(1, 0, 1), 10**6) == pytest.approx(1.3728, abs=5e-4)


@pytest.mark.parametrize("abc", [(1, 0, 1), (1, 1, 1), (2, 1, 1), (3, 2, 1), (2, 0, 1)])
def test_hl_empirical_brute(abc):
    f = QuadraticForm(*abc)
    x = 20000
    n_max = math.isqrt(x) + 2
    primes = {f(n) for n in range(-n_max, n_max + 1) if 0 < f(n) <= x and sympy.isprime(f(n))}
    rep = hl_density(f, x, 1000)
    assert rep.empirical == len(primes)


def test_hl_errors():
    with pytest.raises(InvalidInput):
        hl_density(QuadraticForm(1, 0, 1), 10**4, 10)


def test_equidist_basic():
    x = 20000
    h = equidist_histogram(x, "sqrt:2", 0, 1)
    assert h.counts == (sympy.primepi(x),) == (h.total,)
    half = equidist_histogram(x, Fraction(1, 2), 0, 8)
    assert half.counts[0] == 1 and half.counts[4] == sympy.primepi(x) - 1
    assert sum(half.counts) == half.total


@given(st.integers(2, 40))
def test_equidist_bins_brute(bins):
    x = 3000
    h = equidist_histogram(x, "sqrt:3", Fraction(2, 7), bins)
    ref = [0] * bins
    for p in sympy.primerange(2, x + 1):
        t = mpmath.sqrt(3) * p + mpmath.mpf(2) / 7
        ref[int(mpmath.floor((t - mpmath.floor(t)) * bins))] += 1
    assert list(h.counts) == ref
    cum = np.cumsum(ref) / h.total
    assert h.discrepancy == pytest.approx(np.max(np.abs(cum - np.arange(1, bins + 1) / bins)))
