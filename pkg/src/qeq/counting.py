"""Counting primes ``p = a r^2 + 1`` with ``||alpha p + beta|| < p^-theta`` and related densities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import gcd, isqrt, log

import numpy as np
from scipy.special import expi

from . import arith
from ._parallel import csum, pmap, rsum
from .bump import build_bump, eval_bump
from .diophantine import THETA_MAX
from .errors import InvalidForm, InvalidInput, ScaleGuardExceeded
from .expsums import dyadic
from .precision import FixedFrac, _mulhi64, as_fixed, frac_norm, mul_mod1, mul_mod1_array

ZETA2 = math.pi**2 / 6
FOURIER_GUARD = 10**7


def _exponent(theta: float, eta: float) -> float:
    return 2 / 3 + 4 * theta + eta


def _shifted_norms(alpha: FixedFrac, beta: FixedFrac, ns: np.ndarray):
    fr = mul_mod1_array(alpha, ns).shift(beta)
    return fr, fr.norms()


def _exact_norm(alpha: FixedFrac, beta: FixedFrac, n: int) -> float:
    return frac_norm(mul_mod1(alpha, n) + beta)


@dataclass(frozen=True)
class Witness:
    p: int
    a: int
    r: int
    norm: float


@dataclass(frozen=True)
class GammaReport:
    x: int
    y: float
    theta: float
    eta: float
    gamma: int
    main_term: float
    witnesses: tuple = ()
    gamma1: float | None = None
    gamma2: float | None = None
    gamma3: float | None = None

    def __post_init__(self):
        if self.gamma < len(self.witnesses):
            raise ValueError("fewer counted primes than stored witnesses")
        e = _exponent(self.theta, self.eta)
        for w in self.witnesses:
            if w.p != w.a * w.r * w.r + 1 or not arith.is_prime(w.p):
                raise ValueError(f"witness {w} is not a prime of the form a r^2 + 1")
            if log(w.a) > e * log(w.p) or w.norm >= w.p ** (-self.theta):
                raise ValueError(f"witness {w} violates the size or norm condition")


def _check_theta(theta: float, eta: float) -> None:
    if not 0 < theta < THETA_MAX:
        raise InvalidInput(f"theta must lie in (0, 1/108), got {theta}")
    if eta <= 0:
        raise InvalidInput("eta must be positive")


def gamma_count(
    x: int,
    alpha,
    beta=0,
    theta: float = 0.005,
    eta: float = 0.01,
    max_witnesses: int = 100,
    sieve_cache=None,
) -> GammaReport:
    """Count primes ``x < p <= 2x`` with ``s(p-1) <= p^(2/3+4 theta+eta)`` and ``||alpha p + beta|| < p^-theta``."""
    _check_theta(theta, eta)
    alpha, beta = as_fixed(alpha), as_fixed(beta)
    y = x ** (1 / 6 - 2 * theta - eta / 2) if x > 1 else 1.0
    main = x / (2 * ZETA2 * y)
    if x < 2:
        return GammaReport(x, y, theta, eta, 0, main)
    ps = arith.primes_between(x + 1, 2 * x, sieve_cache)
    _, s = arith.square_part_segment(x, 2 * x - 1)
    s_p = s[ps - 1 - x]
    e = _exponent(theta, eta)
    logp = np.log(ps.astype(np.float64))
    size_ok = np.log(s_p.astype(np.float64)) <= e * logp
    fr, norms = _shifted_norms(alpha, beta, ps)
    thresh = np.exp(-theta * logp)
    for i in np.flatnonzero(np.abs(norms - thresh) <= fr.err):
        norms[i] = _exact_norm(alpha, beta, int(ps[i]))
    ok = size_ok & (norms < thresh)
    witnesses = []
    for i in np.flatnonzero(ok)[:max_witnesses]:
        p, a = int(ps[i]), int(s_p[i])
        witnesses.append(Witness(p, a, isqrt((p - 1) // a), _exact_norm(alpha, beta, p)))
    return GammaReport(x, y, theta, eta, int(ok.sum()), main, tuple(witnesses))


@dataclass(frozen=True)
class Gamma2Report:
    x: int
    y: float
    gamma2: float
    main_term: float
    pnt_prediction: float

    @property
    def ratio_main(self) -> float:
        return self.gamma2 / self.main_term

    @property
    def ratio_pnt(self) -> float:
        return self.gamma2 / self.pnt_prediction


def _lambda_window(x: int) -> np.ndarray:
    return arith.mangoldt_segment(x + 1, 2 * x)


def gamma2(x: int, y, lam: np.ndarray | None = None) -> Gamma2Report:
    """``sum_{r~y} sum_{n~x, n==1 (r^2)} Lambda(n)`` as one correctly rounded sum of psi-differences.

    Compared with ``x/(2 zeta(2) y)`` and with ``sum_{r~y} x/phi(r^2)``.
    """
    if y * y > x:
        raise InvalidInput(f"need y^2 <= x, got y = {y}, x = {x}")
    rs = dyadic(y)
    if lam is None:
        lam = _lambda_window(x)
    parts = [arith.psi_terms(x, 2 * x, int(r) ** 2, 1 % int(r) ** 2, lam, x + 1) for r in rs]
    value = math.fsum(np.concatenate(parts)) if parts else 0.0
    pnt = math.fsum(x / (int(r) * arith.euler_phi(int(r))) for r in rs)
    return Gamma2Report(x, float(y), value, x / (2 * ZETA2 * y), pnt)


@dataclass(frozen=True)
class FourierIdentity:
    x: int
    y: float
    theta: float
    delta: float
    K: int
    r: int
    gamma1: float
    gamma2: float
    gamma3: float
    gamma3_raw: float
    T: float
    tail: float

    @property
    def identity_residual(self) -> float:
        return abs(self.gamma1 / self.delta - self.gamma2 - self.gamma3)

    @property
    def residual_bound(self) -> float:
        return self.tail / self.delta * self.T + 2


def _square_counts(x: int, rs: np.ndarray) -> np.ndarray:
    """``#{r in rs : r^2 | n - 1}`` for ``x < n <= 2x``."""
    cnt = np.zeros(x, dtype=np.int64)
    for r in rs:
        rr = int(r) ** 2
        cnt[(1 - (x + 1)) % rr :: rr] += 1
    return cnt


def gamma1_gamma3(x: int, y, theta: float, alpha, beta=0, threads: int = 1, lam=None) -> FourierIdentity:
    """The smoothed count ``Gamma1`` and the Fourier remainder ``Gamma3``, evaluated directly.

    ``gamma3`` is normalised by ``1/delta`` so that ``Gamma1 = delta (Gamma2 + Gamma3)``
    up to the coefficient tail; ``gamma3_raw`` is the bare coefficient sum.
    """
    if x > FOURIER_GUARD:
        raise ScaleGuardExceeded(f"x = {x} exceeds the Fourier-identity guard {FOURIER_GUARD}")
    if not 0 < theta < THETA_MAX:
        raise InvalidInput(f"theta must lie in (0, 1/108), got {theta}")
    alpha, beta = as_fixed(alpha), as_fixed(beta)
    delta = x ** (-theta)
    bump = build_bump(delta, x)
    rs = dyadic(y)
    if lam is None:
        lam = _lambda_window(x)
    cnt = _square_counts(x, rs)
    sel = np.flatnonzero((lam > 0) & (cnt > 0))
    ns = sel.astype(np.int64) + x + 1
    wts = lam[sel] * cnt[sel]
    T = rsum(wts)
    g2 = gamma2(x, y, lam).gamma2

    t = mul_mod1_array(alpha, ns).shift(beta).values()
    g1 = rsum(wts * eval_bump(bump, t))

    ks = np.arange(1, bump.K + 1, dtype=np.int64)
    ck = bump.coeffs(ks) * mul_mod1_array(beta, ks).unit()

    def one(i):
        s = csum(wts * mul_mod1_array(alpha, int(ks[i]) * ns).unit())
        return ck[i] * s

    raw = 2.0 * csum(pmap(one, range(ks.size), threads)).real
    return FourierIdentity(x, float(y), theta, delta, bump.K, bump.r, g1, g2, raw / delta, raw, T, bump.tail())


# --------------------------------------------------------------------------
# Hardy-Littlewood density


@dataclass(frozen=True)
class QuadraticForm:
    a: int
    b: int
    c: int

    def __post_init__(self):
        a, b, c = self.a, self.b, self.c
        failed = []
        if a <= 0:
            failed.append("a must be positive")
        if gcd(gcd(a, b), c) != 1:
            failed.append(f"gcd(a, b, c) = {gcd(gcd(a, b), c)} must be 1")
        if (a + b) % 2 == 0 and c % 2 == 0:
            failed.append("a + b and c must not both be even")
        D = self.D
        if D >= 0 and isqrt(D) ** 2 == D:
            failed.append(f"discriminant D = {D} is a perfect square")
        if failed:
            raise InvalidForm("; ".join(failed))

    @property
    def D(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, n):
        return self.a * n * n + self.b * n + self.c


def kronecker_symbol(D: int, p: int) -> int:
    """Legendre symbol ``(D/p)`` for an odd prime ``p`` by Euler's criterion."""
    if p < 3 or p % 2 == 0:
        raise InvalidInput("p must be an odd prime")
    r = D % p
    if r == 0:
        return 0
    return 1 if pow(r, (p - 1) // 2, p) == 1 else -1


def singular_series(f: QuadraticForm, p_cut: int) -> float:
    """``prod_{2 < p <= p_cut, p does not divide a} (1 - (D/p)/(p - 1))``."""
    D = f.D
    logs = []
    for p in arith.small_primes(p_cut)[1:]:
        p = int(p)
        if f.a % p:
            logs.append(math.log1p(-kronecker_symbol(D, p) / (p - 1)))
    return math.exp(math.fsum(logs))


@dataclass(frozen=True)
class HLReport:
    a: int
    b: int
    c: int
    D: int
    x: int
    p_cut: int
    empirical: int
    sigma: float
    predicted: float
    predicted_closed: float
    sides: int

    @property
    def ratio(self) -> float:
        return self.empirical / self.predicted


def hl_density(f: QuadraticForm, x: int, p_cut: int = 10**5, sieve_cache=None) -> HLReport:
    """Distinct primes ``f(n) <= x`` over all integers ``n`` against the conjectured density.

    ``predicted`` uses the logarithmic-integral form of the main term,
    ``predicted_closed`` the bare ``sqrt(x)/log x`` form.  Forms whose vertex
    is not a (half-)integer take distinct values on the two sides of it and
    are predicted twice the one-sided count.
    """
    if p_cut < 1000:
        raise InvalidInput("p_cut must be >= 1000")
    if x < 3:
        raise InvalidInput("x must be >= 3")
    a, b, c = f.a, f.b, f.c
    # real roots of f(n) = x bound the admissible n
    disc = b * b - 4 * a * (c - x)
    if disc < 0:
        ns = np.zeros(0, dtype=np.int64)
    else:
        root = math.isqrt(disc)
        lo = math.floor((-b - root) / (2 * a)) - 1
        hi = math.ceil((-b + root) / (2 * a)) + 1
        ns = np.arange(lo, hi + 1, dtype=np.int64)
    vals = a * ns * ns + b * ns + c
    vals = vals[(vals >= 2) & (vals <= x)]
    if vals.size:
        flags = arith.prime_flags(1, x)
        primes = np.unique(vals[flags[vals - 1]])
    else:
        primes = vals
    sigma = singular_series(f, p_cut)
    eps = gcd(2, a + b)
    extra = math.prod(p / (p - 1) for p, _ in arith.factorize(gcd(a, b)) if p > 2) if gcd(a, b) > 1 else 1.0
    sides = 1 if b % a == 0 else 2
    scale = sides * eps * sigma * extra / math.sqrt(a)
    li_part = 0.5 * (expi(math.log(math.sqrt(x))) - expi(math.log(math.sqrt(2))))
    return HLReport(
        a, b, c, f.D, x, p_cut, int(primes.size), sigma,
        scale * li_part, scale * math.sqrt(x) / math.log(x), sides,
    )


# --------------------------------------------------------------------------
# equidistribution backdrop


@dataclass(frozen=True)
class Histogram:
    bins: int
    counts: tuple
    total: int
    discrepancy: float
    max_bin_deviation: float = field(default=0.0)

    def edges(self) -> list[tuple[float, float]]:
        return [(i / self.bins, (i + 1) / self.bins) for i in range(self.bins)]


def equidist_histogram(x: int, alpha, beta=0, bins: int = 20, sieve_cache=None) -> Histogram:
    """Bin counts of ``{alpha p + beta}`` over primes ``p <= x`` and the star discrepancy at bin edges."""
    if bins < 1:
        raise InvalidInput("bins must be >= 1")
    alpha, beta = as_fixed(alpha), as_fixed(beta)
    ps = arith.primes_between(2, x, sieve_cache) if x >= 2 else np.zeros(0, dtype=np.int64)
    fr = mul_mod1_array(alpha, ps).shift(beta)
    idx = _mulhi64(fr.words, bins).astype(np.int64)
    with np.errstate(over="ignore"):
        low = fr.words * np.uint64(bins)
    edge_dist = np.minimum(low, (~low) + np.uint64(1)).astype(np.float64) * 2.0**-64 / bins
    for i in np.flatnonzero(edge_dist <= fr.err):
        exact = mul_mod1(alpha, int(ps[i])) + beta
        idx[i] = (exact.mantissa * bins) >> exact.bits
    counts = np.bincount(idx, minlength=bins)
    total = int(ps.size)
    if total:
        cum = np.cumsum(counts) / total
        grid = np.arange(1, bins + 1) / bins
        disc = float(np.max(np.abs(cum - grid)))
        dev = float(np.max(np.abs(counts / total - 1 / bins)))
    else:
        disc = dev = 0.0
    return Histogram(bins, tuple(int(c) for c in counts), total, disc, dev)
