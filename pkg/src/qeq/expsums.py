"""Direct evaluation of the exponential and min-sums, with their analytic envelopes.

Envelopes omit the ``x**eps`` factor and all implied constants, so only
ratios across a family of scales are meaningful.  Ranges written ``n ~ N``
are the dyadic blocks ``N < n <= 2N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from . import arith
from ._parallel import csum, pmap, rsum
from .bump import BumpFunction
from .diophantine import Convergent
from .errors import InvalidInput, RangeViolation, ScaleGuardExceeded
from .precision import FixedFrac, as_fixed, e_unit, frac_norm, mul_mod1, mul_mod1_array

MIN_SUM_GUARD = 10**7
WEYL_GUARD = 10**6
WORK_GUARD = 10**8
_INT_LIMIT = 1 << 62


def dyadic(N) -> np.ndarray:
    """Integers ``n`` with ``N < n <= 2N``."""
    lo = math.floor(N) + 1
    hi = math.floor(2 * N)
    return np.arange(lo, hi + 1, dtype=np.int64)


def _q(q) -> int:
    return q.q if isinstance(q, Convergent) else int(q)


def _tau(ns: np.ndarray, k: int) -> np.ndarray:
    if ns.size == 0:
        return ns
    return arith.tau_k_segment(int(ns[0]), int(ns[-1]), k)


def _refine_norms(alpha: FixedFrac, ns: np.ndarray, norms: np.ndarray, err: float, pivot) -> np.ndarray:
    """Recompute at full carrier width every norm within ``err`` of its decision boundary."""
    close = np.flatnonzero(np.abs(norms - pivot) <= err)
    if close.size:
        norms = norms.copy()
        for i in close:
            norms[i] = frac_norm(mul_mod1(alpha, int(ns[i])))
    return norms


# --------------------------------------------------------------------------
# progression sums


@dataclass(frozen=True)
class ProgressionReport:
    value: complex
    count: int
    norm_alpha_d: float
    bound_count: float
    bound_norm: float
    degenerate: bool

    @property
    def bound(self) -> float:
        return min(self.bound_count, self.bound_norm)

    @property
    def holds(self) -> bool:
        return abs(self.value) <= self.bound * (1 + 1e-12) + 1e-12


def linear_progression_sum(X: int, d: int, a: int, alpha) -> tuple[complex, ProgressionReport]:
    """``sum_{n <= X, n == a (d)} e(alpha n)`` in closed form, with the bound ``min(X/d + 1, 1/(2||alpha d||))``."""
    if X < 1 or d < 1 or not 0 <= a < d:
        raise InvalidInput("need X >= 1, d >= 1 and 0 <= a < d")
    alpha = as_fixed(alpha)
    n0 = a if a >= 1 else d
    count = (X - n0) // d + 1 if n0 <= X else 0
    step = mul_mod1(alpha, d)
    norm = frac_norm(step)
    degenerate = norm <= step.err
    if count == 0:
        value = 0j
    elif step.mantissa == 0:
        value = count * complex(*e_unit(mul_mod1(alpha, n0)))
    elif count <= 1000:
        ns = n0 + d * np.arange(count, dtype=np.int64)
        value = csum(mul_mod1_array(alpha, ns).unit())
    else:
        first = complex(*e_unit(mul_mod1(alpha, n0)))
        num = complex(*e_unit(mul_mod1(alpha, d * count))) - 1
        den = complex(*e_unit(step)) - 1
        value = first * num / den
    bound_norm = math.inf if degenerate or norm == 0 else 1 / (2 * norm)
    return value, ProgressionReport(value, count, norm, X / d + 1, bound_norm, degenerate)


# --------------------------------------------------------------------------
# min-sums G


@dataclass(frozen=True)
class MinSumParams:
    x: float
    M: float
    J: float
    mu: int = 2
    zeta: int = 2
    power: int = 4

    def __post_init__(self):
        if min(self.x, self.M, self.J) <= 0 or self.mu < 1 or self.zeta < 1:
            raise InvalidInput("x, M, J, mu, zeta must all be positive")
        if self.power not in (2, 4):
            raise InvalidInput("power must be 2 or 4")

    @property
    def H(self) -> float:
        return self.x / (self.M**self.power * self.J)


@dataclass(frozen=True)
class EnvelopeReport:
    lhs: float
    rhs: float
    ratio: float
    q_used: int
    terms: tuple = field(default=())


def min_sum_envelope(p: MinSumParams, q: int) -> tuple[float, ...]:
    x, M, J = p.x, p.M, p.J
    if p.power == 2:
        return (M * J, x / M**1.5, x / (M * math.sqrt(q)), math.sqrt(x * q) / M)
    return (M * J, x / M ** (25 / 8), x / (M**3 * q ** (1 / 8)), x ** (7 / 8) * q ** (1 / 8) / M**3)


def min_sum_G(p: MinSumParams, alpha, q, threads: int = 1) -> EnvelopeReport:
    """``sum_{m~M} tau_mu(m) sum_{j~J} tau_zeta(j) min(x/(m^k j), 1/||alpha m^k j||)`` against its envelope."""
    alpha = as_fixed(alpha)
    q = _q(q)
    ms, js = dyadic(p.M), dyadic(p.J)
    if ms.size * js.size > MIN_SUM_GUARD:
        raise ScaleGuardExceeded(f"{ms.size * js.size} terms exceed the guard {MIN_SUM_GUARD}")
    if ms.size and int(ms[-1]) ** p.power * int(js[-1]) >= _INT_LIMIT:
        raise ScaleGuardExceeded("m^power * j overflows the 62-bit index range")
    tau_m, tau_j = _tau(ms, p.mu), _tau(js, p.zeta)

    def row(i):
        ns = int(ms[i]) ** p.power * js
        fr = mul_mod1_array(alpha, ns)
        first = p.x / ns.astype(np.float64)
        norms = _refine_norms(alpha, ns, fr.norms(), fr.err, 1.0 / first)
        with np.errstate(divide="ignore"):
            second = 1.0 / norms
        return int(tau_m[i]) * rsum(tau_j * np.minimum(first, second))

    lhs = math.fsum(pmap(row, range(ms.size), threads))
    terms = min_sum_envelope(p, q)
    rhs = math.fsum(terms)
    return EnvelopeReport(lhs, rhs, lhs / rhs, q, terms)


# --------------------------------------------------------------------------
# Weyl differencing chain


@dataclass(frozen=True)
class WeylChain:
    H0: int
    G: float
    G1: float
    G2: float
    diagonal: int
    offdiag: float


def weyl_chain_G2(p: MinSumParams, H0: int, alpha, threads: int = 1) -> WeylChain:
    """``G(H0)``, ``G1(H0)``, ``G2(H0)`` of the quartic phase ``alpha m^4 j h``, evaluated term by term.

    ``offdiag`` is the off-diagonal part of ``sum_{h,j} |sum_m e(alpha m^4 j h)|^2``
    so that the first Cauchy-Schwarz step can be checked exactly.
    """
    if p.power != 4:
        raise InvalidInput("the Weyl chain is defined for power 4")
    alpha = as_fixed(alpha)
    hs, js, ms = dyadic(H0), dyadic(p.J), dyadic(p.M)
    if hs.size * js.size * ms.size > WEYL_GUARD:
        raise ScaleGuardExceeded(f"H0*J*M = {hs.size * js.size * ms.size} exceeds the guard {WEYL_GUARD}")
    t_max = math.ceil(p.M) - 1
    ts = np.concatenate([np.arange(-t_max, 0), np.arange(1, t_max + 1)]).astype(np.int64)
    if hs.size * js.size * ts.size**2 * ms.size > WORK_GUARD:
        raise ScaleGuardExceeded("second differencing step exceeds the work guard")
    m_top = int(ms[-1]) if ms.size else 0
    if 40 * m_top**4 * int(js[-1] if js.size else 0) * int(hs[-1] if hs.size else 0) >= _INT_LIMIT:
        raise ScaleGuardExceeded("phase integers overflow the 62-bit range")

    m = ms[:, None]
    t = ts[None, :]
    poly1 = 4 * m**3 * t + 6 * m**2 * t**2 + 4 * m * t**3  # (m, t)
    tt = ts[:, None, None]
    ll = ts[None, :, None]
    mm = ms[None, None, :]
    poly2 = 12 * (mm**2 * tt * ll + mm * ll**2 * tt + mm * ll * tt**2)  # (t, l, m)
    m4 = ms**4
    diff = m4[None, :] - m4[:, None]
    off = ~np.eye(ms.size, dtype=bool)
    pairs = [(int(h), int(j)) for h in hs for j in js]

    def one(pair):
        h, j = pair
        jh = j * h
        s = mul_mod1_array(alpha, m4 * jh).unit()
        g = abs(csum(s))
        od = mul_mod1_array(alpha, diff[off] * jh).unit()
        g1 = rsum(np.abs(mul_mod1_array(alpha, poly1 * jh).unit().sum(axis=0)))
        g2 = rsum(np.abs(mul_mod1_array(alpha, poly2 * jh).unit().sum(axis=2)))
        return g, rsum(od.real), g1, g2

    parts = pmap(one, pairs, threads)
    G = math.fsum(r[0] for r in parts)
    offdiag = math.fsum(r[1] for r in parts)
    G1 = math.fsum(r[2] for r in parts)
    G2 = math.fsum(r[3] for r in parts)
    return WeylChain(int(H0), G, G1, G2, len(pairs) * ms.size, offdiag)


# --------------------------------------------------------------------------
# Vaughan's identity


@dataclass(frozen=True)
class VaughanParts:
    x: int
    U: int
    V: int
    smalls: complex
    typeI: complex
    typeI_log: complex
    typeII: complex

    @property
    def total(self) -> complex:
        return csum([self.smalls, self.typeI, self.typeI_log, self.typeII])


def exp_weight(alpha):
    """The weight ``n -> e(alpha n)`` as a vectorised callback."""
    alpha = as_fixed(alpha)
    return lambda ns: mul_mod1_array(alpha, ns).unit()


def direct_lambda_sum(x: int, weight) -> complex:
    lam = arith._mangoldt_prefix(x)
    w = np.asarray(weight(np.arange(0, x + 1, dtype=np.int64)), dtype=np.complex128)
    return csum(lam[1:] * w[1:])


def vaughan_decompose(x: int, U: int, V: int, weight, threads: int = 1) -> VaughanParts:
    """Split ``sum_{n<=x} Lambda(n) weight(n)`` by Vaughan's identity.

    With ``F`` the primes-powers ``<= U`` and ``G`` the Mobius values ``<= V``:

    * ``smalls``    = ``sum_{n<=U} Lambda(n) w(n)``
    * ``typeI_log`` = ``sum_{b<=V} mu(b) sum_{c<=x/b} log(c) w(bc)``
    * ``typeI``     = ``-sum_{t<=UV} a(t) sum_{d<=x/t} w(td)``, ``a = (mu 1_{<=V}) * (Lambda 1_{<=U})``
    * ``typeII``    = ``-sum_{m>U, k>V, mk<=x} Lambda(m) beta(k) w(mk)``, ``beta(k) = sum_{b|k, b<=V} mu(b)``

    ``weight`` maps an int64 array of ``n`` to complex values.  When
    ``U V > x`` everything is returned in ``smalls``.
    """
    if U < 2 or V < 2:
        raise InvalidInput("U and V must be >= 2")
    if x < 2:
        raise InvalidInput("x must be >= 2")
    w = np.asarray(weight(np.arange(0, x + 1, dtype=np.int64)), dtype=np.complex128)
    lam = arith._mangoldt_prefix(x)
    if U * V > x:
        return VaughanParts(x, U, V, csum(lam[1:] * w[1:]), 0j, 0j, 0j)
    mu = arith.mobius_segment(V)
    bs = [b for b in range(1, V + 1) if mu[b]]
    logs = np.log(np.arange(1, x + 1, dtype=np.float64))

    smalls = csum(lam[1 : U + 1] * w[1 : U + 1])

    def log_part(b):
        top = x // b
        return int(mu[b]) * csum(logs[:top] * w[b : b * top + 1 : b])

    typeI_log = csum(pmap(log_part, bs, threads))

    a = np.zeros(U * V + 1)
    cs = np.flatnonzero(lam[: U + 1])
    for b in bs:
        a[b * cs] += mu[b] * lam[cs]
    ts = [int(t) for t in np.flatnonzero(a)]

    def type1(t):
        return float(a[t]) * csum(w[t : t * (x // t) + 1 : t])

    typeI = -csum(pmap(type1, ts, threads))

    kmax = x // (U + 1)
    beta = np.zeros(kmax + 1)
    for b in bs:
        if b <= kmax:
            beta[b::b] += mu[b]
    prime_powers = [int(m) for m in np.flatnonzero(lam) if U < m <= x // (V + 1)]

    def type2(m):
        top = x // m
        ks = np.arange(V + 1, top + 1)
        return float(lam[m]) * csum(beta[ks] * w[m * ks])

    typeII = -csum(pmap(type2, prime_powers, threads))
    return VaughanParts(x, U, V, smalls, typeI, typeI_log, typeII)


# --------------------------------------------------------------------------
# type I / type II sums


@dataclass(frozen=True)
class CoeffSeq:
    """Coefficients ``a(n)`` for ``N < n <= 2N``."""

    N: float
    values: np.ndarray
    divisor_bounded: bool = False

    def __post_init__(self):
        ns = dyadic(self.N)
        vals = np.asarray(self.values)
        if vals.shape != ns.shape:
            raise InvalidInput(f"expected {ns.size} coefficients for n ~ {self.N}, got {vals.size}")
        if self.divisor_bounded and ns.size:
            cap = _tau(ns, 2) * np.log(ns.astype(np.float64))
            if np.any(np.abs(vals) > cap * (1 + 1e-12)):
                raise InvalidInput("coefficients exceed tau(n) log n")

    @classmethod
    def from_function(cls, N, fn, divisor_bounded: bool = False) -> CoeffSeq:
        return cls(N, np.array([fn(int(n)) for n in dyadic(N)]), divisor_bounded)

    @classmethod
    def mobius(cls, N) -> CoeffSeq:
        return cls.from_function(N, arith.mobius, divisor_bounded=True)

    @classmethod
    def mangoldt(cls, N) -> CoeffSeq:
        ns = dyadic(N)
        lam = arith.mangoldt_segment(int(ns[0]), int(ns[-1])) if ns.size else np.zeros(0)
        return cls(N, lam, divisor_bounded=True)


@dataclass(frozen=True)
class TypeSumReport:
    kind: str
    value: complex
    rhs: float
    ratio: float
    q_used: int
    terms: tuple


def type_sum_envelope(kind: str, x: float, y: float, K: float, q: int) -> tuple[float, ...]:
    if kind == "II":
        return (
            x ** 0.75 * K,
            x * K / y ** (17 / 16),
            x * K / (y * q ** (1 / 8)),
            x ** (15 / 16) * K ** (15 / 16) * q ** (1 / 16) / y,
        )
    return (
        y * x ** (1 / 3) * K,
        x * K / y**1.5,
        x * K / (y * math.sqrt(q)),
        math.sqrt(x * K * q) / y,
    )


def type_sum_W(
    kind: str,
    K0: int,
    y,
    x: int,
    M,
    alpha,
    beta,
    coeff_a: CoeffSeq | None,
    coeff_b: CoeffSeq | None,
    bump: BumpFunction,
    q=1,
    threads: int = 1,
    check_windows: bool = True,
) -> tuple[complex, TypeSumReport]:
    """``sum_{k~K0} c(k) e(beta k) sum_{r~y} sum_{m~M} a(m) sum_{l~L, ml==1 (r^2)} [b(l) | log l] e(alpha m l k)``.

    ``L = x / M``.  ``m`` sharing a factor with ``r`` has no inverse modulo
    ``r**2`` and contributes nothing.
    """
    if kind not in ("I", "I-log", "II"):
        raise InvalidInput(f"kind must be I, I-log or II, got {kind!r}")
    alpha, beta = as_fixed(alpha), as_fixed(beta)
    L = x / M
    if not 1 <= K0 <= bump.K / 2:
        raise RangeViolation(f"K0 = {K0} must satisfy 1 <= K0 <= K/2 = {bump.K / 2}")
    if check_windows:
        third = x ** (1 / 3)
        if kind != "II" and M > third * (1 + 1e-12):
            raise RangeViolation(f"type I needs M <= x^(1/3) = {third:.6g}")
        if kind == "II" and not third * (1 - 1e-12) <= M <= x ** (2 / 3) * (1 + 1e-12):
            raise RangeViolation("type II needs x^(1/3) <= M <= x^(2/3)")
        if not y**2 < L:
            raise RangeViolation(f"need y^2 < L (y = {y}, L = {L:.6g})")
    ks, rs, ms, ls = dyadic(K0), dyadic(y), dyadic(M), dyadic(L)
    if kind == "II" and coeff_b is None:
        raise InvalidInput("type II needs coeff_b")
    a_vals = np.ones(ms.size) if coeff_a is None else np.asarray(coeff_a.values, dtype=np.complex128)
    if a_vals.size != ms.size:
        raise InvalidInput("coeff_a does not cover m ~ M")
    if kind == "II":
        b_vals = np.asarray(coeff_b.values, dtype=np.complex128)
        if b_vals.size != ls.size:
            raise InvalidInput("coeff_b does not cover l ~ L")
    work = ks.size * sum(ms.size * (ls.size / int(r) ** 2 + 1) for r in rs)
    if work > WORK_GUARD:
        raise ScaleGuardExceeded(f"about {work:.3g} inner terms exceed the guard {WORK_GUARD}")
    if ms.size and ls.size and int(ms[-1]) * int(ls[-1]) * int(ks[-1]) >= _INT_LIMIT:
        raise ScaleGuardExceeded("phase integers overflow the 62-bit range")
    ck = bump.coeffs(ks) * mul_mod1_array(beta, ks).unit()
    l_lo = int(ls[0]) if ls.size else 1
    l_hi = int(ls[-1]) if ls.size else 0

    def one(rm):
        r, i = rm
        m = int(ms[i])
        rr = r * r
        f = pow(m, -1, rr) if rr > 1 else 0
        start = l_lo + (f - l_lo) % rr
        ells = np.arange(start, l_hi + 1, rr, dtype=np.int64)
        if ells.size == 0:
            return 0j
        if kind == "I":
            wts = np.ones(ells.size)
        elif kind == "I-log":
            wts = np.log(ells.astype(np.float64))
        else:
            wts = b_vals[ells - l_lo]
        phases = mul_mod1_array(alpha, np.multiply.outer(ks, m * ells)).unit()
        inner = phases @ wts
        return a_vals[i] * csum(ck * inner)

    pairs = [(int(r), i) for r in rs for i in range(ms.size) if gcd(int(ms[i]), int(r)) == 1]
    value = csum(pmap(one, pairs, threads))
    q = _q(q)
    terms = type_sum_envelope(kind, x, float(y), float(bump.K), q)
    rhs = math.fsum(terms)
    return value, TypeSumReport(kind, value, rhs, abs(value) / rhs, q, terms)
