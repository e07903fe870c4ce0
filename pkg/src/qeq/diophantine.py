"""Continued-fraction convergents and experiment-scale selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InsufficientPrecision, InvalidInput, NoSolution
from .precision import DEFAULT_BITS, IrrationalSpec, parse_spec, realize

THETA_MAX = 1 / 108


@dataclass(frozen=True)
class Convergent:
    a: int
    q: int

    def __post_init__(self):
        if self.q < 1 or math.gcd(self.a, self.q) != 1:
            raise InvalidInput(f"{self.a}/{self.q} is not a reduced fraction with q >= 1")

    def __float__(self):
        return self.a / self.q


def _interval(alpha, bits: int) -> tuple[Fraction, Fraction]:
    if isinstance(alpha, str):
        alpha = parse_spec(alpha)
    if not isinstance(alpha, IrrationalSpec):
        raise InvalidInput("convergents need an IrrationalSpec (the integer part matters)")
    f = realize(alpha, bits)
    base = alpha.integer_part() + f.as_fraction()
    eps = Fraction(f.err_ulps, 1 << f.bits)
    return base - eps, base + eps


def certified_terms(alpha, bits: int = DEFAULT_BITS):
    """Partial quotients shared by every real in the certified interval around ``alpha``.

    Stops (rather than guessing) at the first quotient the interval cannot pin down.
    """
    lo, hi = _interval(alpha, bits)
    while True:
        a_lo, a_hi = math.floor(lo), math.floor(hi)
        if a_lo != a_hi:
            return
        yield a_lo
        lo, hi = lo - a_lo, hi - a_lo
        if lo == 0 or hi == 0:
            return
        lo, hi = 1 / hi, 1 / lo


def convergents(alpha, q_max: int, bits: int = DEFAULT_BITS) -> list[Convergent]:
    """All convergents with ``q <= q_max`` in increasing ``q``.

    When two consecutive convergents share ``q = 1`` (partial quotient 1) only
    the later one, the nearest integer, is kept.
    """
    if q_max < 1:
        raise InvalidInput("q_max must be >= 1")
    lo, hi = _interval(alpha, bits)
    out: list[Convergent] = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    reached = False
    for a in certified_terms(alpha, bits):
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > q_max:
            reached = True
            break
        c = Convergent(p1, q1)
        bound = Fraction(1, q1 * q1)
        if max(abs(lo - Fraction(p1, q1)), abs(hi - Fraction(p1, q1))) >= bound:
            raise InsufficientPrecision(f"cannot certify |alpha - {p1}/{q1}| < 1/q^2 at {bits} bits")
        if out and out[-1].q == q1:
            out[-1] = c
        else:
            out.append(c)
    if not reached:
        raise InsufficientPrecision(f"{bits}-bit value of alpha cannot resolve convergents up to q = {q_max}")
    return out


@dataclass(frozen=True)
class ExperimentParams:
    """Scale ``x`` with ``delta = x**-theta``, ``K = log(x)**2 / delta``, ``y = x**(1/6 - 2 theta - eta/2)``."""

    theta: float
    eta: float
    x: float

    def __post_init__(self):
        if not 0 < self.theta < THETA_MAX:
            raise InvalidInput(f"theta must lie in (0, 1/108), got {self.theta}")
        if self.eta <= 0:
            raise InvalidInput("eta must be positive")
        if self.x < 3:
            raise InvalidInput("x must be >= 3")
        if self.y < 2:
            raise InvalidInput(f"x = {self.x} gives y = {self.y:.4g} < 2")

    @property
    def delta(self) -> float:
        return self.x ** (-self.theta)

    @property
    def K(self) -> float:
        return math.log(self.x) ** 2 / self.delta

    @property
    def y(self) -> float:
        return self.x ** (1 / 6 - 2 * self.theta - self.eta / 2)

    def as_dict(self) -> dict:
        return {"theta": self.theta, "eta": self.eta, "x": self.x, "delta": self.delta, "K": self.K, "y": self.y}


def scale_map(x: float, theta: float, eta: float) -> float:
    """``x K / y`` as a function of ``x``."""
    return x ** (5 / 6 + 3 * theta + eta / 2) * math.log(x) ** 2


def select_scale(alpha, theta: float, eps: float, q_target, max_iter: int = 200) -> ExperimentParams:
    """Solve ``x K(x) / y(x) = q`` by bisection in ``log x`` over ``[3, 2**60]``; ``eta = 8 eps``.

    ``alpha`` is accepted for symmetry with :func:`convergents`; it does not
    enter the equation.
    """
    if not 0 < theta < THETA_MAX:
        raise InvalidInput(f"theta must lie in (0, 1/108), got {theta}")
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    q = q_target.q if isinstance(q_target, Convergent) else q_target
    eta = 8 * eps
    lo, hi = math.log(3.0), 60 * math.log(2.0)
    f = lambda u: scale_map(math.exp(u), theta, eta)  # noqa: E731
    if q < f(lo):
        raise NoSolution(f"q = {q} is below the minimum {f(lo):.4g} attained at x = 3")
    if q > f(hi):
        raise NoSolution(f"q = {q} exceeds the value at x = 2^60")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * hi:
            break
    return ExperimentParams(theta, eta, math.exp(0.5 * (lo + hi)))
