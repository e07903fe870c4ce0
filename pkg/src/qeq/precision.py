"""Fixed-point reals modulo one with certified error bounds.

A :class:`FixedFrac` stores ``mantissa / 2**bits`` together with an error
bound measured in units of ``2**-bits``.  All multiplications by integers are
exact full-width integer products, so the only error ever carried is the
representation error of the original constant scaled by ``|n|``.

Bulk evaluation goes through :func:`mul_mod1_array`, which keeps 64 fractional
bits per element in a ``uint64`` word and is exact up to a documented bound.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InsufficientPrecision, InvalidSpec, PrecisionBudgetExceeded

DEFAULT_BITS = 128
GUARD_BITS = 54

_MASK64 = (1 << 64) - 1
_TWO_M64 = 2.0**-64


@dataclass(frozen=True)
class FixedFrac:
    """A real number in [0, 1) as ``mantissa / 2**bits`` with error ``err_ulps * 2**-bits``."""

    mantissa: int
    bits: int = DEFAULT_BITS
    err_ulps: int = 0

    def __post_init__(self):
        if not 0 <= self.mantissa < (1 << self.bits):
            raise ValueError("mantissa out of range for the given bit width")
        if self.err_ulps < 0:
            raise ValueError("error bound must be non-negative")

    @classmethod
    def from_fraction(cls, value, bits: int = DEFAULT_BITS) -> FixedFrac:
        """Fractional part of an exact rational (or float); error is one ulp unless exact."""
        value = Fraction(value)
        frac = value - math.floor(value)
        scaled = frac * (1 << bits)
        mantissa = math.floor(scaled)
        return cls(mantissa, bits, 0 if mantissa == scaled else 1)

    @property
    def value(self) -> float:
        return math.ldexp(float(self.mantissa), -self.bits) if self.mantissa else 0.0

    @property
    def err(self) -> float:
        return math.ldexp(float(self.err_ulps), -self.bits)

    def as_fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.bits)

    def __add__(self, other: FixedFrac) -> FixedFrac:
        if not isinstance(other, FixedFrac):
            return NotImplemented
        if other.bits != self.bits:
            raise ValueError("cannot add FixedFrac values of different widths")
        m = (self.mantissa + other.mantissa) & ((1 << self.bits) - 1)
        return FixedFrac(m, self.bits, self.err_ulps + other.err_ulps)

    def __neg__(self) -> FixedFrac:
        m = (-self.mantissa) & ((1 << self.bits) - 1)
        return FixedFrac(m, self.bits, self.err_ulps)

    def words(self) -> tuple[int, int]:
        """Top two 64-bit words of the fraction (bits 1..64 and 65..128)."""
        shifted = self.mantissa << 128 >> self.bits if self.bits < 128 else self.mantissa >> (self.bits - 128)
        return shifted >> 64, shifted & _MASK64


def frac_norm(t: FixedFrac) -> float:
    """Distance to the nearest integer; a tie at exactly 1/2 returns 1/2."""
    half = 1 << (t.bits - 1)
    m = t.mantissa if t.mantissa <= half else (1 << t.bits) - t.mantissa
    return math.ldexp(float(m), -t.bits) if m else 0.0


def e_unit(t: FixedFrac) -> tuple[float, float]:
    """The point ``(cos 2 pi t, sin 2 pi t)`` on the unit circle."""
    v = t.value
    # reduce to [-1/2, 1/2) before scaling by 2 pi
    if v >= 0.5:
        v -= 1.0
    angle = 2.0 * math.pi * v
    return math.cos(angle), math.sin(angle)


def mul_mod1(alpha: FixedFrac, n: int) -> FixedFrac:
    """``{n * alpha}`` by one exact full-width product.

    The error bound is ``|n| * alpha.err``.  ``n`` may be negative.
    """
    n = int(n)
    budget = 1 << (alpha.bits - GUARD_BITS)
    if abs(n) > budget:
        raise PrecisionBudgetExceeded(
            f"multiplier {n} exceeds 2^{alpha.bits - GUARD_BITS} for {alpha.bits}-bit carrier"
        )
    err = abs(n) * alpha.err_ulps
    if err > budget:
        raise PrecisionBudgetExceeded(f"error bound after multiplying by {n} leaves < {GUARD_BITS} bits")
    mantissa = (alpha.mantissa * n) % (1 << alpha.bits)
    return FixedFrac(mantissa, alpha.bits, err)


# --------------------------------------------------------------------------
# vectorised 64-bit path


def _mulhi64(a: np.ndarray, b: int) -> np.ndarray:
    """High 64 bits of ``a * b`` for uint64 ``a`` and a scalar below 2**64."""
    m32 = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    a_lo = a & m32
    a_hi = a >> s32
    b_lo = np.uint64(b & 0xFFFFFFFF)
    b_hi = np.uint64(b >> 32)
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> s32) + (lh & m32) + (hl & m32)
    return hh + (lh >> s32) + (hl >> s32) + (mid >> s32)


@dataclass(frozen=True)
class FracArray:
    """Elementwise fractional parts as 64-bit words ``w / 2**64``, with a shared error bound."""

    words: np.ndarray
    err: float

    def values(self) -> np.ndarray:
        return self.words.astype(np.float64) * _TWO_M64

    def norms(self) -> np.ndarray:
        neg = (~self.words) + np.uint64(1)
        return np.minimum(self.words, neg).astype(np.float64) * _TWO_M64

    def unit(self) -> np.ndarray:
        """``e(t)`` for every element, as complex128."""
        # signed reinterpretation centres the angle in [-pi, pi)
        centred = self.words.view(np.int64).astype(np.float64) * _TWO_M64
        return np.exp(2j * np.pi * centred)

    def shift(self, beta: FixedFrac) -> FracArray:
        hi, lo = beta.words()
        return FracArray(self.words + np.uint64(hi), self.err + beta.err + _TWO_M64)

    def __len__(self):
        return len(self.words)


def mul_mod1_array(alpha: FixedFrac, ns) -> FracArray:
    """Vectorised :func:`mul_mod1` returning 64-bit words.

    ``ns`` is any integer array with ``|n| < 2**63``.  The error bound is
    ``max|n| * (alpha.err + 2**-128) + 2**-63``.
    """
    ns = np.asarray(ns)
    if ns.dtype.kind not in "iu":
        raise TypeError("mul_mod1_array needs an integer array")
    ns = ns.astype(np.int64, copy=False)
    hi, lo = alpha.words()
    neg = ns < 0
    a = np.abs(ns).astype(np.uint64)
    with np.errstate(over="ignore"):
        w = a * np.uint64(hi) + _mulhi64(a, lo)
        w = np.where(neg, (~w) + np.uint64(1), w)
    nmax = float(np.abs(ns).max()) if ns.size else 0.0
    err = nmax * (alpha.err + 2.0**-128) + 2.0 * _TWO_M64
    return FracArray(w, err)


# --------------------------------------------------------------------------
# specifications of irrationals


@dataclass(frozen=True)
class IrrationalSpec:
    """How an irrational enters the toolkit.

    ``kind`` is one of ``"sqrt"``, ``"phi"``, ``"dec"`` or ``"cf"``.  For
    ``cf`` the payload is ``(terms, periodic)``; a periodic list repeats every
    term after the integer part.
    """

    kind: str
    payload: object = None
    text: str = ""

    def __post_init__(self):
        if self.kind == "sqrt":
            n = self.payload
            if not isinstance(n, int) or n <= 0 or math.isqrt(n) ** 2 == n:
                raise InvalidSpec(f"sqrt radicand must be a positive non-square integer, got {n!r}")
        elif self.kind == "phi":
            pass
        elif self.kind == "dec":
            if not isinstance(self.payload, str) or not _DEC_RE.fullmatch(self.payload):
                raise InvalidSpec(f"malformed decimal {self.payload!r}")
        elif self.kind == "cf":
            terms, periodic = self.payload
            if len(terms) < 2:
                raise InvalidSpec("continued fraction needs at least one partial quotient after a0")
            if any(t < 1 for t in terms[1:]):
                raise InvalidSpec("partial quotients after the first must be >= 1")
        else:
            raise InvalidSpec(f"unknown spec kind {self.kind!r}")

    def __str__(self):
        return self.text or f"{self.kind}:{self.payload}"

    def integer_part(self) -> int:
        if self.kind == "sqrt":
            return math.isqrt(self.payload)
        if self.kind == "phi":
            return 1
        if self.kind == "dec":
            return math.floor(Fraction(self.payload))
        return self.payload[0][0]


_DEC_RE = re.compile(r"[+-]?\d+(\.\d+)?")


def parse_spec(text: str) -> IrrationalSpec:
    """Parse ``sqrt:<int>``, ``phi``, ``dec:<digits>`` or ``cf:<a0>,<a1>,...[,...]``."""
    text = text.strip()
    if text == "phi":
        return IrrationalSpec("phi", None, text)
    kind, sep, rest = text.partition(":")
    if not sep:
        raise InvalidSpec(f"cannot parse irrational spec {text!r}")
    if kind == "sqrt":
        try:
            n = int(rest)
        except ValueError:
            raise InvalidSpec(f"bad radicand {rest!r}") from None
        return IrrationalSpec("sqrt", n, text)
    if kind == "dec":
        return IrrationalSpec("dec", rest, text)
    if kind == "cf":
        parts = [p.strip() for p in rest.split(",") if p.strip()]
        periodic = bool(parts) and parts[-1] in ("...", "…")
        if periodic:
            parts = parts[:-1]
        try:
            terms = tuple(int(p) for p in parts)
        except ValueError:
            raise InvalidSpec(f"bad continued fraction terms {rest!r}") from None
        return IrrationalSpec("cf", (terms, periodic), text)
    raise InvalidSpec(f"unknown spec kind {kind!r}")


def _cf_value(terms) -> tuple[int, int, int]:
    """Last two convergent denominators and numerator of a finite CF."""
    p0, q0, p1, q1 = 1, 0, terms[0], 1
    for a in terms[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
    return p1, q1, q0


def realize(spec: IrrationalSpec, bits: int = DEFAULT_BITS) -> FixedFrac:
    """Fractional part of ``spec`` to ``bits`` bits with error at most ``2**-(bits-2)``."""
    if bits < 64:
        raise ValueError("need at least 64 fractional bits")
    if spec.kind == "sqrt":
        n = spec.payload
        full = math.isqrt(n << (2 * bits + 8)) >> 4
        return FixedFrac(full - (math.isqrt(n) << bits), bits, 1)
    if spec.kind == "phi":
        full = (1 << (bits - 1)) + math.isqrt(5 << (2 * bits - 2))
        return FixedFrac(full - (1 << bits), bits, 1)
    if spec.kind == "dec":
        digits = spec.payload.lstrip("+-").replace(".", "").lstrip("0")
        if len(digits) < math.ceil(bits / 3):
            raise InsufficientPrecision(
                f"decimal spec has {len(digits)} significant digits, {bits}-bit carrier needs {math.ceil(bits / 3)}"
            )
        value = Fraction(spec.payload)
        _, _, fpart = spec.payload.partition(".")
        err_ulps = -((-(1 << bits)) // 10 ** len(fpart)) + 1
        if err_ulps > 4:
            raise InsufficientPrecision("decimal spec too short to certify the fractional part")
        frac = value - math.floor(value)
        return FixedFrac(math.floor(frac * (1 << bits)), bits, err_ulps)
    terms, periodic = spec.payload
    terms = list(terms)
    if periodic:
        period = terms[1:]
        while True:
            p, q, q_prev = _cf_value(terms)
            if q * (q + q_prev) > (1 << (bits + 4)):
                break
            terms.extend(period)
    p, q, q_prev = _cf_value(terms)
    # every real with this CF prefix lies within 1/(q(q+q')) of p/q
    width = Fraction(1, q * (q + q_prev))
    err_ulps = math.ceil(width * (1 << bits)) + 1
    if err_ulps > 4:
        raise InsufficientPrecision(
            f"continued fraction prefix only pins the value to {float(width):.3g}; add terms or mark it periodic"
        )
    frac = Fraction(p, q) - math.floor(Fraction(p, q))
    return FixedFrac(math.floor(frac * (1 << bits)), bits, err_ulps)


def as_fixed(alpha, bits: int = DEFAULT_BITS) -> FixedFrac:
    """Accept a FixedFrac, an IrrationalSpec, a spec string or an exact number."""
    if isinstance(alpha, FixedFrac):
        return alpha
    if isinstance(alpha, IrrationalSpec):
        return realize(alpha, bits)
    if isinstance(alpha, str):
        return realize(parse_spec(alpha), bits)
    return FixedFrac.from_fraction(alpha, bits)
