"""Segmented sieving and the classical arithmetic functions.

Scalar functions (:func:`mangoldt`, :func:`tau_k`, :func:`euler_phi`,
:func:`square_part`) factor through a least-prime-factor table when one is
supplied and fall back to trial division otherwise.  The ``*_segment``
functions evaluate the same quantities over whole ranges with numpy.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb, isqrt, log
from pathlib import Path

import numpy as np

from .errors import InvalidInput, SegmentTooLarge

SEGMENT_CAP = 1 << 26


@lru_cache(maxsize=8)
def small_primes(limit: int) -> np.ndarray:
    """All primes ``<= limit`` as int64 (plain Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _check_range(lo: int, hi: int, cap: int, strict: bool = False) -> None:
    if not (1 <= lo < hi if strict else 1 <= lo <= hi):
        raise InvalidInput(f"segment needs 1 <= lo {'<' if strict else '<='} hi, got [{lo}, {hi}]")
    if hi - lo + 1 > cap:
        raise SegmentTooLarge(f"segment of {hi - lo + 1} entries exceeds cap {cap}")


def prime_flags(lo: int, hi: int, cap: int = SEGMENT_CAP) -> np.ndarray:
    """Boolean primality of every ``n`` in ``[lo, hi]``."""
    _check_range(lo, hi, cap)
    flags = np.ones(hi - lo + 1, dtype=bool)
    for n in range(lo, min(hi, 1) + 1):
        flags[n - lo] = False
    for p in small_primes(isqrt(hi)):
        p = int(p)
        start = max(p * p, -(-lo // p) * p)
        flags[start - lo :: p] = False
    return flags


@dataclass(frozen=True)
class SquarePart:
    n: int
    r: int
    s: int


@dataclass(frozen=True)
class ArithTables:
    """Least-prime-factor table for ``lo <= n <= hi``.

    ``raw[i] == 0`` marks ``lo + i`` as prime (its own least prime factor);
    ``lpf(1)`` returns the sentinel 1.
    """

    lo: int
    hi: int
    raw: np.ndarray

    def _index(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise InvalidInput(f"{n} outside table range [{self.lo}, {self.hi}]")
        return n - self.lo

    def lpf(self, n: int) -> int:
        if n == 1:
            return 1
        v = int(self.raw[self._index(n)])
        return n if v == 0 else v

    def is_prime(self, n: int) -> bool:
        return n > 1 and int(self.raw[self._index(n)]) == 0

    @cached_property
    def numbers(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    @cached_property
    def prime_mask(self) -> np.ndarray:
        mask = self.raw == 0
        if self.lo == 1:
            mask[0] = False
        return mask

    def primes(self) -> np.ndarray:
        return self.numbers[self.prime_mask]

    def factor(self, n: int) -> list[tuple[int, int]]:
        """Prime factorisation, rolling to trial division once ``n`` leaves the table."""
        out: list[tuple[int, int]] = []
        while n > 1 and self.lo <= n <= self.hi:
            p = self.lpf(n)
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        if n > 1:
            start = out[-1][0] + 1 if out else 2
            out.extend(_trial_factor(n, start))
        return out

    @cached_property
    def mangoldt_values(self) -> np.ndarray:
        return mangoldt_segment(self.lo, self.hi)

    @cached_property
    def phi_values(self) -> np.ndarray:
        return phi_segment(self.lo, self.hi)


def sieve_segment(lo: int, hi: int, cap: int = SEGMENT_CAP) -> ArithTables:
    """Exact least-prime-factor table over ``[lo, hi]``."""
    _check_range(lo, hi, cap, strict=True)
    dtype = np.uint32 if isqrt(hi) < 2**32 else np.uint64
    raw = np.zeros(hi - lo + 1, dtype=dtype)
    for p in small_primes(isqrt(hi)):
        p = int(p)
        start = max(p * p, -(-lo // p) * p)
        view = raw[start - lo :: p]
        view[view == 0] = p
    return ArithTables(lo, hi, raw)


def _trial_factor(n: int, start: int = 2) -> list[tuple[int, int]]:
    out = []
    p = max(2, start)
    if p == 2:
        e = 0
        while n % 2 == 0:
            n //= 2
            e += 1
        if e:
            out.append((2, e))
        p = 3
    if p % 2 == 0:
        p += 1
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 2
    if n > 1:
        out.append((n, 1))
    return out


def factorize(n: int, tables: ArithTables | None = None) -> list[tuple[int, int]]:
    if n < 1:
        raise InvalidInput(f"cannot factor {n}")
    if tables is not None and tables.lo <= n <= tables.hi:
        return tables.factor(n)
    return _trial_factor(n)


def mangoldt(n: int, tables: ArithTables | None = None) -> float:
    if n < 1:
        raise InvalidInput("mangoldt needs n >= 1")
    if n == 1:
        return 0.0
    f = factorize(n, tables)
    return log(f[0][0]) if len(f) == 1 else 0.0


def tau_k(n: int, k: int = 2, tables: ArithTables | None = None) -> int:
    """Number of ordered ``k``-tuples with product ``n``, from the exponent vector."""
    if n < 1 or k < 1:
        raise InvalidInput("tau_k needs n >= 1 and k >= 1")
    out = 1
    for _, e in factorize(n, tables) if n > 1 else ():
        out *= comb(e + k - 1, k - 1)
    return out


def euler_phi(n: int, tables: ArithTables | None = None) -> int:
    if n < 1:
        raise InvalidInput("euler_phi needs n >= 1")
    out = 1
    for p, e in factorize(n, tables) if n > 1 else ():
        out *= p ** (e - 1) * (p - 1)
    return out


def mobius(n: int) -> int:
    f = factorize(n) if n > 1 else []
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def square_part(n: int, tables: ArithTables | None = None) -> SquarePart:
    """``n = s * r**2`` with ``r`` maximal, hence ``s`` squarefree."""
    r = 1
    for p, e in factorize(n, tables) if n > 1 else ():
        r *= p ** (e // 2)
    return SquarePart(n, r, n // (r * r))


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for ``n < 3.3 * 10**24``."""
    if n < 2:
        return False
    bases = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in bases:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in bases:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# --------------------------------------------------------------------------
# vectorised segment functions


def _prime_power_exponents(lo: int, hi: int):
    """Yield ``(p, idx, e)``: positions of multiples of each prime ``p <= sqrt(hi)`` and their exponents."""
    length = hi - lo + 1
    for p in small_primes(isqrt(hi)):
        p = int(p)
        s = (-lo) % p
        idx = np.arange(s, length, p)
        if idx.size == 0:
            continue
        e = np.ones(idx.size, dtype=np.int64)
        pk = p * p
        while pk <= hi:
            s2 = (-lo) % pk
            e[(np.arange(s2, length, pk) - s) // p] += 1
            pk *= p
        yield p, idx, e


def mangoldt_segment(lo: int, hi: int, cap: int = SEGMENT_CAP) -> np.ndarray:
    """``Lambda(n)`` for ``n`` in ``[lo, hi]`` as float64."""
    flags = prime_flags(lo, hi, cap)
    out = np.zeros(hi - lo + 1, dtype=np.float64)
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    out[flags] = np.log(ns[flags].astype(np.float64))
    for p in small_primes(isqrt(hi)):
        p = int(p)
        lp = float(np.log(np.float64(p)))
        pk = p * p
        while pk <= hi:
            if pk >= lo:
                out[pk - lo] = lp
            pk *= p
    return out


def tau_k_segment(lo: int, hi: int, k: int = 2, cap: int = SEGMENT_CAP) -> np.ndarray:
    _check_range(lo, hi, cap)
    rem = np.arange(lo, hi + 1, dtype=np.int64)
    out = np.ones(rem.size, dtype=np.int64)
    table = np.array([comb(e + k - 1, k - 1) for e in range(64)], dtype=np.int64)
    for p, idx, e in _prime_power_exponents(lo, hi):
        out[idx] *= table[e]
        rem[idx] //= np.power(p, e)
    out[rem > 1] *= k
    return out


def phi_segment(lo: int, hi: int, cap: int = SEGMENT_CAP) -> np.ndarray:
    _check_range(lo, hi, cap)
    rem = np.arange(lo, hi + 1, dtype=np.int64)
    out = rem.copy()
    for p, idx, e in _prime_power_exponents(lo, hi):
        out[idx] = out[idx] // p * (p - 1)
        rem[idx] //= np.power(p, e)
    big = rem > 1
    out[big] = out[big] // rem[big] * (rem[big] - 1)
    return out


def square_part_segment(lo: int, hi: int, cap: int = SEGMENT_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(r, s)`` with ``n = s * r**2`` for every ``n`` in ``[lo, hi]``."""
    _check_range(lo, hi, cap)
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    r = np.ones(ns.size, dtype=np.int64)
    for p, idx, e in _prime_power_exponents(lo, hi):
        r[idx] *= np.power(p, e // 2)
    return r, ns // (r * r)


def mobius_segment(n: int) -> np.ndarray:
    """``mu(0..n)`` (index 0 unused, set to 0)."""
    mu = np.ones(n + 1, dtype=np.int64)
    mu[0] = 0
    for p in small_primes(n):
        p = int(p)
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


@lru_cache(maxsize=4)
def _mangoldt_prefix(x: int) -> np.ndarray:
    out = np.zeros(x + 1, dtype=np.float64)
    if x >= 2:
        out[2:] = mangoldt_segment(2, x)
    return out


def psi_terms(lo: int, hi: int, d: int, a: int, lam: np.ndarray | None = None, lam_lo: int | None = None) -> np.ndarray:
    """The values ``Lambda(n)`` for ``lo < n <= hi``, ``n == a (mod d)``.

    ``lam`` optionally supplies a precomputed table whose first entry is at
    ``lam_lo``; it must cover ``(lo, hi]``.
    """
    if lam is None:
        lam, lam_lo = _mangoldt_prefix(hi), 0
    first = lo + 1 + ((a - lo - 1) % d)
    if first > hi:
        return np.zeros(0)
    return lam[first - lam_lo : hi - lam_lo + 1 : d]


def chebyshev_psi(x: int, d: int = 1, a: int = 0) -> float:
    """``sum of Lambda(n)`` over ``n <= x`` with ``n == a (mod d)``, correctly rounded."""
    if x < 1 or d < 1 or not 0 <= a < d:
        raise InvalidInput("chebyshev_psi needs x >= 1, d >= 1, 0 <= a < d")
    if x < 2:
        return 0.0
    return math.fsum(psi_terms(0, x, d, a))


@dataclass(frozen=True)
class TauMoment:
    X: int
    k: int
    l: int
    total: int
    envelope: float
    ratio: float


def tau_moment_check(X: int, k: int = 2, l: int = 1) -> TauMoment:
    """``sum_{n<=X} tau_k(n)**l`` against ``X (log X)**(k**l - 1)``."""
    if X < 1:
        raise InvalidInput("X must be >= 1")
    if X == 1:
        total = 1
    else:
        vals = tau_k_segment(1, X, k)
        total = int(np.sum(vals.astype(object) ** l)) if l > 1 else int(vals.sum())
    envelope = X * log(X) ** (k**l - 1) if X > 1 else 1.0
    return TauMoment(X, k, l, total, envelope, total / envelope)


# --------------------------------------------------------------------------
# on-disk primality cache

_CACHE_MAGIC = b"QESV"
_CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def save_sieve_cache(path, lo: int, hi: int, flags: np.ndarray | None = None) -> None:
    """Write the odd-number primality bitset of ``[lo, hi]`` (2 is implied when in range)."""
    if flags is None:
        flags = prime_flags(lo, hi)
    first_odd = lo | 1
    odd = flags[first_odd - lo :: 2]
    payload = np.packbits(odd, bitorder="little").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION, lo, hi))
        fh.write(payload)


def load_sieve_cache(path) -> tuple[int, int, np.ndarray]:
    """Read a cache written by :func:`save_sieve_cache`; returns ``(lo, hi, flags)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InvalidInput(f"sieve cache {path} is truncated")
    magic, version, lo, hi = _HEADER.unpack_from(data)
    if magic != _CACHE_MAGIC or version != _CACHE_VERSION:
        raise InvalidInput(f"sieve cache {path} has bad magic or version")
    if not 1 <= lo < hi:
        raise InvalidInput(f"sieve cache {path} has invalid bounds [{lo}, {hi}]")
    first_odd = lo | 1
    n_odd = (hi - first_odd) // 2 + 1 if hi >= first_odd else 0
    payload = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if payload.size != (n_odd + 7) // 8:
        raise InvalidInput(f"sieve cache {path} payload length does not match its bounds")
    odd = np.unpackbits(payload, bitorder="little")[:n_odd].astype(bool)
    flags = np.zeros(hi - lo + 1, dtype=bool)
    flags[first_odd - lo :: 2] = odd
    if lo <= 2 <= hi:
        flags[2 - lo] = True
    return lo, hi, flags


def primes_between(lo: int, hi: int, cache=None) -> np.ndarray:
    """Primes in ``[lo, hi]``; with ``cache`` a path, read it when it covers the range, else write it."""
    lo = max(lo, 1)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    if cache is not None:
        path = Path(cache)
        if path.exists():
            c_lo, c_hi, flags = load_sieve_cache(path)
            if c_lo <= lo and hi <= c_hi:
                sub = flags[lo - c_lo : hi - c_lo + 1]
                return np.flatnonzero(sub).astype(np.int64) + lo
        flags = prime_flags(lo, hi)
        save_sieve_cache(path, lo, hi, flags)
    else:
        flags = prime_flags(lo, hi)
    return np.flatnonzero(flags).astype(np.int64) + lo
