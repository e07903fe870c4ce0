"""The periodic smoothed indicator ``chi`` and its Fourier coefficients.

``chi`` is the indicator of ``[-w, w]`` (``w = delta / 2``) convolved with
``r`` copies of the uniform density on ``[-Delta/2, Delta/2]``, periodised
with period one.  Its coefficients are closed form::

    c(0) = delta,  c(k) = sin(2 pi k w) / (pi k) * sinc(k Delta) ** r

and the direct evaluation is a difference of two Irwin-Hall distribution
functions, evaluated as a B-spline so no alternating sums are involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import BSpline

from .errors import InvalidDelta, InvalidInput, TailTargetUnreachable

_EXPLICIT_TERMS = 1 << 14


@dataclass(frozen=True)
class BumpFunction:
    delta: float
    r: int
    Delta: float
    K: int
    x_scale: float

    @property
    def w(self) -> float:
        return self.delta / 2

    @property
    def support(self) -> float:
        """Half-width of the support of one period."""
        return self.w + self.r * self.Delta / 2

    def coeffs(self, k) -> np.ndarray:
        """Real, even coefficients ``c(k)`` for an integer array ``k``."""
        k = np.asarray(k, dtype=np.int64)
        kf = k.astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.sin(2 * np.pi * np.mod(kf * self.w, 1.0)) / (np.pi * kf) * np.sinc(kf * self.Delta) ** self.r
        return np.where(k == 0, self.delta, out)

    def c(self, k: int) -> float:
        return float(self.coeffs(np.array([k]))[0])

    def tail(self, K_from: int | None = None) -> float:
        return tail_bound(self, self.K if K_from is None else K_from)

    def max_abs_coeff(self, k_max: int | None = None) -> float:
        k_max = 10 * self.K if k_max is None else k_max
        return float(np.abs(self.coeffs(np.arange(0, k_max + 1))).max())


def _coeff_majorant(k: np.ndarray, delta: float, Delta: float, r: int) -> np.ndarray:
    kf = k.astype(np.float64)
    first = np.minimum(delta, 1.0 / (np.pi * kf))
    second = np.minimum(1.0, np.exp(-r * np.log(np.pi * kf * Delta)))
    return first * second


def _tail_bound(delta: float, Delta: float, r: int, K_from: int) -> float:
    if K_from < 1:
        raise InvalidInput("K_from must be >= 1")
    # both factors of the majorant are in their power-law regime from k_star on
    k_star = math.ceil(max(1 / (math.pi * delta), 1 / (math.pi * Delta)))
    n_end = max(K_from, k_star) + _EXPLICIT_TERMS
    ks = np.arange(K_from + 1, n_end + 1, dtype=np.int64)
    explicit = math.fsum(_coeff_majorant(ks, delta, Delta, r))
    # sum_{k > n_end} <= integral_{n_end}^inf (1/pi) (pi Delta)^-r t^(-r-1) dt
    log_int = -r * math.log(math.pi * Delta) - r * math.log(n_end) - math.log(math.pi * r)
    integral = math.exp(log_int) if log_int > -745 else 0.0
    return 2.0 * (explicit + integral) * (1 + 1e-12)


def tail_bound(chi: BumpFunction, K_from: int) -> float:
    """Rigorous upper bound for ``sum_{|k| > K_from} |c(k)|``."""
    return _tail_bound(chi.delta, chi.Delta, chi.r, K_from)


def build_bump(delta: float, x_scale: float, order: int | None = None) -> BumpFunction:
    """Construct ``chi`` with cutoff ``K = floor(delta**-1 log(x)**2)`` and tail at most ``1/x``.

    The mollifier half-width is ``min(delta/4, (1 - delta)/2)`` so one period
    never overlaps the next.  Without ``order`` the smallest smoothing order
    meeting the tail target is used.
    """
    if not 0 < delta < 1:
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    if x_scale < 16:
        raise InvalidInput("x_scale must be >= 16")
    half = min(delta / 4, (1 - delta) / 2)
    K = max(1, math.floor(math.log(x_scale) ** 2 / delta))
    target = 1.0 / x_scale
    r_max = max(math.ceil(2 * math.log(x_scale)), 64)
    candidates = [order] if order is not None else range(1, r_max + 1)
    best = None
    for r in candidates:
        Delta = 2 * half / r
        t = _tail_bound(delta, Delta, r, K)
        if best is None or t < best[1]:
            best = (r, t)
        if t <= target:
            return BumpFunction(delta, r, Delta, K, float(x_scale))
    raise TailTargetUnreachable(
        f"tail bound {best[1]:.3g} at K = {K} exceeds 1/x = {target:.3g} (best order r = {best[0]}); "
        "try a larger smoothing order or a smaller delta"
    )


@lru_cache(maxsize=64)
def _irwin_hall_cdf(r: int) -> BSpline:
    return BSpline.basis_element(np.arange(r + 1, dtype=np.float64), extrapolate=False).antiderivative()


def _cdf(r: int, u: np.ndarray) -> np.ndarray:
    out = np.where(u >= r, 1.0, 0.0)
    inside = (u > 0) & (u < r)
    if inside.any():
        out[inside] = _irwin_hall_cdf(r)(u[inside])
    return np.clip(out, 0.0, 1.0)


def eval_bump(chi: BumpFunction, t):
    """Direct (non-Fourier) value of ``chi`` at ``t``; scalar in, scalar out."""
    arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    s = np.abs(arr - np.floor(arr + 0.5))
    shift = chi.r / 2
    hi = _cdf(chi.r, (s + chi.w) / chi.Delta + shift)
    lo = _cdf(chi.r, (s - chi.w) / chi.Delta + shift)
    out = np.clip(hi - lo, 0.0, 1.0)
    return float(out[0]) if np.ndim(t) == 0 else out


def eval_fourier(chi: BumpFunction, t, K_trunc: int, chunk: int = 1 << 22):
    """``delta + sum_{0<|k|<=K_trunc} c(k) e(k t)``; the sine parts cancel since ``c`` is even."""
    if K_trunc < 0:
        raise InvalidInput("K_trunc must be >= 0")
    arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = np.full(arr.shape, chi.delta)
    if K_trunc:
        ks = np.arange(1, K_trunc + 1, dtype=np.int64)
        ck = chi.coeffs(ks)
        step = max(1, chunk // ks.size)
        for i in range(0, arr.size, step):
            part = arr[i : i + step]
            phase = np.mod(np.multiply.outer(part, ks.astype(np.float64)), 1.0)
            out[i : i + step] += 2.0 * (np.cos(2 * np.pi * phase) @ ck)
    return float(out[0]) if np.ndim(t) == 0 else out
