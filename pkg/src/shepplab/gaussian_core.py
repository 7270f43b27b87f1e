"""Scalar kernels: fBm covariance, fGn autocovariance, normal tail, Gumbel law.

Every power ``x**(2H)`` goes through :func:`hpow`, which evaluates
``exp(2H * log x)`` and returns an exact zero at ``x = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "HurstIndex",
    "as_hurst",
    "hpow",
    "fbm_cov",
    "fbm_cov_matrix",
    "fgn_autocov",
    "normal_survival",
    "log_normal_survival",
    "log_scaled_survival",
    "gumbel_cdf",
    "SURVIVAL_SWITCH",
]

# Above this threshold Psi switches from erfc to the Mills-ratio continued fraction.
SURVIVAL_SWITCH = 8.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class HurstIndex:
    """Hurst index strictly inside (0, 1).

    The closed endpoints are rejected rather than clamped.
    """

    h: float

    def __post_init__(self):
        h = float(self.h)
        if not math.isfinite(h) or not 0.0 < h < 1.0:
            raise DomainError(f"Hurst index must lie in the open interval (0, 1), got {self.h!r}")
        object.__setattr__(self, "h", h)

    @property
    def is_short_range(self) -> bool:
        return self.h < 0.5

    @property
    def is_brownian(self) -> bool:
        return self.h == 0.5

    @property
    def is_theorem_regime(self) -> bool:
        return self.h < 0.5

    def __float__(self) -> float:
        return self.h


def as_hurst(h) -> HurstIndex:
    return h if isinstance(h, HurstIndex) else HurstIndex(h)


def hpow(x, p):
    """``x**p`` for ``x >= 0`` as ``exp(p*log x)``, with ``0**p = 0``."""
    if np.ndim(x) == 0:
        x = float(x)
        return 0.0 if x == 0.0 else math.exp(p * math.log(x))
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(p * np.log(x[pos]))
    return out


def fbm_cov(t, s, h) -> float:
    """Covariance of fractional Brownian motion at times ``t`` and ``s``."""
    two_h = 2.0 * as_hurst(h).h
    t = float(t)
    s = float(s)
    if t < 0 or s < 0 or not (math.isfinite(t) and math.isfinite(s)):
        raise DomainError(f"fbm_cov needs finite nonnegative times, got t={t}, s={s}")
    return 0.5 * (hpow(t, two_h) + hpow(s, two_h) - hpow(abs(t - s), two_h))


def fbm_cov_matrix(times, h) -> np.ndarray:
    """Covariance matrix of ``B_H`` at the given (nonnegative) times."""
    two_h = 2.0 * as_hurst(h).h
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise DomainError("fbm_cov_matrix needs finite nonnegative times")
    p = hpow(times, two_h)
    lag = hpow(np.abs(times[:, None] - times[None, :]), two_h)
    return 0.5 * (p[:, None] + p[None, :] - lag)


def fgn_autocov(k, h):
    """Autocovariance at integer lag ``k >= 0`` of unit-spacing fractional Gaussian noise.

    Accepts a scalar or an integer array of lags. For ``k >= 2`` the second
    difference is evaluated as ``k^2H/2 * [expm1(2H log1p(1/k)) + expm1(2H log1p(-1/k))]``
    to avoid cancellation at long lags.
    """
    two_h = 2.0 * as_hurst(h).h
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise DomainError(f"fgn_autocov needs lag >= 0, got {k}")
    if k_arr.ndim == 0:
        k = int(k)
        if k < 2:
            return 0.5 * (hpow(k + 1, two_h) - 2.0 * hpow(k, two_h) + hpow(abs(k - 1), two_h))
        x = 1.0 / k
        return 0.5 * hpow(k, two_h) * (math.expm1(two_h * math.log1p(x))
                                       + math.expm1(two_h * math.log1p(-x)))
    kf = k_arr.astype(float)
    out = 0.5 * (hpow(kf + 1, two_h) - 2.0 * hpow(kf, two_h) + hpow(np.abs(kf - 1), two_h))
    far = kf >= 2
    if np.any(far):
        x = 1.0 / kf[far]
        out[far] = 0.5 * hpow(kf[far], two_h) * (np.expm1(two_h * np.log1p(x))
                                                 + np.expm1(two_h * np.log1p(-x)))
    return out


def _mills_ratio_cf(u: float) -> float:
    # Psi(u)/phi(u) = 1/(u + 1/(u + 2/(u + 3/(u + ...)))), evaluated backwards.
    acc = u
    for k in range(80, 0, -1):
        acc = u + k / acc
    return 1.0 / acc


def _check_finite(u) -> float:
    u = float(u)
    if not math.isfinite(u):
        raise DomainError(f"normal survival needs a finite argument, got {u}")
    return u


def normal_survival(u) -> float:
    """``P(N(0,1) > u)``."""
    u = _check_finite(u)
    if u > SURVIVAL_SWITCH:
        return math.exp(-0.5 * u * u - _LOG_SQRT_2PI) * _mills_ratio_cf(u)
    return 0.5 * math.erfc(u / math.sqrt(2.0))


def log_normal_survival(u) -> float:
    """``log P(N(0,1) > u)``, finite for large ``u``."""
    u = _check_finite(u)
    if u > SURVIVAL_SWITCH:
        return -0.5 * u * u - _LOG_SQRT_2PI + math.log(_mills_ratio_cf(u))
    if u < -SURVIVAL_SWITCH:
        return math.log1p(-normal_survival(-u))
    return math.log(0.5 * math.erfc(u / math.sqrt(2.0)))


def log_scaled_survival(u) -> float:
    """``log(Psi(u)) + u^2/2``, computed without cancellation for large ``u``."""
    u = _check_finite(u)
    if u > SURVIVAL_SWITCH:
        return -_LOG_SQRT_2PI + math.log(_mills_ratio_cf(u))
    return math.log(0.5 * math.erfc(u / math.sqrt(2.0))) + 0.5 * u * u


def gumbel_cdf(x):
    """Standard Gumbel distribution function ``exp(-exp(-x))``; vectorised."""
    if np.ndim(x) == 0:
        return math.exp(-math.exp(-float(x))) if float(x) > -700 else 0.0
    with np.errstate(over="ignore"):
        return np.exp(-np.exp(-np.asarray(x, dtype=float)))
