"""Closed-form tail approximations for the Shepp statistic.

All evaluators work in log space and return :class:`LogValue` pairs, since
``u**(2/H - 2)`` overflows long before the Gaussian factor underflows.
Pickands-type constants are always inputs; nothing here hardcodes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, RegimeError
from .gaussian_core import HurstIndex, as_hurst, log_normal_survival, log_scaled_survival

__all__ = [
    "LogValue",
    "AsymptoticParams",
    "theorem21_tail",
    "theorem21_prefactor",
    "theorem21_crossover",
    "zholud_tail",
    "gumbel_scale",
    "gumbel_norming",
    "lemma31_bound",
    "lemma31_ratio",
]

_LOG_2PI = math.log(2.0 * math.pi)


class LogValue(NamedTuple):
    value: float
    log: float

    @classmethod
    def from_log(cls, log_value: float) -> "LogValue":
        return cls(math.exp(log_value) if log_value > -math.inf else 0.0, log_value)


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class AsymptoticParams:
    """Parameters of the large-``u`` tail formula.

    ``pickands`` is the Pickands constant of index ``2H`` (not squared);
    ``zholud_const`` only matters for ``H = 1/2``.
    """

    h: HurstIndex
    T: float
    pickands: float | None = None
    zholud_const: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "h", as_hurst(self.h))
        if not self.T > 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if self.pickands is not None and self.pickands < 0:
            raise DomainError(f"Pickands constant must be >= 0, got {self.pickands}")
        if self.zholud_const is not None and self.zholud_const < 0:
            raise DomainError(f"zholud_const must be >= 0, got {self.zholud_const}")


def _require_theorem_regime(h: HurstIndex):
    if not h.is_theorem_regime:
        raise RegimeError(f"the short-range tail formula needs H < 1/2, got H={h.h}")


def theorem21_prefactor(h, T: float, pickands: float) -> float:
    """Log of ``(T/H) (1/2)^(1/H) pickands^2``."""
    h = as_hurst(h).h
    return math.log(T) - math.log(h) - math.log(2.0) / h + 2.0 * _safe_log(pickands)


def theorem21_tail(params: AsymptoticParams, u: float) -> LogValue:
    """``(T/H) (1/2)^(1/H) P^2 u^(2/H - 2) Psi(u)`` with ``P`` the Pickands constant."""
    _require_theorem_regime(params.h)
    if params.pickands is None:
        raise ConfigurationError("theorem21_tail needs a Pickands constant")
    if not u > 0:
        raise DomainError(f"threshold u must be positive, got {u}")
    h = params.h.h
    lg = theorem21_prefactor(h, params.T, params.pickands)
    lg += (2.0 / h - 2.0) * math.log(u) + log_normal_survival(u)
    return LogValue.from_log(lg)


def theorem21_crossover(h) -> float:
    """Threshold ``u0`` beyond which the tail formula decreases in ``u``.

    Solves ``(2/H - 2)/u = phi(u)/Psi(u)``; below ``u0`` the polynomial factor wins.
    """
    h = as_hurst(h)
    _require_theorem_regime(h)
    k = 2.0 / h.h - 2.0

    def slope(u):
        inv_mills = math.exp(-0.5 * u * u - 0.5 * _LOG_2PI - log_normal_survival(u))
        return k / u - inv_mills

    return brentq(slope, 1e-8, 1e3, xtol=1e-14, rtol=1e-14)


def zholud_tail(T: float, u: float, htilde: float) -> LogValue:
    """``htilde * T * u^2 * Psi(u)`` (Brownian case)."""
    if not T > 0 or not u > 0 or htilde < 0:
        raise DomainError("zholud_tail needs T > 0, u > 0, htilde >= 0")
    lg = _safe_log(htilde) + math.log(T) + 2.0 * math.log(u) + log_normal_survival(u)
    return LogValue.from_log(lg)


def gumbel_scale(T: float) -> float:
    """``a_T = sqrt(2 ln T)`` for ``T > 1``."""
    if not T > 1:
        raise DomainError(f"a_T needs T > 1, got {T}")
    return math.sqrt(2.0 * math.log(T))


def gumbel_norming(h, T: float, pickands: float) -> tuple[float, float]:
    """Norming constants ``(a_T, b_T)`` for the Gumbel limit of ``M_H(T)``."""
    h = as_hurst(h)
    _require_theorem_regime(h)
    if not T > math.e:
        raise DomainError(f"b_T needs T > e (ln ln T defined and positive), got {T}")
    if not pickands > 0:
        raise DomainError(f"b_T needs a positive Pickands constant, got {pickands}")
    a = gumbel_scale(T)
    const = -1.5 * math.log(2.0) + 2.0 * math.log(pickands) - math.log(h.h) - 0.5 * _LOG_2PI
    b = a + ((1.0 / h.h - 1.5) * math.log(math.log(T)) + const) / a
    return a, b


def lemma31_bound(h, T: float, u: float, eps: float | None = None, C: float = 1.0) -> LogValue:
    """``C T u^(2/H - 1) exp(-u^2/2 - (H - eps) ln(u)^2)``.

    Upper bound for exceedances when window lengths stay below ``1 - ln(u)^2/u^2``.
    ``eps`` defaults to ``H/2``.
    """
    h = as_hurst(h).h
    if eps is None:
        eps = h / 2.0
    if not 0.0 < eps < h:
        raise DomainError(f"eps must lie in (0, H) = (0, {h}), got {eps}")
    if not C > 0 or not T > 0:
        raise DomainError("lemma31_bound needs C > 0 and T > 0")
    if not u > 0 or math.log(u) ** 2 / u**2 >= 1.0:
        raise DomainError(f"lemma31_bound needs ln(u)^2/u^2 < 1, got u={u}")
    lu = math.log(u)
    lg = math.log(C) + math.log(T) + (2.0 / h - 1.0) * lu - 0.5 * u * u - (h - eps) * lu * lu
    return LogValue.from_log(lg)


def lemma31_ratio(h, T: float, u: float, pickands: float, eps: float | None = None,
                  C: float = 1.0) -> LogValue:
    """``lemma31_bound / theorem21_tail``; tends to 0 as ``u`` grows.

    The common ``exp(-u^2/2)`` is cancelled analytically, so the result stays
    accurate for very large ``u``.
    """
    hv = as_hurst(h)
    lemma31_bound(hv, T, u, eps, C)  # argument validation
    _require_theorem_regime(hv)
    if not pickands > 0:
        raise DomainError(f"the ratio needs a positive Pickands constant, got {pickands}")
    h = hv.h
    eps = h / 2.0 if eps is None else eps
    lu = math.log(u)
    lg = (math.log(C) + math.log(T) + lu - (h - eps) * lu * lu
          - theorem21_prefactor(h, T, pickands) - log_scaled_survival(u))
    return LogValue.from_log(lg)
