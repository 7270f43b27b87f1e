"""Incremental fractional Brownian field and its maxima on grids.

The window length ``tau`` and the location ``s`` live on the same grid as the
path (spacing ``1/m``), so the field is only ever read at sampled points. Grid
maxima underestimate the continuous supremum; ``m`` is reported with every
estimate and no correction is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .fbm_sim import FbmPath, PathGrid
from .gaussian_core import as_hurst, hpow
from .streams import RngStream

__all__ = [
    "SheppGridSpec",
    "incremental_field",
    "window_max",
    "window_max_bruteforce",
    "shepp_max",
    "standardized_shepp_max",
    "restricted_window",
    "restricted_shepp_max",
    "delta_u",
    "scan_count",
    "poisson_scan_max",
]

_GRID_EPS = 1e-9


def _grid_int(x: float, what: str) -> int:
    k = round(x)
    if abs(x - k) > _GRID_EPS * max(1.0, abs(x)):
        raise DomainError(f"{what} = {x} is not a whole number of grid steps")
    return int(k)


@dataclass(frozen=True)
class SheppGridSpec:
    """Discretisation of ``(tau, s) in [tau_min, tau_max] x [0, T]`` with step ``1/m``."""

    m: int
    T: float
    tau_min: float = 0.0
    tau_max: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"steps per unit m must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if not self.T > 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if not 0.0 <= self.tau_min <= self.tau_max <= 1.0:
            raise DomainError(
                f"need 0 <= tau_min <= tau_max <= 1, got [{self.tau_min}, {self.tau_max}]"
            )
        _grid_int(self.T * self.m, "T*m")
        if self.window < 1:
            raise DomainError(f"tau_max*m must round to at least one step, got {self.tau_max * self.m}")

    @property
    def dt(self) -> float:
        return 1.0 / self.m

    @property
    def s_steps(self) -> int:
        return _grid_int(self.T * self.m, "T*m")

    @property
    def window(self) -> int:
        return int(round(self.tau_max * self.m))

    @property
    def tau_lo(self) -> int:
        return int(round(self.tau_min * self.m))

    @property
    def n_steps(self) -> int:
        """Path length in steps: the field reads ``B`` up to ``T + tau_max``."""
        return self.s_steps + self.window

    @property
    def path_grid(self) -> PathGrid:
        return PathGrid(self.n_steps, self.dt)


def _values(path) -> np.ndarray:
    v = path.values if isinstance(path, FbmPath) else path
    return np.ascontiguousarray(v, dtype=float)


def incremental_field(path, tau_idx: int, s_idx: int) -> float:
    """``B(s + tau) - B(s)`` at grid indices."""
    v = _values(path)
    if tau_idx < 0 or s_idx < 0 or s_idx + tau_idx >= v.shape[0]:
        raise DomainError(
            f"indices s={s_idx}, tau={tau_idx} fall outside a path of {v.shape[0]} points"
        )
    return float(v[s_idx + tau_idx] - v[s_idx])


def _check_window(n_points: int, tau_lo: int, w: int, s_max: int):
    if w < 1 or tau_lo < 0 or tau_lo > w:
        raise DomainError(f"invalid window [{tau_lo}, {w}]")
    if w > n_points - 1:
        raise DomainError(f"window of {w} steps is longer than the path ({n_points - 1} steps)")
    if s_max < 0:
        raise DomainError(f"s_max must be >= 0, got {s_max}")


def window_max(values, w: int, tau_lo: int = 0, s_max: int | None = None) -> float:
    """Max of ``v[s+tau] - v[s]`` over ``tau in [tau_lo, w]``, ``s <= s_max``, in-path pairs.

    One pass over right endpoints with a sliding minimum (monotone deque);
    ``O(len(values))``. Equal, bit for bit, to :func:`window_max_bruteforce`.
    """
    v = _values(values)
    if s_max is None:
        s_max = v.shape[0] - 1
    _check_window(v.shape[0], tau_lo, w, s_max)
    return float(_kernels.window_max(v, int(tau_lo), int(w), int(s_max)))


def window_max_bruteforce(values, w: int, tau_lo: int = 0, s_max: int | None = None) -> float:
    """Reference double loop over ``(s, tau)``."""
    v = [float(x) for x in _values(values)]
    if s_max is None:
        s_max = len(v) - 1
    _check_window(len(v), tau_lo, w, s_max)
    best = -math.inf
    for s in range(0, min(s_max, len(v) - 1) + 1):
        for tau in range(tau_lo, min(w, len(v) - 1 - s) + 1):
            d = v[s + tau] - v[s]
            if d > best:
                best = d
    return best


def _check_path(path: FbmPath, spec: SheppGridSpec):
    if abs(path.grid.dt - spec.dt) > _GRID_EPS * spec.dt:
        raise DomainError(f"path spacing {path.grid.dt} does not match spec spacing {spec.dt}")
    if path.grid.n_steps < spec.n_steps:
        raise DomainError(
            f"path covers {path.grid.n_steps} steps, spec needs {spec.n_steps} (T + tau_max)"
        )


def shepp_max(path: FbmPath, spec: SheppGridSpec) -> float:
    """Grid version of ``M_H(T)``: the largest increment over the windows of ``spec``."""
    _check_path(path, spec)
    return window_max(path.values, spec.window, spec.tau_lo, spec.s_steps)


def standardized_shepp_max(path: FbmPath, spec: SheppGridSpec, h=None) -> float:
    """Max of ``(B(s+tau) - B(s)) / tau^H`` over the grid; needs ``tau_min > 0``."""
    if spec.tau_min <= 0 or spec.tau_lo < 1:
        raise DomainError("standardized maximum needs tau_min of at least one grid step")
    _check_path(path, spec)
    h = as_hurst(path.hurst if h is None else h).h
    scale = hpow(np.arange(spec.window + 1) * spec.dt, h)
    return float(
        _kernels.standardized_max(_values(path), spec.tau_lo, spec.window, spec.s_steps, scale)
    )


def delta_u(u: float) -> float:
    """Width ``ln(u)^2 / u^2`` of the excluded strip of window lengths near 1."""
    if not u > 1:
        raise DomainError(f"the restricted domain needs u > 1, got {u}")
    return math.log(u) ** 2 / u**2


def restricted_window(spec: SheppGridSpec, u: float) -> int:
    """Window in steps for ``tau <= 1 - delta_u``, rounded down to the grid."""
    w = int(math.floor((1.0 - delta_u(u)) * spec.m + _GRID_EPS))
    w = min(w, spec.window)
    if w < 1 or w < spec.tau_lo:
        raise DomainError(f"1 - delta_u is below one grid step at u={u}, m={spec.m}")
    return w


def restricted_shepp_max(path: FbmPath, spec: SheppGridSpec, u: float) -> float:
    _check_path(path, spec)
    return window_max(path.values, restricted_window(spec, u), spec.tau_lo, spec.s_steps)


def scan_count(events, tau: float, T: float) -> int:
    """Largest number of events in a window ``(s, s+tau]`` with ``0 <= s <= T``.

    The supremum is approached with the window's left edge just below an
    event in ``(0, T]`` (count of events in ``[e, e+tau)``) or at ``s = T``.
    Windows ending exactly on an event, ``(e - tau, e]``, are also counted so
    that rounding in ``e + tau`` cannot drop an event.
    """
    ev = np.sort(np.asarray(events, dtype=float))
    best = int(np.searchsorted(ev, T + tau, "right") - np.searchsorted(ev, T, "right"))
    left = ev[(ev > 0) & (ev <= T)]
    if left.size:
        lo = np.searchsorted(ev, left, "left")
        hi = np.searchsorted(ev, left + tau, "left")
        best = max(best, int(np.max(hi - lo)))
    right = ev[(ev - tau >= 0) & (ev - tau <= T)]
    if right.size:
        lo = np.searchsorted(ev, right - tau, "right")
        hi = np.searchsorted(ev, right, "right")
        best = max(best, int(np.max(hi - lo)))
    return best


def poisson_scan_max(lam: float, tau: float, T: float, rng: RngStream) -> float:
    """Normalised scan statistic ``(K(tau, T) - lam*tau) / sqrt(lam*tau)``."""
    if not (lam > 0 and tau > 0 and T > 0):
        raise DomainError("poisson_scan_max needs lam, tau, T > 0")
    g = rng.generator()
    n = g.poisson(lam * (T + tau))
    events = g.uniform(0.0, T + tau, size=n)
    k = scan_count(events, tau, T)
    return (k - lam * tau) / math.sqrt(lam * tau)
