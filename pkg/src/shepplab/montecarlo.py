"""Experiment engine for the Shepp statistic.

Crude Monte Carlo only. Every replication draws one fBm path on
``[0, T + 1]`` and evaluates all requested window maxima on it, so estimates
at different thresholds come from the same paths (``shared_paths=True`` in
every output) and are positively correlated.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__, _kernels
from .asymptotics import gumbel_norming, theorem21_prefactor
from .errors import (
    ConfigurationError,
    InsufficientExceedancesError,
    NumericalError,
    RegimeError,
)
from .fbm_sim import fbm_values_block, sample_fgn_spectral_block
from .gaussian_core import HurstIndex, as_hurst, gumbel_cdf, hpow, log_normal_survival
from .parallel import run_blocks
from .shepp_field import SheppGridSpec, poisson_scan_max, restricted_window
from .streams import RngStream, derive_seed, stream_generator

__all__ = [
    "ExperimentConfig",
    "TailEstimate",
    "TailFit",
    "GumbelResult",
    "Lemma31Row",
    "ScanDemoRow",
    "simulate_shepp_maxima",
    "binomial_ci",
    "tail_from_maxima",
    "estimate_tail",
    "fit_tail_constant",
    "gumbel_test",
    "gumbel_ks",
    "gumbel_null_calibration",
    "lemma31_check",
    "scan_demo",
    "write_tail_csv",
    "write_gumbel_csv",
    "write_metadata",
    "USABLE_REL_ERR",
]

USABLE_REL_ERR = 0.5
WILSON_BELOW = 30
_Z95 = 1.959963984540054
_BLOCK_ELEMENTS = 2**21


def _seed(rng) -> int:
    return rng.master_seed if isinstance(rng, RngStream) else int(rng)


@dataclass
class ExperimentConfig:
    h: float
    T: float
    m: int
    u_list: list[float]
    n_reps: int
    master_seed: int = 0
    workers: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        self.u_list = [float(u) for u in self.u_list]
        if not self.u_list:
            raise ConfigurationError("u_list must not be empty")
        if any(b <= a for a, b in zip(self.u_list, self.u_list[1:])):
            raise ConfigurationError(f"u_list must be strictly increasing, got {self.u_list}")
        if int(self.n_reps) != self.n_reps or self.n_reps < 1:
            raise ConfigurationError(f"n_reps must be a positive integer, got {self.n_reps}")
        as_hurst(self.h)
        self.spec  # validates T and m

    @property
    def spec(self) -> SheppGridSpec:
        return SheppGridSpec(self.m, self.T)


# ---------------------------------------------------------------------------
# path maxima
# ---------------------------------------------------------------------------

def _shepp_block(k0, k1, h, n_steps, dt, tau_lo, windows, s_max, master_seed):
    try:
        inc = sample_fgn_spectral_block(n_steps, h, master_seed, k0, k1)
    except NumericalError as exc:
        exc.context = f"replications {k0}..{k1 - 1}"
        raise
    paths = fbm_values_block(inc, dt, h)
    return _kernels.window_max_rows_multi(paths, tau_lo, windows, s_max)


def _block_size(n_steps: int) -> int:
    return max(1, min(1024, _BLOCK_ELEMENTS // (2 * n_steps + 2)))


def simulate_shepp_maxima(h, spec: SheppGridSpec, n_reps: int, rng=0, workers: int = 1,
                          windows=None) -> np.ndarray:
    """Grid maxima of the increment field, one row per replication.

    ``windows`` lists window lengths in steps (default: the full window of ``spec``);
    column ``c`` is the maximum over ``tau_idx in [spec.tau_lo, windows[c]]``.
    Replication ``k`` uses stream ``(seed, k)``.
    """
    h = as_hurst(h).h
    if windows is None:
        windows = [spec.window]
    windows = np.asarray(windows, dtype=np.int64)
    if windows.min() < max(1, spec.tau_lo) or windows.max() > spec.window:
        raise ConfigurationError(f"windows must lie in [{spec.tau_lo}, {spec.window}]")
    n_steps = spec.n_steps
    return run_blocks(_shepp_block, int(n_reps), _block_size(n_steps), workers, h, n_steps,
                      spec.dt, spec.tau_lo, windows, spec.s_steps, _seed(rng))


# ---------------------------------------------------------------------------
# tail probabilities
# ---------------------------------------------------------------------------

@dataclass
class TailEstimate:
    u: float
    p_hat: float
    stderr: float
    ci95: tuple[float, float]
    n_reps: int
    count: int
    spec: SheppGridSpec
    h: HurstIndex
    shared_paths: bool = True


def binomial_ci(count: int, n: int) -> tuple[float, float]:
    """95% interval: normal approximation, Wilson score when either tail count < 30."""
    p = count / n
    if count < WILSON_BELOW or n - count < WILSON_BELOW:
        z2 = _Z95 * _Z95
        centre = (p + z2 / (2 * n)) / (1 + z2 / n)
        half = _Z95 * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n)
        lo = 0.0 if count == 0 else centre - half
        hi = 1.0 if count == n else centre + half
    else:
        half = _Z95 * math.sqrt(p * (1 - p) / n)
        lo, hi = p - half, p + half
    return max(0.0, lo), min(1.0, hi)


def tail_from_maxima(maxima, u_list, spec: SheppGridSpec, h) -> list[TailEstimate]:
    maxima = np.asarray(maxima, dtype=float).ravel()
    n = maxima.size
    h = as_hurst(h)
    out = []
    for u in u_list:
        count = int(np.count_nonzero(maxima > u))
        p = count / n
        out.append(TailEstimate(float(u), p, math.sqrt(p * (1 - p) / n), binomial_ci(count, n),
                                n, count, spec, h))
    return out


def estimate_tail(config: ExperimentConfig) -> list[TailEstimate]:
    """``P(M_H(T) > u)`` for every ``u`` in the config, from one set of paths."""
    spec = config.spec
    maxima = simulate_shepp_maxima(config.h, spec, config.n_reps, config.master_seed,
                                   config.workers)[:, 0]
    return tail_from_maxima(maxima, config.u_list, spec, config.h)


@dataclass
class TailFit:
    """Tail-ratio estimate of the squared Pickands constant.

    ``ratios`` holds ``(u, r(u), stderr of r)`` for every usable threshold;
    ``constant`` is the inverse-variance weighted mean over the upper half.
    """

    constant: float
    band: tuple[float, float]
    ratios: list[tuple[float, float, float]]
    used_u: list[float]
    zholud: float | None = None
    zholud_band: tuple[float, float] | None = None

    @property
    def pickands(self) -> float:
        return math.sqrt(self.constant)


def _weighted(rows):
    w = [1.0 / se**2 if se > 0 else 1.0 for _, _, se in rows]
    num = math.fsum(wi * r for wi, (_, r, _) in zip(w, rows))
    return num / math.fsum(w), (min(r for _, r, _ in rows), max(r for _, r, _ in rows))


def fit_tail_constant(estimates, h, T: float, usable_rel: float = USABLE_REL_ERR) -> TailFit:
    """Solve the tail formula for the squared Pickands constant, threshold by threshold.

    ``r(u) = p_hat / [(T/H) (1/2)^(1/H) u^(2/H-2) Psi(u)]``. Thresholds with
    ``p_hat = 0`` or ``stderr/p_hat >= usable_rel`` are dropped.
    """
    h = as_hurst(h)
    if h.h > 0.5:
        raise RegimeError(f"tail-ratio fitting is defined for H <= 1/2, got {h.h}")
    ests = sorted(estimates, key=lambda e: e.u)
    if all(e.p_hat == 0 for e in ests):
        raise InsufficientExceedancesError(
            "no exceedances at any threshold: increase n_reps or lower u")
    usable = [e for e in ests if e.p_hat > 0 and e.stderr / e.p_hat < usable_rel]
    if len(usable) < 3:
        raise InsufficientExceedancesError(
            f"only {len(usable)} thresholds have stderr/p_hat < {usable_rel}; "
            "need 3: increase n_reps or lower u")
    base = theorem21_prefactor(h, T, 1.0)
    rows, zrows = [], []
    for e in usable:
        lu = math.log(e.u)
        lpsi = log_normal_survival(e.u)
        den = math.exp(base + (2.0 / h.h - 2.0) * lu + lpsi)
        rows.append((e.u, e.p_hat / den, e.stderr / den))
        zden = math.exp(math.log(T) + 2.0 * lu + lpsi)
        zrows.append((e.u, e.p_hat / zden, e.stderr / zden))
    upper = rows[len(rows) // 2:]
    const, band = _weighted(upper)
    fit = TailFit(const, band, rows, [r[0] for r in upper])
    if h.is_brownian:
        fit.zholud, fit.zholud_band = _weighted(zrows[len(zrows) // 2:])
    return fit


# ---------------------------------------------------------------------------
# Gumbel limit
# ---------------------------------------------------------------------------

@dataclass
class GumbelResult:
    T: float
    a_T: float
    b_T: float
    ks_stat: float
    n_reps: int


def gumbel_ks(samples) -> float:
    """One-sample Kolmogorov-Smirnov distance to ``exp(-exp(-x))``."""
    return float(stats.kstest(np.asarray(samples, dtype=float), gumbel_cdf).statistic)


def gumbel_test(h, pickands: float, T_list, n_reps: int, m: int, rng=0, workers: int = 1,
                shift: float = 0.0) -> list[GumbelResult]:
    """KS distance of ``a_T (M_H(T) - b_T)`` to the Gumbel law, per horizon.

    ``shift`` is added to ``b_T`` (used to check location-misfit detection).
    """
    h = as_hurst(h)
    if not h.is_theorem_regime:
        raise RegimeError(f"the Gumbel limit is stated for H < 1/2, got {h.h}")
    out = []
    for T in T_list:
        if not T > math.e:
            raise ConfigurationError(f"every horizon must exceed e, got {T}")
        a, b = gumbel_norming(h, T, pickands)
        maxima = simulate_shepp_maxima(h, SheppGridSpec(m, T), n_reps, rng, workers)[:, 0]
        out.append(GumbelResult(float(T), a, b, gumbel_ks(a * (maxima - (b + shift))), n_reps))
    return out


def gumbel_null_calibration(n_reps: int, n_runs: int, rng=0) -> float:
    """Fraction of runs of exact Gumbel samples whose KS stays below ``1.63/sqrt(n_reps)``."""
    crit = 1.63 / math.sqrt(n_reps)
    seed = derive_seed(_seed(rng), "gumbel-null")
    hits = 0
    for k in range(n_runs):
        u = stream_generator(seed, k).random(n_reps)
        x = -np.log(-np.log(u))
        hits += gumbel_ks(x) < crit
    return hits / n_runs


# ---------------------------------------------------------------------------
# restricted window check
# ---------------------------------------------------------------------------

@dataclass
class Lemma31Row:
    u: float
    window: int
    restricted_count: int
    full_count: int
    n_reps: int

    @property
    def restricted_freq(self) -> float:
        return self.restricted_count / self.n_reps

    @property
    def full_freq(self) -> float:
        return self.full_count / self.n_reps

    @property
    def ratio(self) -> float:
        return self.restricted_count / self.full_count if self.full_count else math.nan


def lemma31_check(h, T: float, m: int, u_list, n_reps: int, rng=0,
                  workers: int = 1) -> list[Lemma31Row]:
    """Exceedances of ``u`` with windows capped at ``1 - ln(u)^2/u^2`` versus full windows."""
    spec = SheppGridSpec(m, T)
    wins = [restricted_window(spec, u) for u in u_list]
    cols = sorted(set(wins) | {spec.window})
    maxima = simulate_shepp_maxima(h, spec, n_reps, rng, workers, cols)
    full = maxima[:, cols.index(spec.window)]
    rows = []
    for u, w in zip(u_list, wins):
        restricted = maxima[:, cols.index(w)]
        rows.append(Lemma31Row(float(u), w, int(np.count_nonzero(restricted > u)),
                               int(np.count_nonzero(full > u)), int(n_reps)))
    return rows


# ---------------------------------------------------------------------------
# Poisson scan statistic vs. Brownian limit
# ---------------------------------------------------------------------------

@dataclass
class ScanDemoRow:
    lam: float
    ks_distance: float
    n_reps: int


def _scan_block(k0, k1, lam, tau, T, seed):
    return np.array([poisson_scan_max(lam, tau, T, RngStream(seed, k)) for k in range(k0, k1)])


def _brownian_standardized_block(k0, k1, spec, seed):
    inc = sample_fgn_spectral_block(spec.n_steps, 0.5, seed, k0, k1)
    paths = fbm_values_block(inc, spec.dt, 0.5)
    scale = hpow(np.arange(spec.window + 1) * spec.dt, 0.5)
    return _kernels.standardized_max_rows(paths, spec.tau_lo, spec.window, spec.s_steps, scale)


def scan_demo(lambdas, tau: float, T: float, n_reps: int, m: int, rng=0,
              workers: int = 1) -> list[ScanDemoRow]:
    """Two-sample KS distance between the normalised Poisson scan statistic and
    ``sup_s (B(s+tau) - B(s)) / sqrt(tau)`` simulated on a grid of step ``1/m``."""
    seed = _seed(rng)
    spec = SheppGridSpec(m, T, tau, tau)
    brown = run_blocks(_brownian_standardized_block, n_reps, _block_size(spec.n_steps), workers,
                       spec, derive_seed(seed, "scan-brownian"))
    rows = []
    for lam in lambdas:
        pois = run_blocks(_scan_block, n_reps, 256, workers, float(lam), float(tau), float(T),
                          derive_seed(seed, f"scan-poisson-{lam!r}"))
        rows.append(ScanDemoRow(float(lam), float(stats.ks_2samp(pois, brown).statistic), n_reps))
    return rows


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _g(x) -> str:
    return f"{x:.17g}"


def write_tail_csv(estimates, dest, master_seed: int) -> Path:
    dest = Path(dest)
    with dest.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "T", "m", "u", "n_reps", "count", "p_hat", "stderr", "ci_lo", "ci_hi",
                    "shared_paths", "master_seed"])
        for e in estimates:
            w.writerow([_g(e.h.h), _g(e.spec.T), e.spec.m, _g(e.u), e.n_reps, e.count,
                        _g(e.p_hat), _g(e.stderr), _g(e.ci95[0]), _g(e.ci95[1]),
                        "true" if e.shared_paths else "false", master_seed])
    return dest


def write_gumbel_csv(results, dest) -> Path:
    dest = Path(dest)
    with dest.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T", "a_T", "b_T", "ks_stat", "n_reps"])
        for r in results:
            w.writerow([_g(r.T), _g(r.a_T), _g(r.b_T), _g(r.ks_stat), r.n_reps])
    return dest


def write_metadata(dest, subcommand: str, params: dict, wall_time: float, extra=None) -> Path:
    """Companion JSON: config echo sufficient to replay the run, code version, wall time."""
    dest = Path(dest)
    meta = {
        "subcommand": subcommand,
        "params": params,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall_time,
        "shared_paths": True,
    }
    if extra:
        meta.update(extra)
    dest.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return dest
