"""Monte Carlo estimation of Pickands constants.

Target, for finite horizon ``lam`` and grid step ``delta``::

    P(lam, delta) = E[ exp( max_{t in delta*Z, 0<=t<=lam} sqrt(2) B(t) - t^alpha ) ] / lam

with ``B`` a fractional Brownian motion of Hurst index ``alpha/2``
(``alpha = 2``: the line ``B(t) = t N``). The Pickands constant is the limit
as ``lam -> inf`` and ``delta -> 0``.

Two estimators of the same quantity:

``direct``
    average of ``exp(max Y)``; unbiased, but the summand is heavy tailed and
    its variance grows like ``exp(c*lam)``, so it is only usable for small
    ``lam``.
``tilted`` (default)
    ``E[e^{max Y}] = E_Q[e^{max Y} / mean_i e^{Y(t_i)}]`` under the measure
    ``Q`` with density ``mean_i e^{Y(t_i)}`` (mean over grid points). Under
    ``Q`` the index is uniform and, by stationary increments, ``Y - Y(t_I)``
    is ``sqrt(2) (B(t) - B(t_I)) - |t - t_I|^alpha``. Each summand is at most
    the number of grid points, so the variance stays bounded in ``lam``.

Coarser grids (integer multiples of ``grid_step``) are read off the same
paths; the tilted normaliser is taken over the coarsest grid so that the
per-path statistic is monotone in grid refinement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, DomainError, FitError
from .fbm_sim import circulant_embedding, fbm_values_block, synthesize_fgn
from .gaussian_core import hpow
from .parallel import exact_mean, run_blocks
from .streams import RngStream, stream_generator

__all__ = [
    "PickandsEstimate",
    "Extrapolation",
    "estimate_pickands",
    "estimate_pickands_grids",
    "pickands_sweep",
    "pickands_extrapolate",
    "write_trace_csv",
    "DOMINANCE_SHARE",
    "DEFAULT_LAMBDA",
    "DEFAULT_GRID_STEP",
    "DEFAULT_REPS",
]

DOMINANCE_SHARE = 0.05
DEFAULT_LAMBDA = 128.0
DEFAULT_GRID_STEP = 2.0**-6
DEFAULT_REPS = 100_000
METHODS = ("tilted", "direct")
_BLOCK_ELEMENTS = 2**20


@dataclass
class PickandsEstimate:
    alpha: float
    lam: float
    grid_step: float
    n_reps: int
    estimate: float
    stderr: float
    trace: list[tuple[float, float]] = field(default_factory=list)
    max_share: float = 0.0
    method: str = "tilted"
    master_seed: int = 0

    @property
    def dominated(self) -> bool:
        """True when one replication carries more than 5% of the total sum."""
        return self.max_share > DOMINANCE_SHARE


def _seed(rng) -> int:
    return rng.master_seed if isinstance(rng, RngStream) else int(rng)


def _n_steps(lam: float, grid_step: float) -> int:
    if not (lam > 0 and grid_step > 0):
        raise DomainError("lambda and grid_step must be positive")
    if grid_step > lam:
        raise DomainError(f"grid_step {grid_step} exceeds lambda {lam}")
    x = lam / grid_step
    n = round(x)
    if abs(x - n) > 1e-9 * x:
        raise DomainError(f"lambda/grid_step = {x} is not an integer")
    return int(n)


def _check_alpha(alpha: float):
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")


def _pickands_block(k0, k1, alpha, n_steps, grid_step, factors, method, master_seed):
    rows = k1 - k0
    coarse = max(factors)
    n_coarse = n_steps // coarse + 1
    t = np.arange(n_steps + 1) * grid_step
    tpow = hpow(t, alpha)
    anchor = np.zeros(rows, dtype=np.int64)
    if n_steps == 0:
        return np.ones((rows, len(factors)))
    if alpha == 2.0:
        slope = np.empty(rows)
        for r, k in enumerate(range(k0, k1)):
            g = stream_generator(master_seed, k)
            if method == "tilted":
                anchor[r] = g.integers(0, n_coarse) * coarse
            slope[r] = g.standard_normal()
        b = slope[:, None] * t[None, :]
    else:
        emb = circulant_embedding(n_steps, alpha / 2.0)
        z = np.empty((rows, emb.size))
        for r, k in enumerate(range(k0, k1)):
            g = stream_generator(master_seed, k)
            if method == "tilted":
                anchor[r] = g.integers(0, n_coarse) * coarse
            g.standard_normal(out=z[r])
        b = fbm_values_block(synthesize_fgn(z, emb), grid_step, alpha / 2.0)
    out = np.empty((rows, len(factors)))
    if method == "direct":
        y = math.sqrt(2.0) * b - tpow[None, :]
        for c, f in enumerate(factors):
            out[:, c] = np.exp(np.max(y[:, ::f], axis=1))
        return out
    lag = np.abs(np.arange(n_steps + 1)[None, :] - anchor[:, None])
    w = math.sqrt(2.0) * (b - b[np.arange(rows), anchor][:, None]) - tpow[lag]
    norm = logsumexp(w[:, ::coarse], axis=1)
    for c, f in enumerate(factors):
        out[:, c] = n_coarse * np.exp(np.max(w[:, ::f], axis=1) - norm)
    return out


def _summarise(stats: np.ndarray, lam: float) -> tuple[float, float, float]:
    n = stats.size
    mean = exact_mean(stats)
    if n > 1:
        var = math.fsum(((stats - mean) ** 2).tolist()) / (n - 1)
        se = math.sqrt(var / n) / lam
    else:
        se = 0.0
    total = math.fsum(stats.tolist())
    share = float(stats.max() / total) if total > 0 else 0.0
    return mean / lam, se, share


def estimate_pickands_grids(alpha: float, lam: float, grid_step: float, factors=(1,),
                            n_reps: int = DEFAULT_REPS, rng=0, workers: int = 1,
                            method: str = "tilted") -> list[PickandsEstimate]:
    """Estimates at grid steps ``grid_step * f`` for each ``f`` in ``factors``, from shared paths."""
    _check_alpha(alpha)
    if method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}, got {method!r}")
    if n_reps < 1:
        raise ConfigurationError(f"n_reps must be >= 1, got {n_reps}")
    factors = tuple(int(f) for f in factors)
    if not factors or min(factors) < 1:
        raise ConfigurationError("grid factors must be positive integers")
    n_steps = _n_steps(lam, grid_step)
    for f in factors:
        if n_steps % f:
            raise ConfigurationError(f"grid factor {f} does not divide {n_steps} steps")
    seed = _seed(rng)
    width = 2 * max(n_steps, 1) + 2
    block = max(1, min(1024, _BLOCK_ELEMENTS // width))
    stats = run_blocks(_pickands_block, n_reps, block, workers, float(alpha), n_steps,
                       float(grid_step), factors, method, seed)
    out = []
    for c, f in enumerate(factors):
        est, se, share = _summarise(stats[:, c], lam)
        out.append(PickandsEstimate(alpha, float(lam), grid_step * f, n_reps, est, se,
                                    [(float(lam), est)], share, method, seed))
    return out


def estimate_pickands(alpha: float, lam: float = DEFAULT_LAMBDA,
                      grid_step: float = DEFAULT_GRID_STEP, n_reps: int = DEFAULT_REPS,
                      rng=0, workers: int = 1, method: str = "tilted") -> PickandsEstimate:
    """Estimate ``P(lam, grid_step)``; ``stderr`` is the replication standard error."""
    return estimate_pickands_grids(alpha, lam, grid_step, (1,), n_reps, rng, workers, method)[0]


def pickands_sweep(alpha: float, lambdas, grid_step: float = DEFAULT_GRID_STEP, factors=(1, 2),
                   n_reps: int = DEFAULT_REPS, rng=0, workers: int = 1,
                   method: str = "tilted") -> list[PickandsEstimate]:
    """Estimates for every ``(lambda, grid factor)``; each carries the per-lambda trace of its grid."""
    results = []
    for lam in sorted(float(x) for x in lambdas):
        results.extend(estimate_pickands_grids(alpha, lam, grid_step, factors, n_reps, rng,
                                               workers, method))
    by_step: dict[float, list[tuple[float, float]]] = {}
    for e in results:
        by_step.setdefault(e.grid_step, []).append((e.lam, e.estimate))
    for e in results:
        e.trace = list(by_step[e.grid_step])
    return results


@dataclass
class Extrapolation:
    value: float
    slope: float
    grid_step: float
    band: tuple[float, float]
    per_grid: dict[float, float]
    model: str = "c0 + c1/lambda (pragmatic fit; no convergence rate is known)"


def _fit_inverse_lambda(points) -> tuple[float, float]:
    lam = np.array([p[0] for p in points], dtype=float)
    val = np.array([p[1] for p in points], dtype=float)
    if np.unique(lam).size < 2:
        raise FitError("degenerate design: need at least two distinct lambda values")
    design = np.column_stack([np.ones_like(lam), 1.0 / lam])
    coef, *_ = np.linalg.lstsq(design, val, rcond=None)
    return float(coef[0]), float(coef[1])


def pickands_extrapolate(traces) -> Extrapolation:
    """Fit ``estimate(lam) = c0 + c1/lam`` at the finest grid step and report ``c0``.

    ``traces`` is a list of :class:`PickandsEstimate` or ``(lam, grid_step, estimate)``
    triples. The band is the range of ``c0`` over all grid steps with at least
    two distinct lambdas.
    """
    triples = []
    for t in traces:
        if isinstance(t, PickandsEstimate):
            triples.append((t.lam, t.grid_step, t.estimate))
        else:
            lam, step, est = t
            triples.append((float(lam), float(step), float(est)))
    steps = sorted({s for _, s, _ in triples})
    if len(steps) < 2:
        raise ConfigurationError("extrapolation needs estimates at >= 2 grid steps")
    finest = steps[0]
    fine_pts = [(lam, est) for lam, s, est in triples if s == finest]
    if len(fine_pts) < 3:
        raise ConfigurationError("extrapolation needs >= 3 lambda values at the finest grid step")
    c0, c1 = _fit_inverse_lambda(fine_pts)
    per_grid = {finest: c0}
    for s in steps[1:]:
        pts = [(lam, est) for lam, s2, est in triples if s2 == s]
        if len({p[0] for p in pts}) >= 2:
            per_grid[s] = _fit_inverse_lambda(pts)[0]
    vals = list(per_grid.values())
    return Extrapolation(c0, c1, finest, (min(vals), max(vals)), per_grid)


def write_trace_csv(estimates, dest) -> Path:
    dest = Path(dest)
    with dest.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "lambda", "grid_step", "n_reps", "estimate", "stderr"])
        for e in estimates:
            w.writerow([f"{e.alpha:.17g}", f"{e.lam:.17g}", f"{e.grid_step:.17g}", e.n_reps,
                        f"{e.estimate:.17g}", f"{e.stderr:.17g}"])
    return dest
