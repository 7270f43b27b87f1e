"""Exact samplers for fractional Gaussian noise and fractional Brownian motion.

Two independent routes:

* spectral: circulant embedding of the fGn autocovariance (size ``2n``),
  ``O(n log n)`` per path;
* dense: pivoted Cholesky factor of the fBm covariance matrix at the grid
  times, used as an oracle for ``n_steps <= 2048``.

Replication ``k`` draws all of its normals from ``RngStream(master_seed, k)``;
the ``*_block`` functions produce rows ``k0..k1-1`` and are what the parallel
engines call.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft

from .errors import ConfigurationError, DomainError, EmbeddingError, FactorizationError
from .gaussian_core import HurstIndex, as_hurst, fbm_cov_matrix, fgn_autocov, hpow
from .streams import RngStream, stream_generator

log = logging.getLogger(__name__)

__all__ = [
    "PathGrid",
    "FbmPath",
    "SpectralEmbedding",
    "circulant_embedding",
    "embedding_from_autocov",
    "synthesize_fgn",
    "sample_fgn_spectral",
    "sample_fgn_spectral_block",
    "fbm_from_fgn",
    "fbm_values_block",
    "sample_fbm_spectral",
    "pivoted_cholesky",
    "sample_fbm_dense",
    "sample_fbm_dense_block",
    "write_path_csv",
    "EIG_TOL",
    "PIVOT_TOL",
    "DENSE_MAX_STEPS",
]

EIG_TOL = 1e-9
PIVOT_TOL = 1e-10
DENSE_MAX_STEPS = 2048


@dataclass(frozen=True)
class PathGrid:
    n_steps: int
    dt: float

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass
class FbmPath:
    grid: PathGrid
    values: np.ndarray
    hurst: HurstIndex
    seed_info: tuple[int, int] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_steps + 1,):
            raise DomainError(
                f"path has {self.values.shape} values, grid needs {self.grid.n_steps + 1}"
            )
        if self.values[0] != 0.0:
            raise DomainError("an fBm path must start at 0")


# ---------------------------------------------------------------------------
# spectral route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralEmbedding:
    """Square-root spectrum of the size-``2n`` circulant embedding of fGn."""

    n: int
    h: float
    re_scale: np.ndarray = field(repr=False)
    im_scale: np.ndarray = field(repr=False)
    min_eigenvalue: float
    max_eigenvalue: float
    n_clamped: int

    @property
    def size(self) -> int:
        return 2 * self.n


def embedding_from_autocov(gamma, h: float = math.nan, tol: float = EIG_TOL) -> SpectralEmbedding:
    """Circulant embedding of a stationary autocovariance ``gamma[0..n]``.

    Raises :class:`EmbeddingError` when an eigenvalue is below ``-tol * max``;
    smaller negative eigenvalues are clamped to zero and counted.
    """
    gamma = np.asarray(gamma, dtype=float)
    n = gamma.size - 1
    if n < 1:
        raise DomainError("need autocovariances at lags 0..n with n >= 1")
    m = 2 * n
    row = np.empty(m)
    row[: n + 1] = gamma
    row[n + 1:] = gamma[1:n][::-1]
    eig = np.fft.rfft(row).real
    lo, hi = float(eig.min()), float(eig.max())
    thresh = tol * hi
    if lo < -thresh:
        raise EmbeddingError(lo, thresh)
    neg = eig < 0
    n_clamped = int(neg.sum())
    if n_clamped:
        log.warning("clamped %d tiny negative circulant eigenvalues (n=%d, h=%g)", n_clamped, n, h)
        eig = np.where(neg, 0.0, eig)
    # irfft divides by m; scales give each output coordinate covariance gamma.
    re = np.sqrt(eig * (m / 2.0))
    re[0] = math.sqrt(eig[0] * m)
    re[-1] = math.sqrt(eig[-1] * m)
    im = re.copy()
    im[0] = im[-1] = 0.0
    re.flags.writeable = False
    im.flags.writeable = False
    return SpectralEmbedding(n, h, re, im, lo, hi, n_clamped)


@lru_cache(maxsize=64)
def _embedding(n: int, h: float, tol: float) -> SpectralEmbedding:
    return embedding_from_autocov(fgn_autocov(np.arange(n + 1), h), h, tol)


def circulant_embedding(n: int, h, tol: float = EIG_TOL) -> SpectralEmbedding:
    if int(n) != n or n < 1:
        raise DomainError(f"need n >= 1 increments, got {n}")
    return _embedding(int(n), as_hurst(h).h, float(tol))


def synthesize_fgn(z: np.ndarray, emb: SpectralEmbedding) -> np.ndarray:
    """Map ``(..., 2n)`` standard normals to ``(..., n)`` fGn draws.

    The first ``n+1`` normals are real parts of the random spectrum, the
    remaining ``n-1`` are imaginary parts of the interior frequencies.
    """
    n = emb.n
    spec = np.empty(z.shape[:-1] + (n + 1,), dtype=complex)
    spec.real = z[..., : n + 1] * emb.re_scale
    spec.imag[..., 0] = 0.0
    spec.imag[..., n] = 0.0
    spec.imag[..., 1:n] = z[..., n + 1:] * emb.im_scale[1:n]
    return scipy.fft.irfft(spec, n=2 * n, axis=-1)[..., :n]


def sample_fgn_spectral(n: int, h, rng: RngStream) -> np.ndarray:
    """``n`` draws of unit-spacing fractional Gaussian noise."""
    emb = circulant_embedding(n, h)
    z = rng.generator().standard_normal(emb.size)
    return synthesize_fgn(z, emb)


def sample_fgn_spectral_block(n: int, h, master_seed: int, k0: int, k1: int) -> np.ndarray:
    """Rows ``k0..k1-1`` of fGn, row ``k`` drawn from stream ``(master_seed, k)``."""
    emb = circulant_embedding(n, h)
    z = np.empty((k1 - k0, emb.size))
    for row, k in enumerate(range(k0, k1)):
        stream_generator(master_seed, k).standard_normal(out=z[row])
    return synthesize_fgn(z, emb)


def fbm_values_block(increments: np.ndarray, dt: float, h) -> np.ndarray:
    """Cumulative sums of unit-spacing fGn rows scaled to spacing ``dt``.

    Returns an array with one more column than ``increments``; column 0 is 0.
    """
    h = as_hurst(h).h
    inc = np.asarray(increments, dtype=float)
    out = np.zeros(inc.shape[:-1] + (inc.shape[-1] + 1,))
    np.cumsum(inc, axis=-1, out=out[..., 1:])
    scale = hpow(dt, h)
    if scale != 1.0:
        out *= scale
    return out


def fbm_from_fgn(increments, dt: float, h, seed_info=None) -> FbmPath:
    """fBm path from unit-spacing fGn via self-similarity: ``B(i dt) = dt^H * sum``."""
    inc = np.asarray(increments, dtype=float)
    if inc.ndim != 1 or inc.size < 1:
        raise DomainError("fbm_from_fgn needs a nonempty 1-D increment sequence")
    grid = PathGrid(inc.size, dt)
    return FbmPath(grid, fbm_values_block(inc, dt, h), as_hurst(h), seed_info)


def sample_fbm_spectral(grid: PathGrid, h, rng: RngStream) -> FbmPath:
    inc = sample_fgn_spectral(grid.n_steps, h, rng)
    return fbm_from_fgn(inc, grid.dt, h, (rng.master_seed, rng.stream_id))


# ---------------------------------------------------------------------------
# dense route
# ---------------------------------------------------------------------------

def pivoted_cholesky(a: np.ndarray, tol: float = PIVOT_TOL):
    """Outer-product Cholesky with symmetric (diagonal) pivoting.

    Returns ``(factor, perm, rank)`` with ``a[perm][:, perm] ~= factor @ factor.T``
    where ``factor`` has ``rank`` columns. Stops when the largest remaining
    diagonal falls below ``tol * max(diag(a))``; raises
    :class:`FactorizationError` if a remaining diagonal entry is negative
    beyond that tolerance.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DomainError("pivoted_cholesky needs a square matrix")
    perm = np.arange(n)
    fac = np.zeros((n, n))
    scale = float(np.max(np.diag(a))) if n else 0.0
    thresh = tol * max(scale, 0.0)
    rank = n
    for k in range(n):
        d = np.diag(a)[k:]
        p = k + int(np.argmax(d))
        if d[p - k] <= thresh:
            worst = k + int(np.argmin(d))
            if d[worst - k] < -thresh:
                raise FactorizationError(perm[worst], d[worst - k])
            rank = k
            break
        if p != k:
            a[[k, p], :] = a[[p, k], :]
            a[:, [k, p]] = a[:, [p, k]]
            fac[[k, p], :] = fac[[p, k], :]
            perm[[k, p]] = perm[[p, k]]
        piv = math.sqrt(a[k, k])
        fac[k, k] = piv
        col = a[k + 1:, k] / piv
        fac[k + 1:, k] = col
        a[k + 1:, k + 1:] -= np.outer(col, col)
    return fac[:, :rank], perm, rank


@lru_cache(maxsize=16)
def _dense_factor(n_steps: int, dt: float, h: float) -> np.ndarray:
    times = np.arange(1, n_steps + 1) * dt
    fac, perm, rank = pivoted_cholesky(fbm_cov_matrix(times, h))
    out = np.zeros((n_steps, n_steps))
    out[perm, :rank] = fac
    out.flags.writeable = False
    return out


def _check_dense(grid: PathGrid):
    if grid.n_steps > DENSE_MAX_STEPS:
        raise ConfigurationError(
            f"dense sampler is limited to {DENSE_MAX_STEPS} steps, got {grid.n_steps}"
        )


def sample_fbm_dense(grid: PathGrid, h, rng: RngStream) -> FbmPath:
    """Oracle sampler: factor of the full covariance matrix times a normal vector."""
    _check_dense(grid)
    h = as_hurst(h)
    fac = _dense_factor(grid.n_steps, grid.dt, h.h)
    z = rng.generator().standard_normal(grid.n_steps)
    values = np.zeros(grid.n_steps + 1)
    values[1:] = fac @ z
    return FbmPath(grid, values, h, (rng.master_seed, rng.stream_id))


def sample_fbm_dense_block(grid: PathGrid, h, master_seed: int, k0: int, k1: int) -> np.ndarray:
    _check_dense(grid)
    fac = _dense_factor(grid.n_steps, grid.dt, as_hurst(h).h)
    z = np.empty((k1 - k0, grid.n_steps))
    for row, k in enumerate(range(k0, k1)):
        stream_generator(master_seed, k).standard_normal(out=z[row])
    out = np.zeros((k1 - k0, grid.n_steps + 1))
    out[:, 1:] = z @ fac.T
    return out


def write_path_csv(path: FbmPath, dest) -> Path:
    """Dump a path as CSV ``t,value`` with 17 significant digits."""
    dest = Path(dest)
    with dest.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(path.grid.times, path.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])
    return dest
