"""Simulation lab for the Shepp statistic of fractional Brownian motion.

The Shepp statistic ``M_H(T)`` is the largest increment ``B_H(s + tau) - B_H(s)``
over windows ``tau in [0, 1]`` and start points ``s in [0, T]``. The package
provides exact fBm samplers, the windowed-maximum kernel, closed-form tail
asymptotics, Pickands-constant estimation and a reproducible Monte Carlo engine.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    EmbeddingError,
    FactorizationError,
    FitError,
    InsufficientExceedancesError,
    NumericalError,
    RegimeError,
    ShepplabError,
)
from .gaussian_core import (
    HurstIndex,
    fbm_cov,
    fgn_autocov,
    gumbel_cdf,
    log_normal_survival,
    normal_survival,
)
from .streams import RngStream
from .fbm_sim import (
    FbmPath,
    PathGrid,
    circulant_embedding,
    sample_fbm_dense,
    sample_fbm_spectral,
    sample_fgn_spectral,
)
from .shepp_field import (
    SheppGridSpec,
    poisson_scan_max,
    restricted_shepp_max,
    shepp_max,
    standardized_shepp_max,
    window_max,
)
from .asymptotics import (
    AsymptoticParams,
    LogValue,
    gumbel_norming,
    lemma31_bound,
    lemma31_ratio,
    theorem21_tail,
    zholud_tail,
)
from .pickands import PickandsEstimate, estimate_pickands, pickands_extrapolate, pickands_sweep
from .montecarlo import (
    ExperimentConfig,
    TailEstimate,
    estimate_tail,
    fit_tail_constant,
    gumbel_test,
    lemma31_check,
)
