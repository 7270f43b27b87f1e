import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def tmp_out(tmp_path):
    return tmp_path


def cov_within(samples: np.ndarray, target: np.ndarray, n_se: float = 4.0) -> np.ndarray:
    """Boolean mask: empirical (mean-known-zero) covariance within ``n_se`` standard errors."""
    n = samples.shape[0]
    emp = samples.T @ samples / n
    sq = samples * samples
    var = (sq.T @ sq / n - emp * emp) * n / (n - 1)
    se = np.sqrt(np.maximum(var, 0.0) / n)
    return np.abs(emp - target) <= n_se * se


@pytest.fixture(scope="session")
def alpha1_cli_run(tmp_path_factory):
    """The documented CLI Pickands run for alpha = 1 (about two minutes)."""
    from shepplab import cli
    from shepplab.pickands import pickands_extrapolate

    out = tmp_path_factory.mktemp("pickands_alpha1")
    code = cli.run(["pickands", "--alpha", "1", "--lambda", "32,64,128", "--grid-step", "0.015625",
                    "--reps", "100000", "--out", str(out)])
    rows = []
    with (out / "pickands.csv").open() as fh:
        next(fh)
        for line in fh:
            _, lam, step, _, est, _ = line.strip().split(",")
            rows.append((float(lam), float(step), float(est)))
    return code, rows, pickands_extrapolate(rows), out


def discrete_bm_pickands(delta: float) -> float:
    """Exact grid Pickands constant of index 1: exp(-2 sum_k Psi(sqrt(k delta / 2)) / k) / delta."""
    from scipy.special import ndtr

    k = np.arange(1, 2_000_001, dtype=float)
    terms = ndtr(-np.sqrt(k * delta / 2)) / k
    return float(np.exp(-2 * np.sum(terms)) / delta)


ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
