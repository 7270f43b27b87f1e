import math

import numpy as np
import pytest

from conftest import discrete_bm_pickands
from shepplab.errors import ConfigurationError, DomainError, FitError
from shepplab.pickands import (
    PickandsEstimate,
    estimate_pickands,
    estimate_pickands_grids,
    pickands_extrapolate,
    pickands_sweep,
    write_trace_csv,
)


class TestValidation:
    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
    def test_alpha_domain(self, alpha):
        with pytest.raises(DomainError):
            estimate_pickands(alpha, 4.0, 0.25, 10)

    def test_grid_must_divide(self):
        with pytest.raises(DomainError):
            estimate_pickands(1.0, 1.0, 0.3, 10)

    def test_method(self):
        with pytest.raises(ConfigurationError):
            estimate_pickands(1.0, 1.0, 0.25, 10, method="magic")


class TestEstimator:
    def test_line_case_matches_closed_form(self):
        # alpha = 2: B(t) = tN and E exp(max) / lam = 1/sqrt(pi) + 1/lam in continuous time
        lam = 4.0
        e = estimate_pickands(2.0, lam, 2.0**-6, 20_000, rng=1)
        assert abs(e.estimate - (1 / math.sqrt(math.pi) + 1 / lam)) < 4 * e.stderr + 2e-3

    def test_tilted_and_direct_agree_small_lambda(self):
        t = estimate_pickands(1.0, 1.0, 2.0**-5, 20_000, rng=2)
        d = estimate_pickands(1.0, 1.0, 2.0**-5, 20_000, rng=3, method="direct")
        assert abs(t.estimate - d.estimate) < 4 * math.hypot(t.stderr, d.stderr)

    def test_grid_coarsening_monotone(self):
        ests = estimate_pickands_grids(0.5, 8.0, 2.0**-4, (1, 2, 4), 2000, rng=4)
        vals = [e.estimate for e in ests]
        assert vals[0] >= vals[1] >= vals[2]
        assert [e.grid_step for e in ests] == [2.0**-4, 2.0**-3, 2.0**-2]

    def test_tilted_summands_bounded(self):
        # each tilted summand is at most the number of grid points (here 65)
        e = estimate_pickands(1.0, 8.0, 2.0**-3, 3000, rng=5)
        largest = e.max_share * e.estimate * e.lam * e.n_reps
        assert largest <= 65 * (1 + 1e-12)
        assert not e.dominated

    def test_reproducible_and_worker_invariant(self):
        a = estimate_pickands(0.5, 4.0, 2.0**-4, 3000, rng=6)
        b = estimate_pickands(0.5, 4.0, 2.0**-4, 3000, rng=6, workers=2)
        assert (a.estimate, a.stderr) == (b.estimate, b.stderr)
        c = estimate_pickands(0.5, 4.0, 2.0**-4, 3000, rng=7)
        assert c.estimate != a.estimate

    def test_grid_step_equal_lambda(self):
        e = estimate_pickands(1.0, 1.0, 1.0, 500, rng=8)
        assert e.estimate > 0


class TestExtrapolation:
    def test_constant_trace(self):
        rows = [(lam, s, 0.8) for lam in (32, 64, 128) for s in (0.1, 0.2)]
        assert pickands_extrapolate(rows).value == pytest.approx(0.8, abs=1e-12)

    def test_model_in_class(self):
        rows = [(lam, s, 0.7 + 3 / lam) for lam in (32.0, 64.0, 128.0) for s in (0.1, 0.2)]
        ex = pickands_extrapolate(rows)
        assert abs(ex.value - 0.7) < 1e-10 and ex.slope == pytest.approx(3.0)

    def test_degenerate_design(self):
        with pytest.raises(FitError):
            pickands_extrapolate([(64.0, 0.1, 0.9)] * 3 + [(64.0, 0.2, 0.8)])

    def test_needs_two_grids(self):
        with pytest.raises(ConfigurationError):
            pickands_extrapolate([(lam, 0.1, 0.9) for lam in (32, 64, 128)])

    def test_accepts_estimates(self):
        ests = [PickandsEstimate(1.0, lam, s, 10, 0.5 + 1 / lam, 0.0) for lam in (8, 16, 32) for s in (0.1, 0.2)]
        assert pickands_extrapolate(ests).value == pytest.approx(0.5)

    def test_sweep_traces(self):
        res = pickands_sweep(1.0, [2.0, 4.0], 0.25, (1, 2), 500, rng=9)
        assert len(res) == 4
        fine = [e for e in res if e.grid_step == 0.25]
        assert fine[0].trace == [(2.0, fine[0].estimate), (4.0, fine[1].estimate)]

    def test_alpha1_extrapolation_removes_finite_lambda_bias(self, alpha1_cli_run):
        # Extrapolating in lambda targets the grid constant at the same step, computed exactly here.
        code, rows, ex, _ = alpha1_cli_run
        assert code == 0
        target = discrete_bm_pickands(2.0**-6)
        fine = [est for lam, step, est in rows if step == 2.0**-6]
        assert abs(ex.value - target) < min(abs(v - target) for v in fine)


def test_write_trace_csv(tmp_path):
    ests = estimate_pickands_grids(1.0, 2.0, 0.25, (1, 2), 100, rng=0)
    text = write_trace_csv(ests, tmp_path / "t.csv").read_text().splitlines()
    assert text[0] == "alpha,lambda,grid_step,n_reps,estimate,stderr"
    assert len(text) == 3
