import math

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st
import numpy as np
import pytest

from SNS_ROUGH.estimates import INEQUALITIES
from SNS_ROUGH.estimates import brute_force_B_oracle
from SNS_ROUGH.estimates import calibration_drift
from SNS_ROUGH.estimates import get_inequality
from SNS_ROUGH.estimates import get_or_calibrate
from SNS_ROUGH.estimates import run_inequality_suite
from SNS_ROUGH.estimates import verify_stochastic_moment_bound
from SNS_ROUGH.estimates import verify_yosida_growth
from SNS_ROUGH.estimates import yosida_analytic_sup
from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.noise import NoiseFlavor
from SNS_ROUGH.noise import NoiseSpec
from SNS_ROUGH.solver import SolverConfig
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.spectral import bilinear_B
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import random_field
from SNS_ROUGH.state import CalibrationStore


TOLERANCE = 1 + 1e-9


class TestOracle:
    """Pseudospectral advection against direct convolution."""

    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=5)
    def test_bilinear_matches_convolution(self, seed):
        """Both computations agree on band-limited fields."""
        grid = TorusGrid(N=16)
        rng = np.random.default_rng(seed)
        u = random_field(grid, rng, band=4)
        v = random_field(grid, rng, band=4)
        expected = brute_force_B_oracle(u, v)
        np.testing.assert_allclose(bilinear_B(u, v).coeffs, expected.coeffs, atol=1e-10 * hs_norm(expected, 1.0))

    def test_oracle_matches_in_three_dimensions(self, grid3, rng):
        u = random_field(grid3, rng, band=2)
        v = random_field(grid3, rng, band=2)
        np.testing.assert_allclose(bilinear_B(u, v).coeffs, brute_force_B_oracle(u, v).coeffs, atol=1e-10)

    def test_oracle_rejects_wide_fields(self, grid, rng):
        """Fields outside |m_i| <= N / 4 cannot be convolved directly."""
        u = random_field(grid, rng)
        with pytest.raises(ValidationFailure, match="supported"):
            brute_force_B_oracle(u, u)


class TestInequalitySuite:
    """Calibration reports."""

    @pytest.mark.parametrize("ineq_id", ["BIL_L4", "INTERP", "GN_HS"])
    def test_constant_free_inequalities_hold(self, grid, ineq_id):
        """Inequalities without a constant never exceed ratio one."""
        report = run_inequality_suite(ineq_id, 20, grid)
        assert report.constant_free
        assert report.within_constant_free_tolerance
        assert 0 < report.mean_ratio <= report.max_ratio

    def test_trilinear_holder_step_is_at_most_one(self, grid):
        """The intermediate Hölder bound holds sample by sample."""
        report = run_inequality_suite("TRIL44", 10, grid)
        assert report.extras["holder_step"] <= TOLERANCE
        assert "extra_holder_step" in report.row()

    def test_semigroup_ratios_stay_below_the_multiplier_bound(self, grid):
        """The exact multiplier supremum is below 1 + t^{-gap/2}."""
        report = run_inequality_suite("SEMI", 20, grid)
        assert report.extras["multiplier_sup"] <= TOLERANCE
        assert report.max_ratio <= TOLERANCE

    def test_uniqueness_duality_step(self, grid):
        report = run_inequality_suite("UNIQ_TRIL", 10, grid)
        assert report.extras["duality_step"] <= TOLERANCE
        assert math.isfinite(report.calibrated_constant)
        assert not report.exploratory

    def test_two_dimensional_inequalities_are_exploratory_in_3d(self, grid3):
        assert run_inequality_suite("BIL_GL", 2, grid3).exploratory

    def test_more_samples_extend_the_report(self, grid):
        """Sample i does not depend on the sample count, so the maximum can only grow."""
        small = run_inequality_suite("GN", 10, grid, seed=4)
        large = run_inequality_suite("GN", 20, grid, seed=4)
        assert small.max_ratio <= large.max_ratio

    def test_invalid_requests(self, grid):
        with pytest.raises(ValidationFailure, match="unknown inequality"):
            get_inequality("NOPE")
        with pytest.raises(ValidationFailure, match="at least one sample"):
            run_inequality_suite("GN", 0, grid)
        with pytest.raises(ValidationFailure, match="roughness"):
            run_inequality_suite("GN", 1, grid, g=1.0)

    def test_every_inequality_has_a_description(self):
        assert all(inequality.description for inequality in INEQUALITIES.values())

    def test_calibration_drift_of_constant_free_bound(self, grid):
        """The interpolation constant is one at every resolution and sample count."""
        drift = calibration_drift("INTERP", 5, TorusGrid(N=8))
        assert max(drift.base, drift.doubled_resolution, drift.doubled_samples) <= TOLERANCE
        # the doubled sample set contains the base one
        assert drift.doubled_samples >= drift.base
        assert drift.sample_drift == pytest.approx((drift.doubled_samples - drift.base) / drift.base)
        assert drift.resolution_drift >= 0


class TestYosidaGrowth:
    """||R_n||_{L(H^s; H^{s+t})} against its analytic supremum."""

    def test_analytic_supremum(self):
        assert yosida_analytic_sup(1, 1.0) == 1.0
        assert yosida_analytic_sup(4, 1.0) == pytest.approx(2 * math.sqrt(3) / 3)

    def test_growth_like_square_root_of_n(self):
        """The supremum grows like n^{t/2} and the grid attains it within 2%."""
        report = verify_yosida_growth(1.0)
        assert report.passed
        assert report.slope == pytest.approx(0.5, abs=0.05)

    def test_invalid_gain(self):
        with pytest.raises(ValidationFailure, match="regularity gain"):
            verify_yosida_growth(2.0)
        with pytest.raises(ValidationFailure, match="ladder"):
            verify_yosida_growth(1.0, n_ladder=(4,))


class TestMomentBound:
    """Moments of the stochastic integral with frozen coefficients."""

    def test_second_moment_matches_the_exact_value(self):
        """E||int G dw||^2_{H^{-g}} = t sum_j sigma_j^2 (1 + |k_j|^2)^{-g}."""
        config = SolverConfig(N=16, T=1.0, dt=0.5, noise=NoiseSpec(flavor=NoiseFlavor.ADDITIVE))
        report = verify_stochastic_moment_bound(2, 4000, config)
        for estimate, se, exact in zip(report.estimates, report.std_errors, report.exact_second_moment):
            assert abs(estimate - exact) <= 5 * se
        assert report.scaling_ratios[0] == pytest.approx(1.0)
        assert report.expected_ratios[1] == pytest.approx(4.0)

    def test_ratio_error_matches_the_spread_across_seeds(self):
        """Both times reuse one Brownian path, and the reported error accounts for it."""
        base = SolverConfig(N=16, T=1.0, dt=0.5, noise=NoiseSpec(flavor=NoiseFlavor.ADDITIVE))
        reports = [verify_stochastic_moment_bound(2, 400, base.copy(update={"seed": seed})) for seed in range(60)]
        ratios = np.array([report.scaling_ratios[1] for report in reports])
        reported = np.mean([report.scaling_std_errors[1] for report in reports])
        assert 0.7 < np.std(ratios, ddof=1) / reported < 1.35
        assert np.mean(ratios) == pytest.approx(4.0, abs=4 * reported / math.sqrt(len(reports)))
        assert all(report.scaling_std_errors[0] == 0 for report in reports)

    def test_silent_noise_has_zero_moments(self):
        config = SolverConfig(N=16, T=1.0, dt=0.5, noise=NoiseSpec(amplitude=0.0))
        report = verify_stochastic_moment_bound(4, 10, config)
        assert all(estimate == 0 for estimate in report.estimates)
        assert report.passed

    @pytest.mark.parametrize("m, paths, times", [(3, 10, (0.1, 0.4)), (2, 1, (0.1, 0.4)), (2, 10, (0.4, 0.1))])
    def test_invalid_arguments(self, m, paths, times):
        with pytest.raises(ValidationFailure):
            verify_stochastic_moment_bound(m, paths, SolverConfig(N=16, T=1.0, dt=0.5), times=times)


class TestCalibrationStore:
    """Calibrate once, read back afterwards."""

    def test_constant_is_calibrated_then_cached(self, grid, store):
        first = get_or_calibrate("INTERP", grid, store=store, samples=3)
        key = CalibrationStore.key("INTERP", 2, 16, 0.5)
        assert store.get_constant(key) == first
        assert CalibrationStore(store.path).get_constant(key) == first

        store.update_constant(key, 42.0)
        assert get_or_calibrate("INTERP", grid, store=store, samples=3) == 42.0
