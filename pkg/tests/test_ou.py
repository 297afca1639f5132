import math

import numpy as np
import pytest

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.noise import NoiseFlavor
from SNS_ROUGH.noise import NoiseSpec
from SNS_ROUGH.noise import coefficient_decay
from SNS_ROUGH.noise import noise_modes
from SNS_ROUGH.noise import sample_wiener
from SNS_ROUGH.ou import OUTrajectory
from SNS_ROUGH.ou import frozen_factors
from SNS_ROUGH.ou import gaussianity_check
from SNS_ROUGH.ou import holder_seminorm
from SNS_ROUGH.ou import ou_mode_coordinates
from SNS_ROUGH.ou import ou_step
from SNS_ROUGH.ou import ou_variance
from SNS_ROUGH.ou import ou_weights
from SNS_ROUGH.ou import simulate_ou
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import shear_mode
from SNS_ROUGH.spectral import stokes_semigroup


SILENT = NoiseSpec(amplitude=0.0)

ADDITIVE = NoiseSpec(flavor=NoiseFlavor.ADDITIVE)


class TestOUStep:
    """One frozen-coefficient step of the stochastic convolution."""

    def test_weights_lie_in_unit_interval(self, grid):
        """The exact transition noise is smaller than the Euler-Maruyama one."""
        weights = ou_weights(noise_modes(grid), 1.0, 0.1)
        assert np.all(weights > 0)
        assert np.all(weights <= 1)

    def test_variance_for_short_times(self):
        """For small t the OU variance is a^2 t."""
        assert ou_variance(2.0, 1.0, 1.0, 1e-8) == pytest.approx(4e-8, rel=1e-6)
        assert ou_variance(2.0, 1.0, 1.0, 1e-8, r=0.5) == pytest.approx(1e-8, rel=1e-6)

    def test_without_noise_the_step_is_the_semigroup(self, grid):
        """sigma = 0 leaves exp(-nu dt A) z."""
        z = shear_mode(grid)
        modes = noise_modes(grid)
        stepped = ou_step(SILENT, z, SpectralField.zeros(grid), np.ones(modes.count), 0.05, 0.5)
        np.testing.assert_allclose(stepped.coeffs, stokes_semigroup(z, 0.05, 0.5).coeffs, atol=1e-15)

    def test_increment_length_is_checked(self, grid):
        """The increment slice must have one entry per active mode."""
        with pytest.raises(ValidationFailure, match="length"):
            ou_step(ADDITIVE, SpectralField.zeros(grid), SpectralField.zeros(grid), np.ones(3), 0.1, 1.0)

    def test_non_positive_step_is_rejected(self, grid):
        with pytest.raises(ValidationFailure, match="time step"):
            frozen_factors(ADDITIVE, grid, SpectralField.zeros(grid), 1.0, 0.0)

    def test_frozen_amplitude(self, grid):
        """Additive amplitudes are a_j r_n(k_j) times the OU weight."""
        modes, decay, amplitude = frozen_factors(ADDITIVE, grid, SpectralField.zeros(grid), 1.0, 0.01, n=4)
        expected = coefficient_decay(ADDITIVE, modes) * 4 / (4 + modes.k2) * ou_weights(modes, 1.0, 0.01)
        np.testing.assert_allclose(amplitude, expected)
        assert decay.shape == grid.shape


class TestSimulateOU:
    """Full-field trajectories along a Wiener path."""

    def test_silent_noise_keeps_z_at_zero(self, grid):
        """Without noise z stays at its initial value zero."""
        wiener = sample_wiener(SILENT, 0.01, 8, seed=0, modes=noise_modes(grid).count)
        traj = simulate_ou(SILENT, grid, wiener, record_stride=2)
        assert len(traj.states) == 5
        np.testing.assert_allclose(traj.times, [0.0, 0.02, 0.04, 0.06, 0.08])
        assert all(hs_norm(state) == 0 for state in traj.states)

    def test_noise_moves_z(self, grid):
        """Additive noise drives z away from zero."""
        wiener = sample_wiener(ADDITIVE, 0.01, 4, seed=0, modes=noise_modes(grid).count)
        traj = simulate_ou(ADDITIVE, grid, wiener)
        assert hs_norm(traj.states[-1]) > 0

    def test_terminal_variance_matches_the_exact_law(self, grid):
        """Mode coordinates of many paths have the closed-form OU variance."""
        paths = 20000
        coordinates = ou_mode_coordinates(ADDITIVE, grid, 1.0, 2.0 ** -6, 64, paths, seed=11, modes=[0, 4])
        modes = noise_modes(grid)
        decay = coefficient_decay(ADDITIVE, modes)
        for column, j in enumerate([0, 4]):
            exact = ou_variance(decay[j], modes.k2[j], 1.0, 1.0)
            variance = float(np.mean(coordinates[:, column] ** 2))
            assert abs(variance - exact) <= 4 * exact * math.sqrt(2.0 / paths)

    def test_at_least_one_path(self, grid):
        with pytest.raises(ValidationFailure, match="at least one path"):
            ou_mode_coordinates(ADDITIVE, grid, 1.0, 0.01, 4, 0, seed=0)


class TestHolderSeminorm:
    """C^beta([0, T]; H^delta) norms on dyadic lags."""

    def trajectory(self, grid, states, T=2.0):
        return OUTrajectory(times=np.linspace(0.0, T, len(states)), states=states, spec=ADDITIVE, nu=1.0)

    def test_constant_path_has_no_holder_quotient(self, grid):
        """A constant path only contributes its sup."""
        h = shear_mode(grid)
        traj = self.trajectory(grid, [h] * 5)
        assert holder_seminorm(traj, 0.5, 0.5) == pytest.approx(hs_norm(h, 0.5), rel=1e-12)

    def test_linear_path(self, grid):
        """For t h on [0, 2] the quotient peaks at the longest lag, 2^{1 - beta} ||h||."""
        h = shear_mode(grid)
        times = np.linspace(0.0, 2.0, 9)
        traj = self.trajectory(grid, [h * t for t in times])
        norm = hs_norm(h)
        assert holder_seminorm(traj, 0.5, 0.0) == pytest.approx((2 + math.sqrt(2)) * norm, rel=1e-10)
        assert holder_seminorm(traj, 0.0, 0.0) == pytest.approx(2 * norm, rel=1e-10)

    def test_full_span_is_compared_off_the_dyadic_ladder(self, grid):
        """With six intervals on [0, 3] the longest pair (0, 3) still enters: 3^{1 - beta} ||h||."""
        h = shear_mode(grid)
        times = np.linspace(0.0, 3.0, 7)
        traj = self.trajectory(grid, [h * t for t in times])
        norm = hs_norm(h)
        assert holder_seminorm(traj, 0.5, 0.0) == pytest.approx((3 + math.sqrt(3)) * norm, rel=1e-10)

    def test_arguments_are_checked(self, grid):
        """At least two states and beta in [0, 1)."""
        h = shear_mode(grid)
        with pytest.raises(ValidationFailure, match="two recorded states"):
            holder_seminorm(self.trajectory(grid, [h]), 0.5, 0.0)
        with pytest.raises(ValidationFailure, match="Hölder exponent"):
            holder_seminorm(self.trajectory(grid, [h, h]), 1.0, 0.0)


class TestGaussianity:
    """Sample skewness and kurtosis bands."""

    def test_normal_samples_pass(self):
        samples = np.random.default_rng(0).standard_normal(20000)
        assert gaussianity_check(samples).passed

    def test_exponential_samples_fail(self):
        """Skewness two is far outside the band."""
        samples = np.random.default_rng(0).exponential(size=5000)
        report = gaussianity_check(samples)
        assert not report.passed
        assert report.samples == 5000
