import math

from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st
import numpy as np
import pydantic
import pytest

from SNS_ROUGH.exceptions import GridMismatchError
from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.spectral import NormSpec
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.spectral import bessel_potential
from SNS_ROUGH.spectral import bilinear_B
from SNS_ROUGH.spectral import dealias
from SNS_ROUGH.spectral import duality_pairing
from SNS_ROUGH.spectral import gradient_norm
from SNS_ROUGH.spectral import grid_arrays
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import l2_pairing
from SNS_ROUGH.spectral import leray_project
from SNS_ROUGH.spectral import lp_norm
from SNS_ROUGH.spectral import lp_quadrature
from SNS_ROUGH.spectral import plane_wave
from SNS_ROUGH.spectral import random_field
from SNS_ROUGH.spectral import shear_mode
from SNS_ROUGH.spectral import sobolev_norm
from SNS_ROUGH.spectral import stokes_semigroup
from SNS_ROUGH.spectral import yosida_multiplier
from SNS_ROUGH.spectral import yosida_smoother


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def divergence(field: SpectralField) -> np.ndarray:
    return np.sum(grid_arrays(field.grid).k * field.coeffs, axis=0)


class TestTorusGrid:
    """Grid validation and the dealias band."""

    @pytest.mark.parametrize("N, cutoff", [(8, 2), (16, 5), (64, 21)])
    def test_cutoff_follows_two_thirds_rule(self, N, cutoff):
        """The retained band is floor(N / 3) for these resolutions."""
        assert TorusGrid(N=N).cutoff == cutoff

    def test_full_fraction_never_keeps_nyquist(self):
        """With fraction one the band stops one below N / 2."""
        assert TorusGrid(N=16, dealias_fraction=1.0).cutoff == 7

    @pytest.mark.parametrize("kwargs", [{"d": 4}, {"N": 7}, {"N": 6}, {"L": 0.0}, {"dealias_fraction": 0.0}])
    def test_invalid_grids_are_rejected(self, kwargs):
        """Every documented precondition is enforced."""
        with pytest.raises(pydantic.ValidationError):
            TorusGrid(**kwargs)

    def test_grid_is_immutable(self, grid):
        """Grids are frozen, so they can key caches."""
        with pytest.raises(TypeError):
            grid.N = 32

    def test_volume(self, grid):
        """The default box is [0, 2 pi)^2."""
        assert grid.volume == pytest.approx(4 * math.pi ** 2)


class TestSpectralField:
    """Construction and arithmetic of spectral fields."""

    def test_mean_mode_is_zeroed(self, grid):
        """The mean mode is dropped on construction."""
        field = SpectralField(grid, np.ones((2, 16, 16)))
        assert np.all(field.coeffs[:, 0, 0] == 0)

    def test_wrong_shape_is_rejected(self, grid):
        """Coefficient arrays must match the grid."""
        with pytest.raises(ValidationFailure, match="expected"):
            SpectralField(grid, np.zeros((2, 8, 8)))

    def test_fields_on_different_grids_do_not_mix(self, grid):
        """Adding fields from two grids raises GridMismatchError."""
        with pytest.raises(GridMismatchError):
            SpectralField.zeros(grid) + SpectralField.zeros(TorusGrid(N=32))

    @given(seed=seeds)
    @settings(max_examples=10, deadline=None)
    def test_physical_round_trip(self, seed):
        """A dealiased real field survives a trip to physical space."""
        grid = TorusGrid(N=16)
        field = random_field(grid, np.random.default_rng(seed))
        back = SpectralField.from_physical(grid, field.to_physical())
        np.testing.assert_allclose(back.coeffs, field.coeffs, atol=1e-12)

    def test_grid_arrays_are_read_only(self, grid):
        """Cached wavenumber tables cannot be modified."""
        with pytest.raises(ValueError):
            grid_arrays(grid).k2[0, 0] = 1.0


class TestOperators:
    """Leray projection, Bessel potentials, the Stokes semigroup and the Yosida smoother."""

    @given(seed=seeds)
    @settings(max_examples=10, deadline=None)
    def test_leray_projection_is_idempotent_and_solenoidal(self, seed):
        """Pi Pi v = Pi v and k . (Pi v)^(k) = 0."""
        grid = TorusGrid(N=16)
        field = random_field(grid, np.random.default_rng(seed), solenoidal=False)
        once = leray_project(field)
        twice = leray_project(once)
        np.testing.assert_allclose(twice.coeffs, once.coeffs, atol=1e-12)
        assert np.max(np.abs(divergence(once))) < 1e-10

    @given(seed=seeds, s=st.floats(min_value=-2.0, max_value=2.0))
    @settings(max_examples=10, deadline=None)
    def test_bessel_potentials_invert_each_other(self, seed, s):
        """J^{-s} J^s is the identity."""
        grid = TorusGrid(N=16)
        field = random_field(grid, np.random.default_rng(seed))
        back = bessel_potential(bessel_potential(field, s), -s)
        np.testing.assert_allclose(back.coeffs, field.coeffs, atol=1e-12)

    def test_semigroup_decays_shear_exactly(self, grid):
        """The unit-wavenumber shear decays like exp(-nu t)."""
        shear = shear_mode(grid)
        evolved = stokes_semigroup(shear, 0.3, nu=2.0)
        assert hs_norm(evolved) == pytest.approx(math.exp(-0.6) * hs_norm(shear), rel=1e-12)

    @pytest.mark.parametrize("t, nu", [(-0.1, 1.0), (0.1, 0.0)])
    def test_semigroup_rejects_bad_arguments(self, grid, t, nu):
        """Negative times and non-positive viscosities raise ValidationFailure."""
        with pytest.raises(ValidationFailure):
            stokes_semigroup(shear_mode(grid), t, nu)

    def test_yosida_levels(self, grid):
        """n = None is the identity and non-positive levels are rejected."""
        assert np.all(yosida_multiplier(grid, None) == 1.0)
        shear = shear_mode(grid)
        assert hs_norm(yosida_smoother(shear, 4)) == pytest.approx(0.8 * hs_norm(shear), rel=1e-12)
        with pytest.raises(ValidationFailure, match="positive integer"):
            yosida_multiplier(grid, 0)

    def test_dealias_removes_high_modes(self, grid):
        """Modes outside the band are zeroed."""
        field = SpectralField(grid, np.ones((2, 16, 16)))
        arrays = grid_arrays(grid)
        assert np.all(dealias(field).coeffs[:, ~arrays.mask] == 0)


class TestNorms:
    """Parseval norms and grid quadrature."""

    def test_shear_norms(self, grid):
        """||sin y||, ||grad sin y|| and ||sin y||_{L^4} on [0, 2 pi)^2."""
        shear = shear_mode(grid)
        assert hs_norm(shear) == pytest.approx(math.sqrt(2) * math.pi, rel=1e-12)
        assert gradient_norm(shear) == pytest.approx(math.sqrt(2) * math.pi, rel=1e-12)
        assert hs_norm(shear, 1.0) == pytest.approx(2 * math.pi, rel=1e-12)
        assert lp_norm(shear, 4) == pytest.approx((1.5 * math.pi ** 2) ** 0.25, rel=1e-12)

    @given(seed=seeds)
    @settings(max_examples=10, deadline=None)
    def test_parseval_agrees_with_quadrature(self, seed):
        """The spectral H-norm equals the grid L^2 quadrature for band-limited fields."""
        grid = TorusGrid(N=16)
        field = random_field(grid, np.random.default_rng(seed), normalize=False)
        assert hs_norm(field) == pytest.approx(lp_quadrature(field.to_physical(), grid, 2), rel=1e-10)

    def test_sobolev_norm_with_p_two_is_hilbert(self, grid, rng):
        """H^{s,2} norms go through Parseval."""
        field = random_field(grid, rng)
        assert sobolev_norm(field, NormSpec(s=0.5, p=2)) == hs_norm(field, 0.5)

    def test_exponent_below_one_is_rejected(self):
        """p must be at least one."""
        with pytest.raises(pydantic.ValidationError):
            NormSpec(p=0.5)

    def test_duality_pairing_matches_l2(self, grid, rng):
        """The H^s - H^{-s} bracket is the L^2 pairing."""
        a, b = random_field(grid, rng), random_field(grid, rng)
        assert duality_pairing(a, b, 0.7) == pytest.approx(l2_pairing(a, b), rel=1e-10, abs=1e-14)


class TestBilinear:
    """The pseudospectral advection term."""

    @pytest.mark.parametrize("grid_name", ["grid", "grid3"])
    def test_advection_is_antisymmetric(self, grid_name, request):
        """<B(u, v), v> vanishes for solenoidal dealiased u and v."""
        grid = request.getfixturevalue(grid_name)
        rng = np.random.default_rng(7)
        u, v = random_field(grid, rng), random_field(grid, rng)
        scale = hs_norm(u, 1.0) * hs_norm(v, 1.0) * hs_norm(v)
        assert abs(l2_pairing(bilinear_B(u, v), v)) <= 1e-10 * scale

    def test_result_is_solenoidal_and_dealiased(self, grid, rng):
        """B(u, v) lies in the dealiased solenoidal space."""
        result = bilinear_B(random_field(grid, rng), random_field(grid, rng))
        assert result.solenoidal
        assert np.max(np.abs(divergence(result))) < 1e-10
        assert np.all(result.coeffs[:, ~grid_arrays(grid).mask] == 0)

    def test_shear_flow_does_not_self_advect(self, grid):
        """A unidirectional shear is a steady solution of the Euler nonlinearity."""
        shear = shear_mode(grid)
        assert hs_norm(bilinear_B(shear, shear)) < 1e-12


class TestPlaneWave:
    """Single-mode fields."""

    def test_transverse_amplitude_is_solenoidal(self, grid):
        """k . a = 0 tags the wave solenoidal."""
        assert plane_wave(grid, (1, 0), (0, 1)).solenoidal
        assert not plane_wave(grid, (1, 0), (1, 0)).solenoidal

    @pytest.mark.parametrize("m", [(0, 0), (8, 0), (1, 0, 0)])
    def test_invalid_wavevectors_are_rejected(self, grid, m):
        """Zero, Nyquist and wrong-dimension wavevectors raise ValidationFailure."""
        with pytest.raises(ValidationFailure):
            plane_wave(grid, m, (0, 1))

    def test_real_field_norm(self, grid):
        """2 Re(a exp(i k.x)) has squared norm 2 L^d |a|^2."""
        wave = plane_wave(grid, (2, 1), (1, -2))
        assert hs_norm(wave) ** 2 == pytest.approx(2 * grid.volume * 5, rel=1e-12)
