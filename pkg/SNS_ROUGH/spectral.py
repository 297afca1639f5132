"""Torus grids, solenoidal spectral fields, Fourier multipliers and the dealiased bilinear term."""

from dataclasses import dataclass
from functools import lru_cache
import math
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import validator
import scipy.fft

from SNS_ROUGH import config
from SNS_ROUGH.exceptions import GridMismatchError
from SNS_ROUGH.exceptions import ValidationFailure


class TorusGrid(BaseModel):
    """Periodic box [0, L)^d sampled with N points per axis.

    The dealias mask keeps the modes with |m_i| <= dealias_fraction * N / 2 on every axis. With the
    default 2/3 rule quadratic products are exact on the retained modes whenever 3 does not divide N,
    so powers of two are the intended resolutions. The Nyquist index is never retained.

    """

    d: int = 2
    N: int = 64
    L: float = 2 * math.pi
    dealias_fraction: float = 2.0 / 3.0

    class Config:
        frozen = True

    @validator("d")
    def check_dimension(cls, d):
        if d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        return d

    @validator("N")
    def check_resolution(cls, N):
        if N < 8 or N % 2:
            raise ValueError("modes per axis must be even and at least 8")
        return N

    @validator("L")
    def check_period(cls, L):
        if L <= 0:
            raise ValueError("period must be positive")
        return L

    @validator("dealias_fraction")
    def check_fraction(cls, fraction):
        if not 0 < fraction <= 1:
            raise ValueError("dealias fraction must lie in (0, 1]")
        return fraction

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def volume(self) -> float:
        return self.L ** self.d

    @property
    def cell_volume(self) -> float:
        return (self.L / self.N) ** self.d

    @property
    def cutoff(self) -> int:
        """Largest retained |m_i| on each axis."""
        return min(int(math.floor(self.dealias_fraction * self.N / 2 + 1e-12)), self.N // 2 - 1)

    @property
    def axes(self) -> Tuple[int, ...]:
        """Spatial axes of a coefficient array (always the trailing d axes)."""
        return tuple(range(-self.d, 0))


@dataclass(frozen=True)
class GridArrays:
    """Wavenumber tables shared by every field on one grid."""

    index: np.ndarray  # integer wavenumbers m, shape (d, N, ..., N)
    k: np.ndarray  # physical wavevectors 2 pi m / L
    k2: np.ndarray
    inv_k2: np.ndarray  # 1 / |k|^2, zero at the mean mode
    mask: np.ndarray


@lru_cache(maxsize=None)
def grid_arrays(grid: TorusGrid) -> GridArrays:
    """Build (once per grid) the wavenumber tables.

    Args:
        grid: Torus grid

    Returns:
        Read-only wavenumber arrays in FFT index order

    """
    freqs = np.rint(scipy.fft.fftfreq(grid.N, d=1.0 / grid.N)).astype(int)
    index = np.stack(np.meshgrid(*([freqs] * grid.d), indexing="ij"))
    k = index * (2 * math.pi / grid.L)
    k2 = np.sum(k ** 2, axis=0)
    inv_k2 = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv_k2, where=k2 > 0)
    mask = np.all(np.abs(index) <= grid.cutoff, axis=0)

    for array in (index, k, k2, inv_k2, mask):
        array.setflags(write=False)

    return GridArrays(index=index, k=k, k2=k2, inv_k2=inv_k2, mask=mask)


def grid_points(grid: TorusGrid) -> np.ndarray:
    """Physical coordinates of the grid, shape (d, N, ..., N)."""
    x = np.arange(grid.N) * (grid.L / grid.N)
    return np.stack(np.meshgrid(*([x] * grid.d), indexing="ij"))


def forward_transform(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Physical values to coefficients over the trailing d axes."""
    return scipy.fft.fftn(values, axes=grid.axes, norm="forward", workers=config.FFT_WORKERS)


def inverse_transform(coeffs: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Coefficients to (real) physical values over the trailing d axes."""
    return scipy.fft.ifftn(coeffs, axes=grid.axes, norm="forward", workers=config.FFT_WORKERS).real


class SpectralField:
    """Fourier coefficients of a real d-component vector field on a torus grid.

    Coefficients use the forward-normalized convention v(x) = sum_k coeffs[:, k] exp(i k.x), so
    that ||v||^2_{L^2} = L^d sum_k |coeffs[:, k]|^2. The mean mode is always zero.

    """

    __slots__ = ("grid", "coeffs", "solenoidal")

    def __init__(self, grid: TorusGrid, coeffs: np.ndarray, solenoidal: bool = False):
        """Create a field from a coefficient array (the array is copied).

        Args:
            grid: Torus grid the field lives on
            coeffs: Complex array of shape (d, N, ..., N) in FFT index order
            solenoidal: Whether the field is tagged divergence free

        """
        coeffs = np.array(coeffs, dtype=np.complex128)
        expected = (grid.d,) + grid.shape
        if coeffs.shape != expected:
            raise ValidationFailure(f"coefficient array has shape {coeffs.shape}, expected {expected}")

        self._set(grid, coeffs, solenoidal)

    def _set(self, grid: TorusGrid, coeffs: np.ndarray, solenoidal: bool):
        coeffs[(slice(None),) + (0,) * grid.d] = 0.0
        self.grid = grid
        self.coeffs = coeffs
        self.solenoidal = solenoidal

    @classmethod
    def wrap(cls, grid: TorusGrid, coeffs: np.ndarray, solenoidal: bool = False) -> "SpectralField":
        """Create a field that takes ownership of a freshly computed coefficient array."""
        field = cls.__new__(cls)
        field._set(grid, coeffs, solenoidal)
        return field

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls.wrap(grid, np.zeros((grid.d,) + grid.shape, dtype=np.complex128), solenoidal=True)

    @classmethod
    def from_physical(cls, grid: TorusGrid, values: np.ndarray, solenoidal: bool = False) -> "SpectralField":
        """Transform physical values of shape (d, N, ..., N) into a field."""
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.d,) + grid.shape:
            raise ValidationFailure(f"physical array has shape {values.shape}")
        return cls.wrap(grid, forward_transform(values, grid), solenoidal)

    def to_physical(self) -> np.ndarray:
        return inverse_transform(self.coeffs, self.grid)

    def copy(self) -> "SpectralField":
        return SpectralField.wrap(self.grid, self.coeffs.copy(), self.solenoidal)

    def multiply(self, multiplier: np.ndarray) -> "SpectralField":
        """Apply a diagonal Fourier multiplier of shape (N, ..., N)."""
        return SpectralField.wrap(self.grid, self.coeffs * multiplier, self.solenoidal)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def check_grid(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise GridMismatchError(f"fields live on different grids: {self.grid} and {other.grid}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self.check_grid(other)
        return SpectralField.wrap(self.grid, self.coeffs + other.coeffs, self.solenoidal and other.solenoidal)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self.check_grid(other)
        return SpectralField.wrap(self.grid, self.coeffs - other.coeffs, self.solenoidal and other.solenoidal)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField.wrap(self.grid, self.coeffs * scalar, self.solenoidal)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField.wrap(self.grid, -self.coeffs, self.solenoidal)

    def __repr__(self) -> str:
        return f"SpectralField(d={self.grid.d}, N={self.grid.N}, solenoidal={self.solenoidal})"


class NormSpec(BaseModel):
    """Index pair (s, p) of the Bessel potential space H^{s,p}."""

    s: float = 0.0
    p: float = 2.0

    class Config:
        frozen = True

    @validator("p")
    def check_exponent(cls, p):
        if p < 1:
            raise ValueError("integrability exponent must be at least 1")
        return p


def bessel_multiplier(grid: TorusGrid, s: float) -> np.ndarray:
    """Multiplier (1 + |k|^2)^{s/2} of J^s."""
    return (1.0 + grid_arrays(grid).k2) ** (s / 2.0)


def yosida_multiplier(grid: TorusGrid, n: Optional[int]) -> np.ndarray:
    """Multiplier n / (n + |k|^2) of R_n; all ones when n is None (no smoothing)."""
    k2 = grid_arrays(grid).k2
    if n is None:
        return np.ones_like(k2)
    if n <= 0:
        raise ValidationFailure(f"Yosida level must be a positive integer, got {n}")
    return n / (n + k2)


def leray_project(field: SpectralField) -> SpectralField:
    """Project onto divergence-free fields, (I - k k^T / |k|^2) per mode."""
    arrays = grid_arrays(field.grid)
    k_dot_v = np.sum(arrays.k * field.coeffs, axis=0)
    coeffs = field.coeffs - arrays.k * (k_dot_v * arrays.inv_k2)
    return SpectralField.wrap(field.grid, coeffs, solenoidal=True)


def bessel_potential(field: SpectralField, s: float) -> SpectralField:
    """Apply J^s = (I - Laplacian)^{s/2}."""
    if s == 0:
        return field.copy()
    return field.multiply(bessel_multiplier(field.grid, s))


def stokes_semigroup(field: SpectralField, t: float, nu: float = 1.0) -> SpectralField:
    """Apply exp(-t nu A), i.e. multiply mode k by exp(-nu |k|^2 t).

    Args:
        field: Solenoidal field
        t: Time, non-negative
        nu: Viscosity, positive

    Returns:
        Evolved field

    """
    if t < 0:
        raise ValidationFailure(f"semigroup time must be non-negative, got {t}")
    if nu <= 0:
        raise ValidationFailure(f"viscosity must be positive, got {nu}")
    return field.multiply(np.exp(-nu * t * grid_arrays(field.grid).k2))


def yosida_smoother(field: SpectralField, n: Optional[int]) -> SpectralField:
    """Apply R_n = n (n I + A)^{-1}; n = None leaves the field unchanged."""
    return field.multiply(yosida_multiplier(field.grid, n))


def dealias(field: SpectralField) -> SpectralField:
    return field.multiply(grid_arrays(field.grid).mask)


def bilinear_B(u: SpectralField, v: SpectralField) -> SpectralField:
    """Pseudospectral Leray-projected advection Pi (u . grad) v.

    Both inputs are dealiased before the physical-space product and the product is dealiased again,
    so on the retained modes the result equals the exact convolution.

    Args:
        u: Advecting (solenoidal) field
        v: Advected field

    Returns:
        Solenoidal, mean-free field B(u, v)

    """
    u.check_grid(v)
    grid = u.grid
    arrays = grid_arrays(grid)

    u_values = inverse_transform(u.coeffs * arrays.mask, grid)
    v_hat = v.coeffs * arrays.mask
    # grad_v[i, j] = d_i v_j
    grad_v = inverse_transform(1j * arrays.k[:, None] * v_hat[None, :], grid)
    advection = np.einsum("i...,ij...->j...", u_values, grad_v)

    product = forward_transform(advection, grid) * arrays.mask
    return leray_project(SpectralField.wrap(grid, product))


def hs_norm(field: SpectralField, s: float = 0.0) -> float:
    """Hilbert norm ||J^s v||_{L^2}, exact by Parseval."""
    weights = (1.0 + grid_arrays(field.grid).k2) ** s
    energy = np.sum(weights * np.sum(np.abs(field.coeffs) ** 2, axis=0))
    return float(math.sqrt(field.grid.volume * energy))


def gradient_norm(field: SpectralField) -> float:
    """||grad v||_{L^2}."""
    energy = np.sum(grid_arrays(field.grid).k2 * np.sum(np.abs(field.coeffs) ** 2, axis=0))
    return float(math.sqrt(field.grid.volume * energy))


def lp_quadrature(values: np.ndarray, grid: TorusGrid, p: float) -> float:
    """Equal-weight quadrature of (integral |v(x)|^p dx)^{1/p} with |v(x)| the Euclidean magnitude."""
    magnitude = np.sqrt(np.sum(values ** 2, axis=0))
    return float((grid.cell_volume * np.sum(magnitude ** p)) ** (1.0 / p))


def sobolev_norm(field: SpectralField, spec: NormSpec) -> float:
    """Norm of the field in H^{s,p}.

    Args:
        field: Spectral field
        spec: Sobolev index and integrability exponent

    Returns:
        ||J^s v||_{L^p}; Parseval for p = 2, grid quadrature otherwise

    """
    if spec.p == 2:
        return hs_norm(field, spec.s)
    return lp_quadrature(bessel_potential(field, spec.s).to_physical(), field.grid, spec.p)


def lp_norm(field: SpectralField, p: float) -> float:
    return sobolev_norm(field, NormSpec(s=0.0, p=p))


def l2_pairing(a: SpectralField, b: SpectralField) -> float:
    """Plain L^2 inner product of two real fields."""
    a.check_grid(b)
    return float(a.grid.volume * np.real(np.sum(a.coeffs * np.conj(b.coeffs))))


def duality_pairing(a: SpectralField, b: SpectralField, s: float) -> float:
    """H^s - H^{-s} duality bracket <J^s a, J^{-s} b>, which equals the L^2 pairing for every s."""
    a.check_grid(b)
    weights = bessel_multiplier(a.grid, s)
    return float(a.grid.volume * np.real(np.sum((weights * a.coeffs) * np.conj(b.coeffs / weights))))


def plane_wave(grid: TorusGrid, m: Sequence[int], amplitude: Sequence[complex]) -> SpectralField:
    """Real field 2 Re(amplitude exp(i k.x)) for the integer wavevector m.

    Args:
        grid: Torus grid
        m: Integer wavevector, non-zero, not a Nyquist index
        amplitude: Complex d-vector placed at m (its conjugate goes to -m)

    Returns:
        Field with the two coefficients set

    """
    m = tuple(int(i) for i in m)
    if len(m) != grid.d or not any(m):
        raise ValidationFailure(f"wavevector {m} is not a non-zero {grid.d}-vector")
    if max(abs(i) for i in m) >= grid.N // 2:
        raise ValidationFailure(f"wavevector {m} does not fit on the grid")

    coeffs = np.zeros((grid.d,) + grid.shape, dtype=np.complex128)
    amplitude = np.asarray(amplitude, dtype=np.complex128)
    positive = tuple(i % grid.N for i in m)
    negative = tuple(-i % grid.N for i in m)
    coeffs[(slice(None),) + positive] = amplitude
    coeffs[(slice(None),) + negative] = np.conj(amplitude)

    k = np.asarray(m, dtype=float)
    solenoidal = abs(np.dot(k, amplitude)) == 0
    return SpectralField.wrap(grid, coeffs, solenoidal)


def shear_mode(grid: TorusGrid, amplitude: float = 1.0) -> SpectralField:
    """Unidirectional shear amplitude * (sin(2 pi x_2 / L), 0[, 0])."""
    x = grid_points(grid)
    values = np.zeros((grid.d,) + grid.shape)
    values[0] = amplitude * np.sin(2 * math.pi * x[1] / grid.L)
    return SpectralField.from_physical(grid, values, solenoidal=True)


def random_field(
        grid: TorusGrid,
        rng: np.random.Generator,
        slope: float = -1.0,
        band: Optional[int] = None,
        solenoidal: bool = True,
        normalize: bool = True
) -> SpectralField:
    """Draw a random real dealiased field with spectrum (1 + |k|^2)^{slope/2}.

    Args:
        grid: Torus grid
        rng: Random generator
        slope: Spectral slope of the coefficient amplitudes
        band: Optional band limit on |m_i|
        solenoidal: Whether to Leray-project the draw
        normalize: Whether to rescale to unit H-norm

    Returns:
        Random field

    """
    arrays = grid_arrays(grid)
    values = rng.standard_normal((grid.d,) + grid.shape)
    coeffs = forward_transform(values, grid) * (1.0 + arrays.k2) ** (slope / 2.0) * arrays.mask
    if band is not None:
        coeffs = coeffs * np.all(np.abs(arrays.index) <= band, axis=0)

    field = SpectralField.wrap(grid, coeffs)
    if solenoidal:
        field = leray_project(field)

    if normalize:
        norm = hs_norm(field)
        if norm > 0:
            field = field * (1.0 / norm)

    return field
