"""Ornstein-Uhlenbeck stochastic convolution z_n with frozen coefficients, plus Hölder and Gaussianity diagnostics."""

from dataclasses import dataclass
import logging
import math
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from pydantic import BaseModel
import scipy.stats

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.noise import NoiseModes
from SNS_ROUGH.noise import NoiseSpec
from SNS_ROUGH.noise import WienerPath
from SNS_ROUGH.noise import active_modes
from SNS_ROUGH.noise import mode_yosida
from SNS_ROUGH.noise import sigma_values
from SNS_ROUGH.noise import synthesize
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.spectral import grid_arrays


logger = logging.getLogger(__name__)


@dataclass(eq=False)
class OUTrajectory:
    """Recorded states of z on an increasing time grid starting at z(0) = 0."""

    times: np.ndarray
    states: List[SpectralField]
    spec: NoiseSpec
    nu: float
    n: Optional[int] = None


def ou_weights(modes: NoiseModes, nu: float, dt: float) -> np.ndarray:
    """Per-mode factor turning a Normal(0, dt) increment into the exact OU transition noise.

    The stochastic integral of exp(-lambda (dt - s)) over one step has variance
    (1 - exp(-2 lambda dt)) / (2 lambda), lambda = nu |k_j|^2 > 0.

    """
    rate = 2.0 * nu * modes.k2 * dt
    return np.sqrt(-np.expm1(-rate) / rate)


def ou_variance(a: float, k2: float, nu: float, t: float, r: float = 1.0) -> float:
    """Exact variance of one OU mode coordinate at time t."""
    return a ** 2 * r ** 2 * (-math.expm1(-2.0 * nu * k2 * t)) / (2.0 * nu * k2)


def frozen_factors(
        spec: NoiseSpec,
        grid: TorusGrid,
        v_frozen: SpectralField,
        nu: float,
        dt: float,
        n: Optional[int] = None
) -> Tuple[NoiseModes, np.ndarray, np.ndarray]:
    """Active modes, the semigroup decay on the grid and the per-mode noise amplitude of one step.

    A Normal(0, dt) increment dW_j enters z as amplitude_j * dW_j * e_j.

    """
    if dt <= 0:
        raise ValidationFailure(f"time step must be positive, got {dt}")
    modes = active_modes(spec, grid)
    decay = np.exp(-nu * dt * grid_arrays(grid).k2)
    amplitude = sigma_values(spec, v_frozen, modes) * mode_yosida(modes, n) * ou_weights(modes, nu, dt)
    return modes, decay, amplitude


def ou_step(
        spec: NoiseSpec,
        z: SpectralField,
        v_frozen: SpectralField,
        dW: np.ndarray,
        dt: float,
        nu: float,
        n: Optional[int] = None
) -> SpectralField:
    """Advance z by one frozen-coefficient exponential Euler step.

    Args:
        spec: Noise specification
        z: Current stochastic convolution
        v_frozen: State at which sigma_j is frozen for the step
        dW: Brownian increments of the active modes
        dt: Time step
        nu: Viscosity
        n: Yosida level, None for no smoothing

    Returns:
        z at the next time

    """
    modes, decay, amplitude = frozen_factors(spec, z.grid, v_frozen, nu, dt, n)
    dW = np.asarray(dW, dtype=float)
    if dW.shape != (modes.count,):
        raise ValidationFailure(f"increment slice has length {dW.size}, expected {modes.count}")
    return z.multiply(decay) + synthesize(z.grid, modes, amplitude * dW)


def simulate_ou(
        spec: NoiseSpec,
        grid: TorusGrid,
        wiener: WienerPath,
        nu: float = 1.0,
        n: Optional[int] = None,
        v_frozen: Optional[SpectralField] = None,
        record_stride: int = 1
) -> OUTrajectory:
    """Run the OU recursion along a Wiener path with coefficients frozen at v_frozen."""
    v_frozen = v_frozen if v_frozen is not None else SpectralField.zeros(grid)
    z = SpectralField.zeros(grid)

    times, states = [0.0], [z]
    for step in range(wiener.steps):
        z = ou_step(spec, z, v_frozen, wiener.increments[step], wiener.dt, nu, n)
        if (step + 1) % record_stride == 0:
            times.append((step + 1) * wiener.dt)
            states.append(z)

    logger.debug("OU path of %d steps recorded %d states", wiener.steps, len(states))
    return OUTrajectory(times=np.asarray(times), states=states, spec=spec, nu=nu, n=n)


def weighted_stack(coeffs: np.ndarray, grid: TorusGrid, s: float) -> np.ndarray:
    """Rescale a stack of coefficient arrays so that plain Euclidean norms are H^s norms."""
    return coeffs * np.sqrt(grid.volume * (1.0 + grid_arrays(grid).k2) ** s)


def stack_norms(stack: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(stack) ** 2, axis=tuple(range(1, stack.ndim))))


def weighted_holder(times: np.ndarray, stack: np.ndarray, beta: float) -> Tuple[float, float]:
    """Sup norm and dyadic-lag Hölder quotient of a recorded path whose norm is the Euclidean one.

    Pairs are (t_m, t_{m + lag}) for every m and every lag 1, 2, 4, ... not exceeding the number of
    intervals, plus the full span when that number is not a power of two.

    Returns:
        Tuple of (sup_m ||x(t_m)||, max over pairs ||x(t_m) - x(t_m')|| / |t_m - t_m'|^beta)

    """
    sup = float(np.max(stack_norms(stack)))
    intervals = len(times) - 1

    lags = [2 ** j for j in range(intervals.bit_length()) if 2 ** j <= intervals]
    if intervals and lags[-1] != intervals:
        lags.append(intervals)

    quotient = 0.0
    for lag in lags:
        increments = stack_norms(stack[lag:] - stack[:-lag])
        spans = (times[lag:] - times[:-lag]) ** beta
        quotient = max(quotient, float(np.max(increments / spans)))

    return sup, quotient


def dyadic_holder(times: np.ndarray, coeffs: np.ndarray, grid: TorusGrid, beta: float, s: float) -> Tuple[float, float]:
    """weighted_holder of a stack of coefficient arrays of shape (K, d, N, ..., N) measured in H^s."""
    return weighted_holder(np.asarray(times), weighted_stack(coeffs, grid, s), beta)


def holder_seminorm(traj: OUTrajectory, beta: float, delta: float) -> float:
    """Norm of the trajectory in C^beta([0, T]; H^delta) over dyadic lags.

    Args:
        traj: Recorded trajectory with at least two states
        beta: Hölder exponent in [0, 1); beta = 0 gives the sup norm in time
        delta: Sobolev index

    Returns:
        sup_m ||z(t_m)||_{H^delta} plus the dyadic Hölder quotient

    """
    if len(traj.states) < 2:
        raise ValidationFailure("a Hölder seminorm needs at least two recorded states")
    if not 0 <= beta < 1:
        raise ValidationFailure(f"Hölder exponent must lie in [0, 1), got {beta}")

    grid = traj.states[0].grid
    coeffs = np.stack([state.coeffs for state in traj.states])
    sup, quotient = dyadic_holder(np.asarray(traj.times), coeffs, grid, beta, delta)
    if beta == 0:
        return sup
    return sup + quotient


def ou_mode_coordinates(
        spec: NoiseSpec,
        grid: TorusGrid,
        nu: float,
        dt: float,
        steps: int,
        paths: int,
        seed: int,
        n: Optional[int] = None,
        v_frozen: Optional[SpectralField] = None,
        modes: Optional[Sequence[int]] = None
) -> np.ndarray:
    """Terminal coordinates <z(T), e_j> of many independent frozen-coefficient OU paths.

    The recursion is the one of ou_step written in basis coordinates, vectorized over paths.

    Args:
        spec: Noise specification
        grid: Torus grid
        nu: Viscosity
        dt: Time step
        steps: Number of steps
        paths: Number of independent paths
        seed: Seed of the path ensemble
        n: Yosida level
        v_frozen: State at which sigma is frozen (zero by default)
        modes: Subset of mode indices to simulate (all by default)

    Returns:
        Array of shape (paths, number of simulated modes)

    """
    if paths < 1:
        raise ValidationFailure("at least one path is required")
    v_frozen = v_frozen if v_frozen is not None else SpectralField.zeros(grid)
    table, _, amplitude = frozen_factors(spec, grid, v_frozen, nu, dt, n)
    selection = np.arange(table.count) if modes is None else np.asarray(modes, dtype=int)

    decay = np.exp(-nu * table.k2[selection] * dt)
    amplitude = amplitude[selection]

    rng = np.random.default_rng(seed)
    coordinates = np.zeros((paths, len(selection)))
    scale = math.sqrt(dt)
    for _ in range(steps):
        coordinates = decay * coordinates + amplitude * rng.normal(0.0, scale, coordinates.shape)

    return coordinates


class GaussianityReport(BaseModel):
    """Sample skewness and excess kurtosis against their large-sample 4-sigma bands."""

    samples: int
    skewness: float
    excess_kurtosis: float
    skewness_band: float
    kurtosis_band: float

    @property
    def passed(self) -> bool:
        return abs(self.skewness) <= self.skewness_band and abs(self.excess_kurtosis) <= self.kurtosis_band


def gaussianity_check(samples: np.ndarray) -> GaussianityReport:
    samples = np.asarray(samples, dtype=float).ravel()
    count = samples.size
    return GaussianityReport(
        samples=count,
        skewness=float(scipy.stats.skew(samples)),
        excess_kurtosis=float(scipy.stats.kurtosis(samples, fisher=True)),
        skewness_band=4.0 * math.sqrt(6.0 / count),
        kurtosis_band=4.0 * math.sqrt(24.0 / count)
    )
