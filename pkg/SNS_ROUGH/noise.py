"""Cylindrical Wiener noise, the multiplicative covariance G, its Yosida smoothing G_n and gamma-radonifying norms."""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import hashlib
import itertools
import logging
import math
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import validator

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import inverse_transform
from SNS_ROUGH.spectral import random_field


logger = logging.getLogger(__name__)


class NoiseFlavor(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "lipschitz_multiplicative"


class NoiseSpec(BaseModel):
    """Diagonal noise G(v) e_j = sigma_j(v) e_j on a truncated trigonometric basis.

    Coefficients decay like a_j = amplitude * (1 + |k_j|^2)^{-alpha/2}. In the multiplicative flavor
    sigma_j(v) = a_j (1 + tanh <J^{-g} v, J^{-g} e_j>) / 2. J = None uses every mode of the dealias band.

    """

    g: float = 0.5
    alpha: float = 0.75
    J: Optional[int] = None
    flavor: NoiseFlavor = NoiseFlavor.MULTIPLICATIVE
    seed: Optional[int] = None
    amplitude: float = 1.0

    class Config:
        frozen = True

    @validator("g")
    def check_roughness(cls, g):
        if not 0 < g < 1:
            raise ValueError("roughness g must lie in (0, 1)")
        return g

    @validator("alpha")
    def check_decay(cls, alpha):
        if alpha < 0:
            raise ValueError("coefficient decay alpha must be non-negative")
        return alpha

    @validator("J")
    def check_modes(cls, J):
        if J is not None and J < 1:
            raise ValueError("number of active modes must be positive")
        return J

    @validator("amplitude")
    def check_amplitude(cls, amplitude):
        if amplitude < 0:
            raise ValueError("noise amplitude must be non-negative")
        return amplitude

    def summable_in(self, d: int) -> bool:
        """Whether sum_j a_j^2 ||e_j||^2_{H^{-g}} stays bounded as the basis grows."""
        return self.alpha + self.g > d / 2


@dataclass(frozen=True, eq=False)
class NoiseModes:
    """Ordered table of the real divergence-free trigonometric basis e_j.

    Mode j is c * polarization_j * cos(k_j . x) (parity 0) or c * polarization_j * sin(k_j . x)
    (parity 1) with c = sqrt(2 / L^d), so that the modes are orthonormal in H.

    """

    index: np.ndarray  # integer wavevectors, shape (J, d)
    k2: np.ndarray  # physical |k_j|^2
    polarization: np.ndarray  # unit vectors orthogonal to k_j, shape (J, d)
    parity: np.ndarray
    phase: np.ndarray  # 1 for cos, -1j for sin: coefficient at +m is c * phase * polarization / 2
    positive: np.ndarray  # flat grid position of +m
    negative: np.ndarray  # flat grid position of -m
    double_positive: np.ndarray  # flat grid position of 2m (mod N)
    double_negative: np.ndarray
    normalization: float

    @property
    def count(self) -> int:
        return len(self.k2)


def _in_half_space(m: Tuple[int, ...]) -> bool:
    for i in m:
        if i:
            return i > 0
    return False


def _polarizations(m: Tuple[int, ...]) -> List[np.ndarray]:
    vector = np.asarray(m, dtype=float)
    if len(m) == 2:
        return [np.array([-vector[1], vector[0]]) / np.linalg.norm(vector)]

    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(vector)))] = 1.0
    first = np.cross(vector, helper)
    first /= np.linalg.norm(first)
    second = np.cross(vector, first)
    second /= np.linalg.norm(second)
    return [first, second]


@lru_cache(maxsize=None)
def noise_modes(grid: TorusGrid, J: Optional[int] = None) -> NoiseModes:
    """Enumerate the basis inside the dealias band.

    Wavevectors are taken from the half-space "first non-zero component positive", ordered by |m|^2
    and then by descending lexicographic order; each contributes every polarization, cos then sin.

    Args:
        grid: Torus grid
        J: Number of modes to keep; None keeps them all

    Returns:
        Mode table

    """
    cutoff = grid.cutoff
    candidates = [
        m for m in itertools.product(range(-cutoff, cutoff + 1), repeat=grid.d) if _in_half_space(m)
    ]
    candidates.sort(key=lambda m: (sum(i * i for i in m), tuple(-i for i in m)))

    index, polarization, parity = [], [], []
    for m in candidates:
        for pol in _polarizations(m):
            for par in (0, 1):
                index.append(m)
                polarization.append(pol)
                parity.append(par)

    total = len(index)
    if J is None:
        J = total
    if J > total:
        raise ValidationFailure(f"J={J} exceeds the {total} modes available in the dealias band")

    index = np.asarray(index[:J], dtype=int)
    polarization = np.asarray(polarization[:J])
    parity = np.asarray(parity[:J], dtype=int)
    k2 = np.sum((index * (2 * math.pi / grid.L)) ** 2, axis=1)

    def flat(wavevectors):
        return np.ravel_multi_index(tuple((wavevectors % grid.N).T), grid.shape)

    return NoiseModes(
        index=index,
        k2=k2,
        polarization=polarization,
        parity=parity,
        phase=np.where(parity == 0, 1.0 + 0j, -1j),
        positive=flat(index),
        negative=flat(-index),
        double_positive=flat(2 * index),
        double_negative=flat(-2 * index),
        normalization=math.sqrt(2.0 / grid.volume)
    )


def active_modes(spec: NoiseSpec, grid: TorusGrid) -> NoiseModes:
    return noise_modes(grid, spec.J)


def synthesize(grid: TorusGrid, modes: NoiseModes, weights: np.ndarray) -> SpectralField:
    """Assemble sum_j weights_j e_j as a spectral field."""
    values = (0.5 * modes.normalization * np.asarray(weights) * modes.phase)[:, None] * modes.polarization
    flat = np.zeros((grid.d, grid.N ** grid.d), dtype=np.complex128)
    for component in range(grid.d):
        np.add.at(flat[component], modes.positive, values[:, component])
        np.add.at(flat[component], modes.negative, np.conj(values[:, component]))
    return SpectralField.wrap(grid, flat.reshape((grid.d,) + grid.shape), solenoidal=True)


def mode_coordinates(v: SpectralField, modes: NoiseModes, s: float = 0.0) -> np.ndarray:
    """Inner products <J^s v, J^s e_j> for every mode j."""
    grid = v.grid
    at_m = v.coeffs.reshape(grid.d, -1)[:, modes.positive]
    dot = np.sum(at_m * modes.polarization.T, axis=0)
    weights = (1.0 + modes.k2) ** s
    return grid.volume * modes.normalization * weights * np.real(np.conj(modes.phase) * dot)


def basis_field(grid: TorusGrid, j: int, J: Optional[int] = None) -> SpectralField:
    """Return the H-normalized basis mode e_j.

    Args:
        grid: Torus grid
        j: Mode index
        J: Size of the active truncation (None for all modes)

    Returns:
        Real solenoidal trigonometric mode

    """
    modes = noise_modes(grid, J)
    if not 0 <= j < modes.count:
        raise ValidationFailure(f"mode index {j} out of range for {modes.count} modes")
    weights = np.zeros(modes.count)
    weights[j] = 1.0
    return synthesize(grid, modes, weights)


def mode_field(grid: TorusGrid, m: Sequence[int], parity: int = 0, polarization: int = 0) -> SpectralField:
    """Return the normalized basis mode with wavevector m (or its half-space mirror)."""
    m = tuple(int(i) for i in m)
    if not any(m):
        raise ValidationFailure("the mean mode carries no noise")
    if not _in_half_space(m):
        m = tuple(-i for i in m)
        if parity == 1:
            # sin(-k.x) = -sin(k.x)
            return -mode_field(grid, m, parity, polarization)

    modes = noise_modes(grid)
    matches = np.flatnonzero(np.all(modes.index == np.asarray(m), axis=1) & (modes.parity == parity))
    if polarization >= len(matches):
        raise ValidationFailure(f"no basis mode with wavevector {m}, parity {parity}, polarization {polarization}")
    weights = np.zeros(modes.count)
    weights[matches[polarization]] = 1.0
    return synthesize(grid, modes, weights)


def coefficient_decay(spec: NoiseSpec, modes: NoiseModes) -> np.ndarray:
    """a_j = amplitude * (1 + |k_j|^2)^{-alpha/2}."""
    return spec.amplitude * (1.0 + modes.k2) ** (-spec.alpha / 2.0)


def sigma_values(spec: NoiseSpec, v: SpectralField, modes: Optional[NoiseModes] = None) -> np.ndarray:
    """All coefficients sigma_j(v) of the diagonal covariance."""
    modes = modes or active_modes(spec, v.grid)
    decay = coefficient_decay(spec, modes)
    if spec.flavor == NoiseFlavor.ADDITIVE:
        return decay
    pairing = mode_coordinates(v, modes, s=-spec.g)
    return decay * (1.0 + np.tanh(pairing)) / 2.0


def sigma_eval(spec: NoiseSpec, j: int, v: SpectralField) -> float:
    modes = active_modes(spec, v.grid)
    if not 0 <= j < modes.count:
        raise ValidationFailure(f"mode index {j} out of range for {modes.count} modes")
    return float(sigma_values(spec, v, modes)[j])


def _check_coefficients(y: Sequence[float], modes: NoiseModes) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (modes.count,):
        raise ValidationFailure(f"coefficient sequence has length {y.size}, expected {modes.count}")
    return y


def apply_G(spec: NoiseSpec, v: SpectralField, y: Sequence[float]) -> SpectralField:
    """Evaluate G(v) y = sum_j sigma_j(v) y_j e_j."""
    modes = active_modes(spec, v.grid)
    y = _check_coefficients(y, modes)
    return synthesize(v.grid, modes, sigma_values(spec, v, modes) * y)


def mode_yosida(modes: NoiseModes, n: Optional[int]) -> np.ndarray:
    """Yosida multiplier r_n(k_j) = n / (n + |k_j|^2) per mode."""
    if n is None:
        return np.ones_like(modes.k2)
    if n <= 0:
        raise ValidationFailure(f"Yosida level must be a positive integer, got {n}")
    return n / (n + modes.k2)


def apply_Gn(spec: NoiseSpec, n: Optional[int], v: SpectralField, y: Sequence[float]) -> SpectralField:
    """Evaluate G_n(v) y = R_n G(v) y."""
    modes = active_modes(spec, v.grid)
    y = _check_coefficients(y, modes)
    return synthesize(v.grid, modes, sigma_values(spec, v, modes) * mode_yosida(modes, n) * y)


def square_function_l4(grid: TorusGrid, modes: NoiseModes, weights: np.ndarray) -> float:
    """L^4 norm of x -> (sum_j weights_j |e_j(x)|^2)^{1/2} by grid quadrature.

    The square function is assembled in Fourier space from cos^2 = (1 + cos 2 theta) / 2 and
    sin^2 = (1 - cos 2 theta) / 2, which is exact at the grid points.

    """
    scale = modes.normalization ** 2 * np.asarray(weights)
    sign = np.where(modes.parity == 0, 1.0, -1.0)

    coeffs = np.zeros(grid.N ** grid.d, dtype=np.complex128)
    coeffs[0] = 0.5 * np.sum(scale)
    np.add.at(coeffs, modes.double_positive, 0.25 * sign * scale)
    np.add.at(coeffs, modes.double_negative, 0.25 * sign * scale)

    squared = np.maximum(inverse_transform(coeffs.reshape(grid.shape), grid), 0.0)
    return float((grid.cell_volume * np.sum(squared ** 2)) ** 0.25)


def gamma_norm_from_sigma(
        grid: TorusGrid, modes: NoiseModes, sigma: np.ndarray, s: float, p: int, n: Optional[int] = None
) -> float:
    """gamma-radonifying norm of y -> sum_j sigma_j r_n(k_j) y_j e_j into H^{s,p}."""
    if p not in (2, 4):
        raise ValidationFailure(f"gamma-radonifying norms are available for p in {{2, 4}}, got {p}")
    weights = (sigma * mode_yosida(modes, n)) ** 2 * (1.0 + modes.k2) ** s
    if p == 2:
        return float(math.sqrt(np.sum(weights)))
    return square_function_l4(grid, modes, weights)


def gamma_radonifying_norm(
        spec: NoiseSpec, v: SpectralField, s: float, p: int, n: Optional[int] = None
) -> float:
    """Norm of G(v) (or G_n(v) when n is given) in gamma(Y; H^{s,p}).

    Args:
        spec: Noise specification
        v: State at which the covariance is evaluated
        s: Sobolev index of the target space
        p: Integrability of the target space, 2 or 4
        n: Optional Yosida level

    Returns:
        Hilbert-Schmidt norm for p = 2, L^4 norm of the square function for p = 4

    """
    if p not in (2, 4):
        raise ValidationFailure(f"gamma-radonifying norms are available for p in {{2, 4}}, got {p}")
    modes = active_modes(spec, v.grid)
    return gamma_norm_from_sigma(v.grid, modes, sigma_values(spec, v, modes), s, p, n)


def lipschitz_constant_estimate(spec: NoiseSpec, grid: TorusGrid) -> float:
    """Analytic Lipschitz constant of v -> G(v) from H^{-g} into gamma(Y; H^{-g}).

    Returns:
        sqrt(sum_j a_j^2 (1 + |k_j|^2)^{-2g} / 4), or 0 for additive noise

    """
    if spec.flavor == NoiseFlavor.ADDITIVE:
        return 0.0
    modes = active_modes(spec, grid)
    decay = coefficient_decay(spec, modes)
    return float(math.sqrt(0.25 * np.sum(decay ** 2 * (1.0 + modes.k2) ** (-2.0 * spec.g))))


def _random_state(grid: TorusGrid, rng: np.random.Generator) -> SpectralField:
    """Random solenoidal state with random slope and log-normal size."""
    field = random_field(grid, rng, slope=rng.uniform(-3.0, 0.0))
    return field * math.exp(rng.normal(0.0, 1.5))


def lipschitz_monte_carlo(spec: NoiseSpec, grid: TorusGrid, pairs: int, seed: int = 0) -> float:
    """Largest sampled ratio ||G(v1) - G(v2)||_{gamma(Y; H^{-g})} / ||v1 - v2||_{H^{-g}}."""
    modes = active_modes(spec, grid)
    rng = np.random.default_rng(seed)
    weights = (1.0 + modes.k2) ** (-spec.g)

    largest = 0.0
    for _ in range(pairs):
        v1 = _random_state(grid, rng)
        v2 = v1 + _random_state(grid, rng) * rng.uniform(1e-3, 1.0)
        difference = hs_norm(v1 - v2, -spec.g)
        if difference == 0:
            continue
        delta = sigma_values(spec, v1, modes) - sigma_values(spec, v2, modes)
        largest = max(largest, math.sqrt(np.sum(delta ** 2 * weights)) / difference)

    return largest


class NoiseBounds(BaseModel):
    """Uniform bounds of the noise, obtained by replacing sigma_j with its supremum a_j."""

    K_g2: float
    K_g4: float
    hs_into_H: float
    n: Optional[int]


def noise_bounds(spec: NoiseSpec, grid: TorusGrid, n: Optional[int] = None) -> NoiseBounds:
    modes = active_modes(spec, grid)
    decay = coefficient_decay(spec, modes)
    return NoiseBounds(
        K_g2=gamma_norm_from_sigma(grid, modes, decay, -spec.g, 2),
        K_g4=gamma_norm_from_sigma(grid, modes, decay, -spec.g, 4),
        hs_into_H=gamma_norm_from_sigma(grid, modes, decay, 0.0, 2, n),
        n=n
    )


class NoiseAssumptionReport(BaseModel):
    """Sampled checks of the growth and Lipschitz assumptions on G."""

    K_g2: float
    K_g4: float
    sampled_sup_g2: float
    sampled_sup_g4: float
    lipschitz_analytic: float
    lipschitz_sampled: float
    domination_holds: bool
    samples: int

    @property
    def passed(self) -> bool:
        tolerance = 1 + 1e-9
        return (
            self.sampled_sup_g2 <= self.K_g2 * tolerance
            and self.sampled_sup_g4 <= self.K_g4 * tolerance
            and self.lipschitz_sampled <= self.lipschitz_analytic * tolerance
            and self.domination_holds
        )


def noise_assumption_report(
        spec: NoiseSpec, grid: TorusGrid, samples: int = 100, seed: int = 0, n_ladder: Sequence[int] = (1, 4, 16, 64)
) -> NoiseAssumptionReport:
    """Check the growth bounds, the G_n domination and the Lipschitz bound on random states."""
    modes = active_modes(spec, grid)
    bounds = noise_bounds(spec, grid)
    rng = np.random.default_rng(seed)

    sup_g2, sup_g4 = 0.0, 0.0
    domination = True
    for _ in range(samples):
        v = _random_state(grid, rng)
        sigma = sigma_values(spec, v, modes)
        full = {p: gamma_norm_from_sigma(grid, modes, sigma, -spec.g, p) for p in (2, 4)}
        sup_g2 = max(sup_g2, full[2])
        sup_g4 = max(sup_g4, full[4])
        for n in n_ladder:
            for p in (2, 4):
                if gamma_norm_from_sigma(grid, modes, sigma, -spec.g, p, n) > full[p] * (1 + 1e-12):
                    domination = False

    report = NoiseAssumptionReport(
        K_g2=bounds.K_g2,
        K_g4=bounds.K_g4,
        sampled_sup_g2=sup_g2,
        sampled_sup_g4=sup_g4,
        lipschitz_analytic=lipschitz_constant_estimate(spec, grid),
        lipschitz_sampled=lipschitz_monte_carlo(spec, grid, samples, seed + 1) if spec.flavor != NoiseFlavor.ADDITIVE else 0.0,
        domination_holds=domination,
        samples=samples
    )
    logger.info("noise assumptions checked on %d samples: passed=%s", samples, report.passed)
    return report


class RoughRegimeRow(BaseModel):
    J: int
    hs_sum: float
    gamma_sq: float
    hs_increment_ratio: float
    gamma_increment_ratio: float
    hs_relative_growth: float
    gamma_relative_change: float


class RoughRegimeReport(BaseModel):
    """Partial sums of the noise into H and into H^{-g} along the ordered basis.

    The increment ratio (S(4J) - S(J)) / (S(J) - S(J/4)) stays above one for a diverging series with
    power-law growth and below one for a convergent series with power-law tail.

    """

    g: float
    alpha: float
    rows: List[RoughRegimeRow]

    @property
    def rough(self) -> bool:
        return all(
            row.hs_increment_ratio > 1 and row.gamma_increment_ratio < 1 and row.hs_relative_growth > 0.05
            for row in self.rows
        )


def rough_regime_certificate(spec: NoiseSpec, grid: TorusGrid, J_values: Sequence[int]) -> RoughRegimeReport:
    """Certify that G is not Hilbert-Schmidt into H while it is gamma-radonifying into H^{-g}.

    Args:
        spec: Noise specification (sigma replaced by a_j)
        grid: Grid large enough to hold 4 * max(J_values) modes
        J_values: Truncations at which the sums are compared

    Returns:
        Certificate rows

    """
    modes = noise_modes(grid)
    if 4 * max(J_values) > modes.count:
        raise ValidationFailure(f"grid holds {modes.count} modes, {4 * max(J_values)} needed")
    if min(J_values) < 4:
        raise ValidationFailure("truncations must hold at least 4 modes")

    decay_sq = coefficient_decay(spec, modes) ** 2
    hs = np.cumsum(decay_sq)
    gamma = np.cumsum(decay_sq * (1.0 + modes.k2) ** (-spec.g))

    def partial(sums, J):
        return float(sums[J - 1])

    rows = []
    for J in J_values:
        quarter, full, quadruple = J // 4, J, 4 * J
        rows.append(RoughRegimeRow(
            J=J,
            hs_sum=partial(hs, full),
            gamma_sq=partial(gamma, full),
            hs_increment_ratio=(partial(hs, quadruple) - partial(hs, full)) / (partial(hs, full) - partial(hs, quarter)),
            gamma_increment_ratio=(
                (partial(gamma, quadruple) - partial(gamma, full)) / (partial(gamma, full) - partial(gamma, quarter))
            ),
            hs_relative_growth=partial(hs, quadruple) / partial(hs, full) - 1.0,
            gamma_relative_change=math.sqrt(partial(gamma, quadruple) / partial(gamma, full)) - 1.0
        ))

    return RoughRegimeReport(g=spec.g, alpha=spec.alpha, rows=rows)


@dataclass(frozen=True, eq=False)
class WienerPath:
    """Increments of the finitely many Brownian motions beta_j driving the noise.

    Attributes:
        dt: Time step
        increments: Array of shape (steps, modes), entry (m, j) ~ Normal(0, dt)
        seed: Seed the increments were drawn from

    """

    dt: float
    increments: np.ndarray
    seed: Optional[int] = None

    @property
    def steps(self) -> int:
        return self.increments.shape[0]

    @property
    def modes(self) -> int:
        return self.increments.shape[1]

    @property
    def T(self) -> float:
        return self.dt * self.steps

    def values(self) -> np.ndarray:
        """Brownian values beta_j(t_m) for m = 0, ..., steps."""
        return np.vstack([np.zeros((1, self.modes)), np.cumsum(self.increments, axis=0)])

    def digest(self) -> str:
        """SHA-256 of the increments, the certificate that two runs were driven alike."""
        return hashlib.sha256(np.ascontiguousarray(self.increments, dtype="<f8").tobytes()).hexdigest()

    def coarsen(self, factor: int) -> "WienerPath":
        """Same Brownian path seen with a step factor times larger."""
        if factor < 1 or self.steps % factor:
            raise ValidationFailure(f"cannot coarsen {self.steps} steps by a factor {factor}")
        summed = self.increments.reshape(self.steps // factor, factor, self.modes).sum(axis=1)
        return WienerPath(dt=self.dt * factor, increments=summed, seed=self.seed)


def sample_wiener(
        spec: NoiseSpec, dt: float, steps: int, seed: Optional[int] = None, modes: Optional[int] = None
) -> WienerPath:
    """Draw reproducible Normal(0, dt) increments.

    Mode j uses its own stream spawned from the seed, so entry (m, j) depends on (seed, m, j) only
    and not on the number of modes or steps requested.

    Args:
        spec: Noise specification (supplies J and the default seed)
        dt: Time step, positive
        steps: Number of steps
        seed: Seed overriding spec.seed
        modes: Number of modes overriding spec.J

    Returns:
        Wiener path

    """
    if dt <= 0:
        raise ValidationFailure(f"time step must be positive, got {dt}")
    if steps < 0:
        raise ValidationFailure(f"number of steps must be non-negative, got {steps}")

    seed = spec.seed if seed is None else seed
    if seed is None:
        raise ValidationFailure("a seed is required to sample a Wiener path")
    modes = spec.J if modes is None else modes
    if modes is None:
        raise ValidationFailure("the number of modes is required to sample a Wiener path")

    scale = math.sqrt(dt)
    increments = np.empty((steps, modes))
    for j, child in enumerate(np.random.SeedSequence(seed).spawn(modes)):
        increments[:, j] = np.random.default_rng(child).normal(0.0, scale, steps)

    return WienerPath(dt=dt, increments=increments, seed=seed)
