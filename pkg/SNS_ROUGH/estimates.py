"""Numerical checks of the functional inequalities behind the energy and uniqueness estimates.

Every inequality is evaluated on random solenoidal fields with randomized spectral slope; the largest
observed ratio of the left side to the right side (unknown constant stripped) is reported as the
calibrated constant. Calibrated constants are upper envelopes over samples, not sharp constants.

"""

from dataclasses import dataclass
from dataclasses import field as dataclass_field
import itertools
import logging
import math
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from pydantic import BaseModel

from SNS_ROUGH import config
from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.noise import NoiseSpec
from SNS_ROUGH.noise import active_modes
from SNS_ROUGH.noise import gamma_radonifying_norm
from SNS_ROUGH.noise import noise_bounds
from SNS_ROUGH.noise import sigma_values
from SNS_ROUGH.solver import SolverConfig
from SNS_ROUGH.spectral import NormSpec
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.spectral import bilinear_B
from SNS_ROUGH.spectral import gradient_norm
from SNS_ROUGH.spectral import grid_arrays
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import l2_pairing
from SNS_ROUGH.spectral import leray_project
from SNS_ROUGH.spectral import lp_norm
from SNS_ROUGH.spectral import random_field
from SNS_ROUGH.spectral import sobolev_norm
from SNS_ROUGH.spectral import stokes_semigroup
from SNS_ROUGH.state import CalibrationStore
from SNS_ROUGH.utils.parallel import ordered_map
from SNS_ROUGH.utils.statistics import mean_and_se
from SNS_ROUGH.utils.statistics import paired_ratio


logger = logging.getLogger(__name__)


YOSIDA_LADDER = (1, 4, 16, 64, 256)


def random_instance(grid: TorusGrid, rng: np.random.Generator) -> SpectralField:
    """Unit-H random solenoidal field with spectral slope drawn uniformly from [-3, 0]."""
    return random_field(grid, rng, slope=rng.uniform(-3.0, 0.0))


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


@dataclass
class SampleResult:
    lhs: float
    rhs: float
    extras: Dict[str, float] = dataclass_field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return _ratio(self.lhs, self.rhs)


class Inequality:
    """Base class of a checkable bound lhs <= C * rhs."""

    name = ""
    description = ""
    constant_free = False
    dimensions = (2, 3)

    def evaluate(self, grid: TorusGrid, rng: np.random.Generator, g: float) -> SampleResult:
        """Draw one random instance and evaluate both sides.

        Args:
            grid: Torus grid
            rng: Random generator of this sample
            g: Roughness parameter

        Returns:
            Sample result

        """
        raise NotImplementedError


class BilinearNegativeSobolev(Inequality):
    name = "BIL_GL"
    description = (
        "||B(u, v)||_{H^{-1-g}} + ||B(v, u)||_{H^{-1-g}} <= C_g ||u||_{H^{-g}}^{(1-g)/2} "
        "||u||_{H^{1-g}}^{(1+g)/2} ||v||_{H^{(1-g)/2}}"
    )
    dimensions = (2,)

    def sides(self, u: SpectralField, v: SpectralField, g: float) -> Tuple[float, float]:
        lhs = hs_norm(bilinear_B(u, v), -1.0 - g) + hs_norm(bilinear_B(v, u), -1.0 - g)
        rhs = hs_norm(u, -g) ** ((1 - g) / 2) * hs_norm(u, 1 - g) ** ((1 + g) / 2) * hs_norm(v, (1 - g) / 2)
        return lhs, rhs

    def evaluate(self, grid, rng, g):
        return SampleResult(*self.sides(random_instance(grid, rng), random_instance(grid, rng), g))


class BilinearL4(Inequality):
    name = "BIL_L4"
    description = "||B(u, v)||_{H^{-1}} <= ||u||_{L^4} ||v||_{L^4}"
    constant_free = True

    def sides(self, u: SpectralField, v: SpectralField) -> Tuple[float, float]:
        return hs_norm(bilinear_B(u, v), -1.0), lp_norm(u, 4) * lp_norm(v, 4)

    def evaluate(self, grid, rng, g):
        return SampleResult(*self.sides(random_instance(grid, rng), random_instance(grid, rng)))


class TrilinearL4(Inequality):
    name = "TRIL44"
    description = "|<B(u, v), z>| <= ||u||_{L^4} ||grad v|| ||z||_{L^4} <= C ||u||_{H^1} ||v||_{H^1} ||z||_{H^1}"

    def sides(self, u: SpectralField, v: SpectralField, z: SpectralField) -> Tuple[float, float]:
        lhs = abs(l2_pairing(bilinear_B(u, v), z))
        return lhs, hs_norm(u, 1.0) * hs_norm(v, 1.0) * hs_norm(z, 1.0)

    def holder_step(self, u: SpectralField, v: SpectralField, z: SpectralField) -> float:
        """Ratio of the trilinear form to the Hölder bound, at most one."""
        lhs = abs(l2_pairing(bilinear_B(u, v), z))
        return _ratio(lhs, lp_norm(u, 4) * gradient_norm(v) * lp_norm(z, 4))

    def evaluate(self, grid, rng, g):
        u, v, z = (random_instance(grid, rng) for _ in range(3))
        return SampleResult(*self.sides(u, v, z), extras={"holder_step": self.holder_step(u, v, z)})


class GagliardoNirenberg(Inequality):
    name = "GN"
    description = "||v||_{L^4} <= C ||v||^{1-d/4} ||grad v||^{d/4}"

    def sides(self, v: SpectralField) -> Tuple[float, float]:
        d = v.grid.d
        return lp_norm(v, 4), hs_norm(v) ** (1 - d / 4) * gradient_norm(v) ** (d / 4)

    def evaluate(self, grid, rng, g):
        return SampleResult(*self.sides(random_instance(grid, rng)))


class HilbertInterpolation(Inequality):
    name = "INTERP"
    description = "||u||_{H^{(1-g)/2}} <= ||u||_{H^{-g}}^{(1-g)/2} ||u||_{H^{1-g}}^{(1+g)/2}"
    constant_free = True

    def sides(self, u: SpectralField, g: float) -> Tuple[float, float]:
        return hs_norm(u, (1 - g) / 2), hs_norm(u, -g) ** ((1 - g) / 2) * hs_norm(u, 1 - g) ** ((1 + g) / 2)

    def evaluate(self, grid, rng, g):
        return SampleResult(*self.sides(random_instance(grid, rng), g))


class SemigroupSmoothing(Inequality):
    name = "SEMI"
    description = "||exp(-tA) v||_{H^{s'}} <= M (1 + t^{-(s'-s)/2}) ||v||_{H^s}"

    def sides(self, v: SpectralField, t: float, s: float, s_prime: float) -> Tuple[float, float]:
        lhs = hs_norm(stokes_semigroup(v, t), s_prime)
        return lhs, (1.0 + t ** (-(s_prime - s) / 2)) * hs_norm(v, s)

    def multiplier_sup(self, grid: TorusGrid, t: float, gap: float) -> float:
        """Exact operator norm on the retained modes divided by 1 + t^{-gap/2}."""
        arrays = grid_arrays(grid)
        k2 = arrays.k2[arrays.mask]
        return float(np.max((1.0 + k2) ** (gap / 2) * np.exp(-k2 * t))) / (1.0 + t ** (-gap / 2))

    def evaluate(self, grid, rng, g):
        v = random_instance(grid, rng)
        t = 10.0 ** rng.uniform(-3.0, 0.0)
        s = rng.uniform(-1.0, 1.0)
        gap = rng.uniform(0.0, 2.0)
        lhs, rhs = self.sides(v, t, s, s + gap)
        return SampleResult(lhs, rhs, extras={"multiplier_sup": self.multiplier_sup(grid, t, gap)})


class SobolevEmbedding(Inequality):
    name = "SOBEMB"
    description = "||v||_{H^{s,4}} <= C ||v||_{H^{s+d/4}}"

    def sides(self, v: SpectralField, s: float) -> Tuple[float, float]:
        return sobolev_norm(v, NormSpec(s=s, p=4)), hs_norm(v, s + v.grid.d / 4)

    def evaluate(self, grid, rng, g):
        return SampleResult(*self.sides(random_instance(grid, rng), rng.uniform(0.0, 0.5)))


def hs_pairing(a: SpectralField, b: SpectralField, s: float) -> float:
    """Inner product <J^s a, J^s b>."""
    a.check_grid(b)
    weights = (1.0 + grid_arrays(a.grid).k2) ** s
    return float(a.grid.volume * np.real(np.sum(weights * a.coeffs * np.conj(b.coeffs))))


def yosida_operator_norm(k2: np.ndarray, n: int, g: float) -> float:
    """||R_n||_{L(H^{-g}, H)} on the given wavenumbers: sup n (1 + |k|^2)^{g/2} / (n + |k|^2)."""
    return float(np.max(n * (1.0 + k2) ** (g / 2) / (n + k2)))


class SmoothedNoiseHilbertSchmidt(Inequality):
    name = "GN_HS"
    description = "||G_n(v)||_{gamma(Y; H)} <= ||R_n||_{L(H^{-g}, H)} ||G(v)||_{gamma(Y; H^{-g})}"
    constant_free = True

    def sides(self, spec: NoiseSpec, v: SpectralField, n: int) -> Tuple[float, float]:
        modes = active_modes(spec, v.grid)
        lhs = gamma_radonifying_norm(spec, v, 0.0, 2, n)
        return lhs, yosida_operator_norm(modes.k2, n, spec.g) * gamma_radonifying_norm(spec, v, -spec.g, 2)

    def evaluate(self, grid, rng, g):
        v = random_instance(grid, rng) * math.exp(rng.normal(0.0, 1.5))
        n = int(rng.choice(YOSIDA_LADDER))
        return SampleResult(*self.sides(NoiseSpec(g=g), v, n))


class UniquenessTrilinear(Inequality):
    name = "UNIQ_TRIL"
    description = (
        "|<J^{-g} B(V, v1), J^{-g} V>| <= ||V||^2_{H^{1-g}} / 4 + C ||v1||^{4/(1-g)}_{H^{(1-g)/2}} ||V||^2_{H^{-g}}"
    )
    dimensions = (2,)

    def pairing(self, V: SpectralField, v1: SpectralField, g: float) -> float:
        return abs(hs_pairing(bilinear_B(V, v1), V, -g))

    def sides(self, V: SpectralField, v1: SpectralField, g: float) -> Tuple[float, float]:
        """Smallest constant making the bound hold for every rescaling lambda * v1.

        With a the pairing, b = ||V||^2_{H^{1-g}} / 4, c = ||v1||^q ||V||^2_{H^{-g}} and q = 4 / (1 - g),
        sup over lambda > 0 of (lambda a - b) / (lambda^q c) is attained at lambda = q b / (a (q - 1)).

        Returns:
            Tuple (b / (q - 1), c lambda^q) whose ratio is that supremum

        """
        q = 4.0 / (1.0 - g)
        a = self.pairing(V, v1, g)
        b = 0.25 * hs_norm(V, 1 - g) ** 2
        c = hs_norm(v1, (1 - g) / 2) ** q * hs_norm(V, -g) ** 2
        if a == 0 or b == 0:
            return 0.0, 1.0
        optimum = q * b / (a * (q - 1))
        return b / (q - 1), c * optimum ** q

    def duality_step(self, V: SpectralField, v1: SpectralField, g: float) -> float:
        """Pairing over ||B(V, v1)||_{H^{-1-g}} ||V||_{H^{1-g}}, at most one."""
        return _ratio(self.pairing(V, v1, g), hs_norm(bilinear_B(V, v1), -1.0 - g) * hs_norm(V, 1 - g))

    def evaluate(self, grid, rng, g):
        V, v1 = random_instance(grid, rng), random_instance(grid, rng)
        lhs, rhs = self.sides(V, v1, g)
        return SampleResult(lhs, rhs, extras={"duality_step": self.duality_step(V, v1, g)})


INEQUALITIES = {
    inequality.name: inequality
    for inequality in (
        BilinearNegativeSobolev(),
        BilinearL4(),
        TrilinearL4(),
        GagliardoNirenberg(),
        HilbertInterpolation(),
        SemigroupSmoothing(),
        SobolevEmbedding(),
        SmoothedNoiseHilbertSchmidt(),
        UniquenessTrilinear()
    )
}


def get_inequality(ineq_id: str) -> Inequality:
    try:
        return INEQUALITIES[ineq_id]
    except KeyError:
        raise ValidationFailure(f"unknown inequality '{ineq_id}', expected one of {sorted(INEQUALITIES)}") from None


class EstimateReport(BaseModel):
    """Calibration report of one inequality on one grid."""

    inequality_id: str
    samples: int
    max_ratio: float
    mean_ratio: float
    calibrated_constant: float
    constant_free: bool
    exploratory: bool
    d: int
    resolution: int
    g: float
    seed: int
    extras: Dict[str, float] = {}

    @property
    def within_constant_free_tolerance(self) -> bool:
        return self.max_ratio <= 1 + config.CONSTANT_FREE_TOLERANCE

    def row(self) -> Dict:
        row = self.dict(exclude={"extras"})
        row.update({f"extra_{name}": value for name, value in sorted(self.extras.items())})
        return row


def _evaluate_sample(task: Tuple[str, TorusGrid, float, int, int]) -> SampleResult:
    ineq_id, grid, g, seed, index = task
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return INEQUALITIES[ineq_id].evaluate(grid, rng, g)


def run_inequality_suite(
        ineq_id: str, samples: int, grid: TorusGrid, g: float = 0.5, seed: int = 0, workers: Optional[int] = None
) -> EstimateReport:
    """Calibrate one inequality on random instances.

    Sample i is drawn from its own seed sequence, so a report with 2K samples extends the one with K.

    Args:
        ineq_id: Inequality identifier, one of INEQUALITIES
        samples: Number of random instances
        grid: Torus grid
        g: Roughness parameter
        seed: Seed of the instance ensemble
        workers: Worker processes (defaults to SNS_ROUGH_WORKERS)

    Returns:
        Estimate report

    """
    inequality = get_inequality(ineq_id)
    if samples < 1:
        raise ValidationFailure("at least one sample is required")
    if not 0 < g < 1:
        raise ValidationFailure(f"roughness g must lie in (0, 1), got {g}")

    results = ordered_map(_evaluate_sample, [(ineq_id, grid, g, seed, i) for i in range(samples)], workers)
    ratios = np.array([result.ratio for result in results])
    extras = {}
    for result in results:
        for name, value in result.extras.items():
            extras[name] = max(extras.get(name, 0.0), value)

    max_ratio = float(np.max(ratios))
    if not math.isfinite(max_ratio):
        logger.warning("%s produced an unbounded ratio on %s", ineq_id, grid)

    report = EstimateReport(
        inequality_id=ineq_id,
        samples=samples,
        max_ratio=max_ratio,
        mean_ratio=float(np.mean(ratios)),
        calibrated_constant=max_ratio,
        constant_free=inequality.constant_free,
        exploratory=grid.d not in inequality.dimensions,
        d=grid.d,
        resolution=grid.N,
        g=g,
        seed=seed,
        extras=extras
    )
    logger.info("%s on N=%d, d=%d: calibrated constant %.6g over %d samples", ineq_id, grid.N, grid.d, max_ratio, samples)
    return report


def run_all(samples: int, grid: TorusGrid, g: float = 0.5, seed: int = 0, workers: Optional[int] = None) -> List[EstimateReport]:
    return [run_inequality_suite(ineq_id, samples, grid, g, seed, workers) for ineq_id in INEQUALITIES]


class CalibrationDrift(BaseModel):
    inequality_id: str
    base: float
    doubled_resolution: float
    doubled_samples: float

    @property
    def resolution_drift(self) -> float:
        return abs(self.doubled_resolution - self.base) / self.base if self.base else 0.0

    @property
    def sample_drift(self) -> float:
        return abs(self.doubled_samples - self.base) / self.base if self.base else 0.0


def calibration_drift(ineq_id: str, samples: int, grid: TorusGrid, g: float = 0.5, seed: int = 0) -> CalibrationDrift:
    """Calibrate at (N, K), (2N, K) and (N, 2K) to measure the stability of the constant."""
    finer = grid.copy(update={"N": 2 * grid.N})
    return CalibrationDrift(
        inequality_id=ineq_id,
        base=run_inequality_suite(ineq_id, samples, grid, g, seed).calibrated_constant,
        doubled_resolution=run_inequality_suite(ineq_id, samples, finer, g, seed).calibrated_constant,
        doubled_samples=run_inequality_suite(ineq_id, 2 * samples, grid, g, seed).calibrated_constant
    )


def yosida_analytic_sup(n: int, t: float) -> float:
    """sup over r >= 0 of n (1 + r)^{t/2} / (n + r)."""
    if t * n / 2 <= 1:
        return 1.0
    r = (t * n / 2 - 1) / (1 - t / 2)
    return n * (1 + r) ** (t / 2) / (n + r)


class YosidaGrowthRow(BaseModel):
    n: int
    discrete_sup: float
    analytic_sup: float
    relative_gap: float


class YosidaGrowthReport(BaseModel):
    """Growth of ||R_n||_{L(H^s; H^{s+t})} with n, measured on the grid and computed analytically."""

    t_exponent: float
    rows: List[YosidaGrowthRow]
    slope: float

    @property
    def passed(self) -> bool:
        return (
            all(row.discrete_sup <= row.analytic_sup * (1 + 1e-12) and row.relative_gap <= 0.02 for row in self.rows)
            and abs(self.slope - self.t_exponent / 2) <= 0.05
        )


def verify_yosida_growth(
        t_exponent: float, n_ladder: Sequence[int] = (4, 16, 64, 256, 1024), grid: Optional[TorusGrid] = None
) -> YosidaGrowthReport:
    """Compare the grid supremum of n (1 + |k|^2)^{t/2} / (n + |k|^2) with its analytic value.

    Args:
        t_exponent: Regularity gain t in (0, 2)
        n_ladder: Yosida levels
        grid: Grid whose wavenumbers are scanned (all of them, not only the dealias band)

    Returns:
        Report with the log-log slope of the discrete supremum against n

    """
    if not 0 < t_exponent < 2:
        raise ValidationFailure(f"regularity gain must lie in (0, 2), got {t_exponent}")
    if len(n_ladder) < 2 or any(n < 1 for n in n_ladder):
        raise ValidationFailure("the Yosida ladder needs at least two positive levels")

    grid = grid or TorusGrid(N=64)
    k2 = np.unique(grid_arrays(grid).k2)

    rows = []
    for n in n_ladder:
        discrete = float(np.max(n * (1.0 + k2) ** (t_exponent / 2) / (n + k2)))
        analytic = yosida_analytic_sup(n, t_exponent)
        rows.append(YosidaGrowthRow(
            n=n, discrete_sup=discrete, analytic_sup=analytic, relative_gap=(analytic - discrete) / analytic
        ))

    slope = float(np.polyfit(np.log(n_ladder), np.log([row.discrete_sup for row in rows]), 1)[0])
    return YosidaGrowthReport(t_exponent=t_exponent, rows=rows, slope=slope)


def brute_force_B_oracle(u: SpectralField, v: SpectralField) -> SpectralField:
    """Leray-projected advection by direct convolution of Fourier coefficients.

    (u . grad v)^(k) = sum over p + q = k of (u^(p) . i q) v^(q); restricted to the dealias band.

    Args:
        u: Field supported on |m_i| <= N / 4
        v: Field supported on |m_i| <= N / 4

    Returns:
        The same field as bilinear_B(u, v)

    """
    u.check_grid(v)
    grid = u.grid
    arrays = grid_arrays(grid)
    band = grid.N // 4
    inside = np.all(np.abs(arrays.index) <= band, axis=0)
    for field in (u, v):
        if np.any(field.coeffs[:, ~inside] != 0):
            raise ValidationFailure(f"oracle fields must be supported on |m_i| <= {band}")

    wavevectors = np.asarray(list(itertools.product(range(-band, band + 1), repeat=grid.d)))
    positions = tuple((wavevectors % grid.N).T)
    u_hat = u.coeffs[(slice(None),) + positions]
    v_hat = v.coeffs[(slice(None),) + positions]
    q = wavevectors * (2 * math.pi / grid.L)

    result = np.zeros((grid.d, grid.N ** grid.d), dtype=np.complex128)
    for p_index in np.flatnonzero(np.any(u_hat != 0, axis=0)):
        # (u^(p) . i q) for every q
        factor = 1j * (q @ u_hat[:, p_index])
        targets = np.ravel_multi_index(tuple(((wavevectors + wavevectors[p_index]) % grid.N).T), grid.shape)
        for component in range(grid.d):
            np.add.at(result[component], targets, factor * v_hat[component])

    product = result.reshape((grid.d,) + grid.shape) * arrays.mask
    return leray_project(SpectralField.wrap(grid, product))


class MomentBoundReport(BaseModel):
    """Monte Carlo moments of the stochastic integral against the t^{m/2} law."""

    m: int
    paths: int
    times: List[float]
    estimates: List[float]
    std_errors: List[float]
    K_g2: float
    calibrated_constant: float
    exact_second_moment: Optional[List[float]] = None
    scaling_ratios: List[float]
    expected_ratios: List[float]
    scaling_std_errors: List[float]

    @property
    def passed(self) -> bool:
        if self.estimates[0] == 0:
            return all(estimate == 0 for estimate in self.estimates)
        return all(
            abs(ratio - expected) <= 3 * se + 1e-12
            for ratio, expected, se in zip(self.scaling_ratios, self.expected_ratios, self.scaling_std_errors)
        )


def verify_stochastic_moment_bound(
        m: int,
        paths: int,
        solver_config: SolverConfig,
        times: Sequence[float] = (0.1, 0.4),
        v_frozen: Optional[SpectralField] = None,
        chunk: int = 2000
) -> MomentBoundReport:
    """Estimate E||int_0^t G(v) dw||^m_{H^{-g}} with coefficients frozen at v.

    The integral is sum_j sigma_j beta_j(t) e_j, so its squared H^{-g} norm is
    sum_j sigma_j^2 (1 + |k_j|^2)^{-g} beta_j(t)^2, sampled exactly at the requested times.

    Args:
        m: Even moment order, at least 2
        paths: Monte Carlo paths
        solver_config: Supplies the noise, the grid and the seed
        times: Increasing positive times; the constant is calibrated at the first one
        v_frozen: State at which sigma is frozen (zero by default)
        chunk: Paths sampled at once

    Returns:
        Moment report

    """
    if m < 2 or m % 2:
        raise ValidationFailure(f"moment order must be even and at least 2, got {m}")
    if paths < 2:
        raise ValidationFailure("at least two paths are required")
    times = np.asarray(times, dtype=float)
    if times.size < 2 or times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise ValidationFailure("times must be positive and strictly increasing")

    spec = solver_config.noise
    grid = solver_config.grid
    modes = active_modes(spec, grid)
    v_frozen = v_frozen if v_frozen is not None else SpectralField.zeros(grid)
    weights = sigma_values(spec, v_frozen, modes) ** 2 * (1.0 + modes.k2) ** (-spec.g)
    spans = np.sqrt(np.diff(np.concatenate([[0.0], times])))

    rng = np.random.default_rng(np.random.SeedSequence(solver_config.wiener_seed, spawn_key=(m,)))
    samples = np.empty((paths, times.size))
    for start in range(0, paths, chunk):
        count = min(chunk, paths - start)
        increments = rng.standard_normal((count, times.size, modes.count)) * spans[None, :, None]
        beta = np.cumsum(increments, axis=1)
        samples[start:start + count] = np.sum(weights * beta ** 2, axis=2) ** (m / 2)

    estimates, std_errors = zip(*(mean_and_se(samples[:, i]) for i in range(times.size)))
    K_g2 = noise_bounds(spec, grid).K_g2
    first = (estimates[0], std_errors[0])

    ratios, ratio_errors = [], []
    for i in range(times.size):
        if first[0] == 0:
            ratios.append(math.nan)
            ratio_errors.append(math.nan)
            continue
        # every time shares the Brownian path of the first one
        ratio, error = paired_ratio(samples[:, i], samples[:, 0])
        ratios.append(ratio)
        ratio_errors.append(error)

    scale = K_g2 ** m * times[0] ** (m / 2)
    report = MomentBoundReport(
        m=m,
        paths=paths,
        times=times.tolist(),
        estimates=list(estimates),
        std_errors=list(std_errors),
        K_g2=K_g2,
        calibrated_constant=first[0] / scale if scale > 0 else 0.0,
        exact_second_moment=(float(np.sum(weights)) * times).tolist() if m == 2 else None,
        scaling_ratios=ratios,
        expected_ratios=((times / times[0]) ** (m / 2)).tolist(),
        scaling_std_errors=ratio_errors
    )
    logger.info("moment bound m=%d over %d paths: passed=%s", m, paths, report.passed)
    return report


def get_or_calibrate(
        ineq_id: str,
        grid: TorusGrid,
        g: float = 0.5,
        store: Optional[CalibrationStore] = None,
        samples: Optional[int] = None,
        seed: int = 0
) -> float:
    """Read a calibrated constant from the store, calibrating and saving it when missing."""
    store = store or CalibrationStore()
    key = store.key(ineq_id, grid.d, grid.N, g)
    constant = store.get_constant(key)
    if constant is not None:
        return constant

    samples = samples or config.CALIBRATION_SAMPLES
    logger.info("no calibrated constant for %s, calibrating on %d samples", key, samples)
    report = run_inequality_suite(ineq_id, samples, grid, g, seed)
    store.update_constant(key, report.calibrated_constant, report.dict()).save()
    return report.calibrated_constant

