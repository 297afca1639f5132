"""Moments of the smoothed stochastic convolution z_n along the Yosida ladder, plus the OU exactness check."""

from dataclasses import dataclass
import logging
import math
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from pydantic import BaseModel

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.experiments.settings import ExperimentConfig
from SNS_ROUGH.noise import mode_yosida
from SNS_ROUGH.noise import noise_bounds
from SNS_ROUGH.noise import sigma_values
from SNS_ROUGH.noise import synthesize
from SNS_ROUGH.ou import frozen_factors
from SNS_ROUGH.ou import gaussianity_check
from SNS_ROUGH.ou import ou_mode_coordinates
from SNS_ROUGH.ou import ou_variance
from SNS_ROUGH.ou import weighted_holder
from SNS_ROUGH.solver import build_initial
from SNS_ROUGH.solver import default_wiener
from SNS_ROUGH.spectral import NormSpec
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import grid_arrays
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import sobolev_norm
from SNS_ROUGH.utils.parallel import ordered_map
from SNS_ROUGH.utils.statistics import mean_and_se
from SNS_ROUGH.utils.statistics import relative_spread


logger = logging.getLogger(__name__)


MOMENT_COLUMNS = ("n", "statistic", "m_or_p", "beta", "delta", "epsilon", "estimate", "std_error", "paths")

EXACTNESS_COLUMNS = ("mode", "k2", "variance", "exact_variance", "std_error", "skewness", "excess_kurtosis", "passed")

# statistics whose moments are bounded uniformly in n
UNIFORM_STATISTICS = ("Lm_H_eps4", "holder_C_beta_H_delta", "sup_H_half", "time_profile")

UNIFORMITY_TOLERANCE = 0.2


@dataclass(frozen=True)
class MomentSettings:
    m: int
    p: int
    epsilon: float
    beta: float
    delta: float
    g: float

    @property
    def g0(self) -> float:
        return self.g + self.epsilon


def _moment_settings(cfg: ExperimentConfig) -> MomentSettings:
    beta, delta, _ = cfg.holder_exponents()
    settings = MomentSettings(
        m=cfg.ou.m, p=cfg.ou.p, epsilon=cfg.ou.epsilon, beta=beta, delta=delta, g=cfg.base.noise.g
    )
    if settings.g0 >= 1:
        raise ValidationFailure(f"g + epsilon must stay below 1, got {settings.g0}")
    return settings


def run_ou_path(task: Tuple[ExperimentConfig, int, MomentSettings]) -> Dict[int, Dict]:
    """Stream z_n for every ladder level along one Wiener path with sigma frozen at the initial state.

    Returns:
        Per level: the L^m-in-time integral, the C^beta norm, the sup of the H^{(1-g)/2} norm and the
        H^{eps,4} norms to the m at the recorded times

    """
    cfg, index, s = task
    base = cfg.base
    grid = base.grid
    wiener = default_wiener(base, seed=cfg.path_seed(index))
    v0 = build_initial(base.initial, grid, base.seed)

    arrays = grid_arrays(grid)
    weights = np.sqrt(grid.volume * (1.0 + arrays.k2[arrays.mask]) ** s.delta)
    norm_spec = NormSpec(s=s.epsilon, p=4)
    half = (1.0 - s.g) / 2.0

    statistics = {}
    for n in cfg.n_ladder:
        modes, decay, amplitude = frozen_factors(base.noise, grid, v0, base.nu, base.dt, n)
        z = SpectralField.zeros(grid)
        integral, sup_half = 0.0, 0.0
        previous = 0.0
        times, stack, profile = [0.0], [z.coeffs[:, arrays.mask] * weights], [0.0]
        for step in range(1, base.steps + 1):
            z = z.multiply(decay) + synthesize(grid, modes, amplitude * wiener.increments[step - 1])
            current = sobolev_norm(z, norm_spec) ** s.m
            integral += 0.5 * base.dt * (previous + current)
            previous = current
            sup_half = max(sup_half, hs_norm(z, half))
            if step % base.record_stride == 0 or step == base.steps:
                times.append(step * base.dt)
                stack.append(z.coeffs[:, arrays.mask] * weights)
                profile.append(current)

        sup, quotient = weighted_holder(np.asarray(times), np.stack(stack), s.beta)
        statistics[n] = {
            "Lm_H_eps4": integral,
            "holder": sup + quotient,
            "sup_H_half": sup_half,
            "times": np.asarray(times),
            "profile": np.asarray(profile)
        }

    logger.debug("OU moment path %d finished", index)
    return statistics


class OUMomentReport(BaseModel):
    rows: List[Dict]

    def estimates(self, statistic: str, m_or_p: Optional[int] = None) -> List[float]:
        return [
            row["estimate"] for row in self.rows
            if row["statistic"] == statistic and (m_or_p is None or row["m_or_p"] == m_or_p)
        ]

    def uniformity(self) -> Dict[str, float]:
        """Relative spread across the ladder of each statistic bounded uniformly in n."""
        spreads = {}
        for row in self.rows:
            if row["statistic"] in UNIFORM_STATISTICS:
                key = f"{row['statistic']}^{row['m_or_p']}"
                spreads.setdefault(key, []).append(row["estimate"])
        return {key: relative_spread(values) for key, values in spreads.items()}

    @property
    def uniform(self) -> bool:
        return all(spread <= UNIFORMITY_TOLERANCE for spread in self.uniformity().values())

    @property
    def hs_norm_grows(self) -> bool:
        norms = self.estimates("hs_norm_Gn_H")
        return all(b >= a for a, b in zip(norms, norms[1:]))


def _time_profile(paths: List[Dict], settings: MomentSettings) -> Tuple[float, float]:
    """max over t > 0 of E||z(t)||^m_{H^{eps,4}} / (t + t^{1-g0} / (1 - g0))^{m/2}, with its standard error."""
    times = paths[0]["times"]
    values = np.stack([path["profile"] for path in paths])
    best, best_se = 0.0, 0.0
    for m in range(1, len(times)):
        t = times[m]
        scale = (t + t ** (1.0 - settings.g0) / (1.0 - settings.g0)) ** (settings.m / 2.0)
        mean, se = mean_and_se(values[:, m])
        if mean / scale > best:
            best, best_se = mean / scale, se / scale
    return best, best_se


def ou_moment_study(cfg: ExperimentConfig, workers: Optional[int] = None) -> OUMomentReport:
    """Monte Carlo moments of z_n for every n of the ladder on coupled Wiener paths.

    Args:
        cfg: Experiment configuration; cfg.ou holds m, p and epsilon
        workers: Worker processes

    Returns:
        One row per (n, statistic, moment order)

    """
    if cfg.paths < 1:
        raise ValidationFailure("at least one path is required")
    settings = _moment_settings(cfg)
    results = ordered_map(run_ou_path, [(cfg, i, settings) for i in range(cfg.paths)], workers)

    def row(n, statistic, m_or_p, estimate, std_error):
        return {
            "n": n,
            "statistic": statistic,
            "m_or_p": m_or_p,
            "beta": settings.beta,
            "delta": settings.delta,
            "epsilon": settings.epsilon,
            "estimate": estimate,
            "std_error": std_error,
            "paths": cfg.paths
        }

    rows = []
    for n in cfg.n_ladder:
        paths = [result[n] for result in results]
        holder = np.array([path["holder"] for path in paths])
        rows.append(row(n, "Lm_H_eps4", settings.m, *mean_and_se([path["Lm_H_eps4"] for path in paths])))
        rows.append(row(n, "holder_C_beta_H_delta", 1, *mean_and_se(holder)))
        rows.append(row(n, "holder_C_beta_H_delta", settings.p, *mean_and_se(holder ** settings.p)))
        rows.append(row(n, "sup_H_half", 1, *mean_and_se([path["sup_H_half"] for path in paths])))
        rows.append(row(n, "time_profile", settings.m, *_time_profile(paths, settings)))
        rows.append(row(n, "hs_norm_Gn_H", 2, noise_bounds(cfg.base.noise, cfg.base.grid, n).hs_into_H, 0.0))

    report = OUMomentReport(rows=rows)
    logger.info("OU moments over n = %s: relative spreads %s", list(cfg.n_ladder), report.uniformity())
    return report


class OUExactnessReport(BaseModel):
    rows: List[Dict]

    @property
    def passed(self) -> bool:
        return all(row["passed"] for row in self.rows)


def ou_exactness_check(cfg: ExperimentConfig) -> OUExactnessReport:
    """Variance and Gaussianity of the terminal coordinates of the lowest modes against the exact OU law.

    With frozen coefficients every coordinate is Gaussian with variance sigma_j^2 r_n(k_j)^2
    (1 - exp(-2 nu |k_j|^2 T)) / (2 nu |k_j|^2).

    """
    base = cfg.base
    grid = base.grid
    paths = cfg.ou.exactness_paths
    if paths < 2:
        raise ValidationFailure("the exactness check needs at least two paths")

    v0 = build_initial(base.initial, grid, base.seed)
    modes, _, _ = frozen_factors(base.noise, grid, v0, base.nu, base.dt, base.n)
    selection = list(range(min(cfg.ou.exactness_modes, modes.count)))
    coordinates = ou_mode_coordinates(
        base.noise, grid, base.nu, base.dt, base.steps, paths, base.wiener_seed, n=base.n, v_frozen=v0, modes=selection
    )

    sigma = sigma_values(base.noise, v0, modes)
    yosida = mode_yosida(modes, base.n)

    rows = []
    for column, j in enumerate(selection):
        samples = coordinates[:, column]
        exact = ou_variance(sigma[j], modes.k2[j], base.nu, base.T, yosida[j])
        variance = float(np.mean(samples ** 2))
        se = float(np.std(samples ** 2, ddof=1) / math.sqrt(paths))
        gaussianity = gaussianity_check(samples)
        rows.append({
            "mode": j,
            "k2": float(modes.k2[j]),
            "variance": variance,
            "exact_variance": exact,
            "std_error": se,
            "skewness": gaussianity.skewness,
            "excess_kurtosis": gaussianity.excess_kurtosis,
            "passed": abs(variance - exact) <= 3.0 * se and gaussianity.passed
        })

    report = OUExactnessReport(rows=rows)
    logger.info("OU exactness over %d modes and %d paths: %s", len(rows), paths, report.passed)
    return report
