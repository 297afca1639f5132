"""Coupled ladder ensembles: every Yosida level of one path is driven by the same Wiener increments.

Path statistics are accumulated while the steppers advance, so no trajectory is held in memory; only
the dealiased coefficients needed for the Hölder statistics are kept, at the record stride.

"""

from dataclasses import dataclass
import logging
import math
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np

from SNS_ROUGH.experiments.settings import ExperimentConfig
from SNS_ROUGH.ou import weighted_holder
from SNS_ROUGH.solver import SplitStepper
from SNS_ROUGH.solver import build_initial
from SNS_ROUGH.solver import default_wiener
from SNS_ROUGH.spectral import NormSpec
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.spectral import grid_arrays
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import lp_norm
from SNS_ROUGH.spectral import sobolev_norm
from SNS_ROUGH.utils.parallel import ordered_map


logger = logging.getLogger(__name__)


# bounds uniform in n for the solution v
SOLUTION_STATISTICS = ("S1_sup_H", "S2_L2_H_delta", "S3_Lq_H_half", "S4_L8d_L4", "S5_holder_Hm1")

# bounds uniform in n for the stochastic convolution z
CONVOLUTION_STATISTICS = ("Z1_Lm_H_eps4", "Z2_holder_H_delta")

STATISTICS = SOLUTION_STATISTICS + CONVOLUTION_STATISTICS


@dataclass(frozen=True)
class StatisticSettings:
    g: float
    d: int
    beta: float
    delta: float
    gamma: float
    m: int
    epsilon: float
    dt: float
    stride: int

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "StatisticSettings":
        beta, delta, gamma = cfg.holder_exponents()
        return cls(
            g=cfg.base.noise.g,
            d=cfg.base.d,
            beta=beta,
            delta=delta,
            gamma=gamma,
            m=cfg.ou.m,
            epsilon=cfg.ou.epsilon,
            dt=cfg.base.dt,
            stride=cfg.base.record_stride
        )


class PathStatistics:
    """Streaming accumulators of the statistics of one (v, z) trajectory."""

    def __init__(self, settings: StatisticSettings, grid: TorusGrid):
        self.settings = settings
        self.grid = grid

        arrays = grid_arrays(grid)
        self.mask = arrays.mask
        self.v_weights = np.sqrt(grid.volume * (1.0 + arrays.k2[arrays.mask]) ** -1.0)
        self.z_weights = np.sqrt(grid.volume * (1.0 + arrays.k2[arrays.mask]) ** settings.delta)

        self.q_half = 4.0 / (1.0 - settings.g)
        self.sup_H = 0.0
        self.integrals = np.zeros(4)
        self.previous = None
        self.times, self.v_stack, self.z_stack = [], [], []

    def observe(self, step: int, v: SpectralField, z: SpectralField):
        s = self.settings
        self.sup_H = max(self.sup_H, hs_norm(v))
        current = np.array([
            hs_norm(v, s.delta) ** 2,
            hs_norm(v, (1 - s.g) / 2) ** self.q_half,
            lp_norm(v, 4) ** (8.0 / s.d),
            sobolev_norm(z, NormSpec(s=s.epsilon, p=4)) ** s.m
        ])
        if self.previous is not None:
            self.integrals += 0.5 * s.dt * (self.previous + current)
        self.previous = current

        if step % s.stride == 0:
            self.times.append(step * s.dt)
            self.v_stack.append(v.coeffs[:, self.mask] * self.v_weights)
            self.z_stack.append(z.coeffs[:, self.mask] * self.z_weights)

    def finish(self) -> Dict[str, float]:
        s = self.settings
        times = np.asarray(self.times)
        v_sup, v_quotient = weighted_holder(times, np.stack(self.v_stack), s.gamma)
        z_sup, z_quotient = weighted_holder(times, np.stack(self.z_stack), s.beta)
        return {
            "S1_sup_H": self.sup_H,
            "S2_L2_H_delta": math.sqrt(self.integrals[0]),
            "S3_Lq_H_half": self.integrals[1] ** (1.0 / self.q_half),
            "S4_L8d_L4": self.integrals[2] ** (s.d / 8.0),
            "S5_holder_Hm1": v_sup + v_quotient,
            "Z1_Lm_H_eps4": self.integrals[3] ** (1.0 / s.m),
            "Z2_holder_H_delta": z_sup + z_quotient
        }


@dataclass
class LadderPathResult:
    """Statistics of one path at every Yosida level, plus the coupling distances and certificates."""

    index: int
    statistics: Dict[int, Dict[str, float]]
    distances: List[float]
    digests: List[str]
    wiener_digest: str

    @property
    def coupled(self) -> bool:
        return all(digest == self.wiener_digest for digest in self.digests)

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.distances, self.distances[1:]))


def run_ladder_path(task: Tuple[ExperimentConfig, int, Optional[StatisticSettings]]) -> LadderPathResult:
    """Advance one stepper per ladder level in lockstep on the path's Wiener increments.

    Args:
        task: Tuple of the experiment configuration, the path index and precomputed statistic settings

    Returns:
        Path result

    """
    cfg, index, settings = task
    settings = settings or StatisticSettings.from_config(cfg)
    base = cfg.base
    grid = base.grid

    wiener = default_wiener(base, seed=cfg.path_seed(index))
    v0 = build_initial(base.initial, grid, base.seed)
    steppers = [SplitStepper(base.with_level(n), v0) for n in cfg.n_ladder]
    trackers = [PathStatistics(settings, grid) for _ in cfg.n_ladder]

    squared = np.zeros(len(steppers) - 1)
    previous = None
    for step in range(base.steps + 1):
        if step:
            for stepper in steppers:
                stepper.advance(wiener.increments[step - 1])
        states = [stepper.v for stepper in steppers]
        for tracker, stepper, v in zip(trackers, steppers, states):
            tracker.observe(step, v, stepper.z)

        gaps = np.array([hs_norm(a - b) ** 2 for a, b in zip(states, states[1:])])
        if previous is not None:
            squared += 0.5 * base.dt * (previous + gaps)
        previous = gaps

    logger.debug("ladder path %d finished", index)
    return LadderPathResult(
        index=index,
        statistics={n: tracker.finish() for n, tracker in zip(cfg.n_ladder, trackers)},
        distances=np.sqrt(squared).tolist(),
        digests=[stepper.consumed_digest() for stepper in steppers],
        wiener_digest=wiener.digest()
    )


def run_ladder_ensemble(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[LadderPathResult]:
    settings = StatisticSettings.from_config(cfg)
    results = ordered_map(run_ladder_path, [(cfg, i, settings) for i in range(cfg.paths)], workers)
    logger.info("ladder ensemble of %d paths over n = %s finished", cfg.paths, list(cfg.n_ladder))
    return results


def statistic_samples(results: List[LadderPathResult], n: int, statistic: str) -> np.ndarray:
    return np.array([result.statistics[n][statistic] for result in results])
