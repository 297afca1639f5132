"""Pathwise uniqueness study: two solutions driven by one Wiener path from nearby initial data.

For V = v1 - v2 the weighted quantity Q(t) = exp(-int_0^t psi) ||V(t)||^2_{H^{-g}} should be a
supermartingale, so its ensemble mean must not increase. Paths are stopped once ||V||_{H^{-g}} exceeds
the threshold N_stop and stay frozen afterwards.

"""

from dataclasses import dataclass
import logging
import math
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from pydantic import BaseModel

from SNS_ROUGH.estimates import get_or_calibrate
from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.experiments.settings import ExperimentConfig
from SNS_ROUGH.noise import lipschitz_constant_estimate
from SNS_ROUGH.noise import mode_field
from SNS_ROUGH.solver import SplitStepper
from SNS_ROUGH.solver import build_initial
from SNS_ROUGH.solver import default_wiener
from SNS_ROUGH.solver import psi_weight
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.state import CalibrationStore
from SNS_ROUGH.utils.parallel import ordered_map
from SNS_ROUGH.utils.statistics import mean_and_se
from SNS_ROUGH.utils.statistics import relative_spread


logger = logging.getLogger(__name__)


SUMMARY_COLUMNS = ("t", "Q_mean", "Q_std_error", "V_mean", "V_std_error", "stopped_fraction")

PATH_COLUMNS = ("index", "V_terminal", "Q_terminal", "psi_integral", "stopped", "tau_index", "identical", "digest")

SCALING_COLUMNS = ("delta0", "V_mean", "V_std_error", "V_over_delta0")

SCALING_TOLERANCE = 0.2


@dataclass(eq=False)
class UniquenessRecord:
    """Recorded times of one coupled pair: ||V||_{H^{-g}}, int psi, Q and whether tau_N has passed."""

    index: int
    times: np.ndarray
    V_norm: np.ndarray
    psi_integral: np.ndarray
    Q: np.ndarray
    stopped: np.ndarray
    tau_index: Optional[int]
    identical: bool
    coupled: bool
    digest: str

    def row(self) -> Dict:
        return {
            "index": self.index,
            "V_terminal": float(self.V_norm[-1]),
            "Q_terminal": float(self.Q[-1]),
            "psi_integral": float(self.psi_integral[-1]),
            "stopped": bool(self.stopped[-1]),
            "tau_index": "" if self.tau_index is None else self.tau_index,
            "identical": self.identical,
            "digest": self.digest
        }


def run_uniqueness_path(task: Tuple[ExperimentConfig, int, float, float, float]) -> UniquenessRecord:
    """Advance the pair (v1, v2) in lockstep on the Wiener path of one ensemble index.

    Args:
        task: Tuple of the configuration, the path index, delta0, C_bar and L_g

    Returns:
        Record at every record_stride steps and at T

    """
    cfg, index, delta0, C_bar, L_g = task
    base = cfg.base
    grid = base.grid
    g = base.noise.g
    dt = base.dt

    wiener = default_wiener(base, seed=cfg.path_seed(index))
    v0 = build_initial(base.initial, grid, base.seed)
    perturbation = mode_field(grid, cfg.uniqueness.perturbation_mode)
    first = SplitStepper(base, v0)
    second = SplitStepper(base, v0 + perturbation * delta0)

    times, norms, integrals, weighted, stopped = [], [], [], [], []
    integral = 0.0
    tau_index = None
    norm = Q = 0.0
    for step in range(base.steps + 1):
        if tau_index is None:
            if step:
                first.advance(wiener.increments[step - 1])
                second.advance(wiener.increments[step - 1])
                # left Riemann sum of psi up to the current time
                integral += psi * dt
            v1, v2 = first.v, second.v
            norm = hs_norm(v1 - v2, -g)
            Q = math.exp(-integral) * norm ** 2
            psi = psi_weight(v1, v2, L_g, C_bar, g)
            if norm > cfg.uniqueness.N_stop:
                tau_index = step
                logger.debug("path %d stopped at step %d with ||V|| = %.3g", index, step, norm)

        if step % base.record_stride == 0 or step == base.steps:
            times.append(step * dt)
            norms.append(norm)
            integrals.append(integral)
            weighted.append(Q)
            stopped.append(tau_index is not None)

    digest = wiener.digest()
    # a stopped pair consumed only part of the path
    coupled = first.consumed_digest() == second.consumed_digest()
    if tau_index is None:
        coupled = coupled and first.consumed_digest() == digest

    return UniquenessRecord(
        index=index,
        times=np.asarray(times),
        V_norm=np.asarray(norms),
        psi_integral=np.asarray(integrals),
        Q=np.asarray(weighted),
        stopped=np.asarray(stopped),
        tau_index=tau_index,
        identical=bool(np.array_equal(first.v.coeffs, second.v.coeffs)),
        coupled=coupled,
        digest=digest
    )


@dataclass(eq=False)
class UniquenessEnsemble:
    delta0: float
    C_bar: float
    L_g: float
    records: List[UniquenessRecord]

    @property
    def times(self) -> np.ndarray:
        return self.records[0].times

    def _stack(self, name: str) -> np.ndarray:
        return np.stack([getattr(record, name) for record in self.records])

    def summary_rows(self) -> List[Dict]:
        Q, V, stopped = self._stack("Q"), self._stack("V_norm"), self._stack("stopped")
        rows = []
        for m, t in enumerate(self.times):
            Q_mean, Q_se = mean_and_se(Q[:, m])
            V_mean, V_se = mean_and_se(V[:, m])
            rows.append({
                "t": float(t),
                "Q_mean": Q_mean,
                "Q_std_error": Q_se,
                "V_mean": V_mean,
                "V_std_error": V_se,
                "stopped_fraction": float(np.mean(stopped[:, m]))
            })
        return rows

    def supermartingale_holds(self) -> bool:
        """Mean increments of Q between consecutive recorded times are at most three standard errors."""
        Q = self._stack("Q")
        for increments in np.diff(Q, axis=1).T:
            mean, se = mean_and_se(increments)
            if mean > 3.0 * se:
                return False
        return True

    def path_rows(self) -> List[Dict]:
        return [record.row() for record in self.records]

    @property
    def identical(self) -> bool:
        return all(record.identical for record in self.records)

    @property
    def coupled(self) -> bool:
        return all(record.coupled for record in self.records)


def resolve_weights(cfg: ExperimentConfig, store: Optional[CalibrationStore] = None) -> Tuple[float, float]:
    """C_bar from the configuration or the UNIQ_TRIL calibration, and the analytic Lipschitz constant L_g."""
    base = cfg.base
    C_bar = cfg.uniqueness.C_bar
    if C_bar is None:
        C_bar = get_or_calibrate("UNIQ_TRIL", base.grid, base.noise.g, store=store)
    return C_bar, lipschitz_constant_estimate(base.noise, base.grid)


def run_uniqueness_experiment(
        cfg: ExperimentConfig,
        delta0: Optional[float] = None,
        store: Optional[CalibrationStore] = None,
        workers: Optional[int] = None
) -> UniquenessEnsemble:
    """Coupled-pair ensemble of cfg.paths paths.

    Args:
        cfg: Experiment configuration in d = 2
        delta0: Perturbation size, cfg.uniqueness.delta0 by default
        store: Calibration store for C_bar
        workers: Worker processes

    Returns:
        Ensemble of records

    """
    if cfg.base.d != 2:
        raise ValidationFailure(f"uniqueness experiments run in d = 2, got d = {cfg.base.d}")
    if len(cfg.uniqueness.perturbation_mode) != cfg.base.d:
        raise ValidationFailure(f"perturbation mode {cfg.uniqueness.perturbation_mode} is not a wavevector in d = 2")
    delta0 = cfg.uniqueness.delta0 if delta0 is None else delta0
    if delta0 < 0:
        raise ValidationFailure(f"perturbation size must be non-negative, got {delta0}")

    C_bar, L_g = resolve_weights(cfg, store)
    tasks = [(cfg, i, delta0, C_bar, L_g) for i in range(cfg.paths)]
    ensemble = UniquenessEnsemble(delta0=delta0, C_bar=C_bar, L_g=L_g, records=ordered_map(run_uniqueness_path, tasks, workers))

    logger.info(
        "uniqueness ensemble: delta0 = %g, %d paths, C_bar = %.4g, L_g = %.4g, supermartingale: %s",
        delta0, cfg.paths, C_bar, L_g, ensemble.supermartingale_holds()
    )
    return ensemble


class DeltaScaling(BaseModel):
    rows: List[Dict]
    spread: float

    @property
    def linear(self) -> bool:
        return self.spread <= SCALING_TOLERANCE


def delta_scaling(ensembles: List[UniquenessEnsemble]) -> DeltaScaling:
    """Terminal E||V(T)||_{H^{-g}} / delta0 across perturbation sizes; flat when V is linear in delta0."""
    rows = []
    for ensemble in sorted(ensembles, key=lambda e: e.delta0):
        if ensemble.delta0 <= 0:
            raise ValidationFailure("the scaling check needs positive perturbation sizes")
        mean, se = mean_and_se([record.V_norm[-1] for record in ensemble.records])
        rows.append({"delta0": ensemble.delta0, "V_mean": mean, "V_std_error": se, "V_over_delta0": mean / ensemble.delta0})
    return DeltaScaling(rows=rows, spread=relative_spread([row["V_over_delta0"] for row in rows]))
