"""Convergence of the coupled Yosida ladder: Cauchy distances and n-uniform path statistics."""

import logging
from typing import Dict
from typing import List
from typing import Optional

import numpy as np
from pydantic import BaseModel

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.experiments.ensemble import LadderPathResult
from SNS_ROUGH.experiments.ensemble import SOLUTION_STATISTICS
from SNS_ROUGH.experiments.ensemble import run_ladder_ensemble
from SNS_ROUGH.experiments.ensemble import statistic_samples
from SNS_ROUGH.experiments.settings import ExperimentConfig
from SNS_ROUGH.utils.statistics import mean_and_se
from SNS_ROUGH.utils.statistics import quantile
from SNS_ROUGH.utils.statistics import relative_spread


logger = logging.getLogger(__name__)


DISTANCE_COLUMNS = ("n", "n_next", "mean_distance", "std_error", "paths")

QUANTILE_COLUMNS = ("n", "statistic", "mean", "std_error", "q50", "q95", "paths")


class ConvergenceTable(BaseModel):
    distances: List[Dict]
    quantiles: List[Dict]
    monotone_fraction: float
    quantile_spread: Dict[str, float]
    coupled: bool

    def summary(self) -> Dict:
        return {
            "monotone_fraction": self.monotone_fraction,
            "max_quantile_spread": max(self.quantile_spread.values()),
            "coupled": self.coupled
        }


def run_convergence_in_n(cfg: ExperimentConfig, results: Optional[List[LadderPathResult]] = None) -> ConvergenceTable:
    """Tabulate E||v_n - v_n'||_{L^2(0, T; H)} along the ladder and the 95% quantiles of the solution statistics.

    Args:
        cfg: Experiment configuration with at least three ladder levels
        results: Precomputed ladder ensemble (run here when omitted)

    Returns:
        Convergence table

    """
    if len(cfg.n_ladder) < 3:
        raise ValidationFailure(f"the n ladder needs at least three levels, got {list(cfg.n_ladder)}")
    results = results if results is not None else run_ladder_ensemble(cfg)

    distances = []
    for i, (n, n_next) in enumerate(zip(cfg.n_ladder, cfg.n_ladder[1:])):
        mean, se = mean_and_se([result.distances[i] for result in results])
        distances.append({"n": n, "n_next": n_next, "mean_distance": mean, "std_error": se, "paths": len(results)})

    quantiles, spread = [], {}
    for statistic in SOLUTION_STATISTICS:
        upper = []
        for n in cfg.n_ladder:
            samples = statistic_samples(results, n, statistic)
            mean, se = mean_and_se(samples)
            upper.append(quantile(samples, 0.95))
            quantiles.append({
                "n": n,
                "statistic": statistic,
                "mean": mean,
                "std_error": se,
                "q50": quantile(samples, 0.5),
                "q95": upper[-1],
                "paths": len(results)
            })
        spread[statistic] = relative_spread(upper)

    table = ConvergenceTable(
        distances=distances,
        quantiles=quantiles,
        monotone_fraction=float(np.mean([result.monotone for result in results])),
        quantile_spread=spread,
        coupled=all(result.coupled for result in results)
    )
    logger.info("convergence in n: %s", table.summary())
    return table
