"""Empirical tails of the n-uniform statistics against their Chebyshev majorants."""

import logging
from typing import Dict
from typing import List
from typing import Optional

import numpy as np
from pydantic import BaseModel

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.experiments.ensemble import LadderPathResult
from SNS_ROUGH.experiments.ensemble import STATISTICS
from SNS_ROUGH.experiments.ensemble import run_ladder_ensemble
from SNS_ROUGH.experiments.ensemble import statistic_samples
from SNS_ROUGH.experiments.settings import ExperimentConfig
from SNS_ROUGH.utils.statistics import mean_and_se
from SNS_ROUGH.utils.statistics import tail_probability


logger = logging.getLogger(__name__)


TIGHTNESS_COLUMNS = ("statistic", "n", "eta", "tail", "chebyshev", "upper_band", "holds")

MIN_PATHS = 100


class TightnessTable(BaseModel):
    rows: List[Dict]

    @property
    def holds(self) -> bool:
        return all(row["holds"] for row in self.rows)

    def uniformity(self) -> Dict[str, float]:
        """Largest sup-over-n / inf-over-n ratio of the tail per statistic (over thresholds with positive tails)."""
        ratios = {}
        for statistic in sorted({row["statistic"] for row in self.rows}):
            worst = 1.0
            for eta in sorted({row["eta"] for row in self.rows if row["statistic"] == statistic}):
                tails = [row["tail"] for row in self.rows if row["statistic"] == statistic and row["eta"] == eta]
                if min(tails) > 0:
                    worst = max(worst, max(tails) / min(tails))
            ratios[statistic] = worst
        return ratios


def run_tightness_tables(cfg: ExperimentConfig, results: Optional[List[LadderPathResult]] = None) -> TightnessTable:
    """P(statistic > eta) for every statistic and level against mean / eta.

    Thresholds are cfg.tightness.eta_factors times the mean of the statistic pooled over the ladder. The
    upper band (mean + 3 SE) / eta accounts for the estimation error of the mean.

    Args:
        cfg: Experiment configuration with at least 100 paths
        results: Precomputed ladder ensemble (run here when omitted)

    Returns:
        Tidy table of tails

    """
    if cfg.paths < MIN_PATHS:
        raise ValidationFailure(f"tightness tables need at least {MIN_PATHS} paths, got {cfg.paths}")
    results = results if results is not None else run_ladder_ensemble(cfg)

    rows = []
    for statistic in STATISTICS:
        pooled = np.concatenate([statistic_samples(results, n, statistic) for n in cfg.n_ladder])
        scale = float(np.mean(pooled))
        if scale <= 0:
            continue
        for n in cfg.n_ladder:
            samples = statistic_samples(results, n, statistic)
            mean, se = mean_and_se(samples)
            for factor in cfg.tightness.eta_factors:
                eta = factor * scale
                tail = tail_probability(samples, eta)
                upper = (mean + 3 * se) / eta
                rows.append({
                    "statistic": statistic,
                    "n": n,
                    "eta": eta,
                    "tail": tail,
                    "chebyshev": mean / eta,
                    "upper_band": upper,
                    "holds": tail <= upper
                })

    table = TightnessTable(rows=rows)
    logger.info("tightness tables: %d rows, Chebyshev bands hold: %s", len(rows), table.holds)
    return table
