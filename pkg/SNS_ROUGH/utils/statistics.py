"""Small Monte Carlo helpers: means with standard errors, quantiles and empirical tails."""

import math
from typing import Sequence
from typing import Tuple

import numpy as np
import scipy.stats


def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error (zero for fewer than two values)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    if values.size < 2:
        return float(values[0]), 0.0
    return float(np.mean(values)), float(scipy.stats.sem(values, ddof=1))


def quantile(values: Sequence[float], level: float) -> float:
    return float(np.quantile(np.asarray(values, dtype=float), level))


def tail_probability(values: Sequence[float], eta: float) -> float:
    """Empirical P(X > eta)."""
    values = np.asarray(values, dtype=float)
    return float(np.mean(values > eta))


def relative_spread(values: Sequence[float]) -> float:
    """(max - min) / max of a family of positive estimates; zero when all vanish."""
    values = np.asarray(values, dtype=float)
    largest = float(np.max(values))
    if largest == 0:
        return 0.0
    return (largest - float(np.min(values))) / largest


def paired_ratio(numerator: Sequence[float], denominator: Sequence[float]) -> Tuple[float, float]:
    """Ratio of two sample means taken over the same paths, with its delta-method standard error.

    The error is std(Y_i - r X_i) / (sqrt(n) |mean X|), which keeps the correlation between the two means.

    Args:
        numerator: Per-path values Y_i
        denominator: Per-path values X_i, with non-zero mean

    Returns:
        (ratio, standard error)

    """
    numerator = np.asarray(numerator, dtype=float)
    denominator = np.asarray(denominator, dtype=float)
    if numerator.shape != denominator.shape:
        raise ValueError(f"paired samples differ in shape: {numerator.shape} and {denominator.shape}")
    mean_x = float(np.mean(denominator))
    ratio = float(np.mean(numerator)) / mean_x
    if numerator.size < 2:
        return ratio, 0.0
    spread = float(np.std(numerator - ratio * denominator, ddof=1))
    return ratio, spread / (math.sqrt(numerator.size) * abs(mean_x))
