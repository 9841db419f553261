"""Small statistical helpers shared by the Monte Carlo aggregation."""

import math
from typing import Sequence

import numpy as np
from scipy import stats


def binomial_ci(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided Clopper-Pearson interval for a success fraction."""
    if trials < 1:
        return math.nan, math.nan
    interval = stats.binomtest(successes, trials).proportion_ci(confidence_level=confidence, method='exact')
    return float(interval.low), float(interval.high)


def binomial_se(fraction: float, trials: int) -> float:
    if trials < 1:
        return math.nan
    return math.sqrt(fraction * (1.0 - fraction) / trials)


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and standard deviation; NaN where undefined."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else math.nan
    return float(np.mean(arr)), std


def threshold_rule_accuracy(
    scores: Sequence[float],
    labels: Sequence[bool],
    threshold: float,
) -> tuple[float, float]:
    """Accuracy of predicting label = (score > threshold), and the majority-class baseline."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if labels.size == 0:
        return math.nan, math.nan
    accuracy = float(np.mean((scores > threshold) == labels))
    positive = float(np.mean(labels))
    return accuracy, max(positive, 1.0 - positive)


def rank_correlation(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman correlation and p-value; a constant series correlates 0 with p = 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0, 1.0
    rho, p_value = stats.spearmanr(x, y)
    return float(rho), float(p_value)
