"""
Monte Carlo comparison of the edge search against the grid oracle.

Single responsibility: generate instances, run both optimizers on each,
and reduce the per-instance records into per-noise-level statistics.

Each instance index owns its random stream, seeded from
(base_seed, instance_index). User positions are therefore identical across
noise levels (a paired design) and results do not depend on scheduling.

Public API:
- InstanceRecord, NoiseLevelSummary, ExperimentSummary, TrendReport
- run_instance(config, instance_index, noise_level) -> InstanceRecord
- run_instance_sweep(config, instance_index) -> list[InstanceRecord]
- evaluate_instance(config, instance, instance_index, noise_level) -> InstanceRecord
- summarize(config, records) -> ExperimentSummary
- run_experiment_async(config, workers, on_records) -> ExperimentSummary
- run_experiment(config, workers) -> ExperimentSummary
- trend_statistics(summary) -> TrendReport
"""

import asyncio
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Optional, Sequence

import numpy as np

from noma_ca.core.advantage import edge_subspace_two_user, normalized_advantage
from noma_ca.core.channel import ScenarioInstance, generate_instance, instance_seed
from noma_ca.core.config import ExperimentConfig
from noma_ca.core.errors import ExperimentError, SimulationError
from noma_ca.core.model import Weights
from noma_ca.core.optimizers import (
    OptimizationResult,
    compare_results,
    edge_search_two_user,
    grid_oracle_two_user,
)
from noma_ca.simulation.statistics import (
    binomial_ci,
    binomial_se,
    mean_std,
    rank_correlation,
    threshold_rule_accuracy,
)

logger = logging.getLogger(__name__)

# Classes with fewer samples are not compared for alpha separation.
MIN_ALPHA_CLASS_SIZE = 30


@dataclass(frozen=True)
class InstanceRecord:
    """Everything measured on one instance at one noise level."""

    instance_index: int
    seed_record: int
    noise_w: float
    weights_case: str
    target_kind: str
    user_positions: tuple[tuple[float, ...], ...] = ()
    gains: tuple[tuple[float, ...], ...] = ()
    powers: tuple[float, ...] = ()
    bs1_serves_user1: Optional[bool] = None
    alpha: Optional[float] = None
    oracle: Optional[OptimizationResult] = None
    method: Optional[OptimizationResult] = None
    rel_gap: Optional[float] = None
    is_global: Optional[bool] = None
    error: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            'instance_index': self.instance_index,
            'seed_record': self.seed_record,
            'noise_w': self.noise_w,
            'weights_case': self.weights_case,
            'target_kind': self.target_kind,
            'user_positions': [list(p) for p in self.user_positions],
            'gains': [list(row) for row in self.gains],
            'powers': list(self.powers),
            'bs1_serves_user1': self.bs1_serves_user1,
            'alpha': self.alpha,
            'oracle': self.oracle.to_dict() if self.oracle else None,
            'method': self.method.to_dict() if self.method else None,
            'rel_gap': self.rel_gap,
            'is_global': self.is_global,
            'error': self.error,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'InstanceRecord':
        return cls(
            instance_index=data['instance_index'],
            seed_record=data['seed_record'],
            noise_w=data['noise_w'],
            weights_case=data['weights_case'],
            target_kind=data['target_kind'],
            user_positions=tuple(tuple(p) for p in data['user_positions']),
            gains=tuple(tuple(row) for row in data['gains']),
            powers=tuple(data['powers']),
            bs1_serves_user1=data['bs1_serves_user1'],
            alpha=data['alpha'],
            oracle=OptimizationResult.from_dict(data['oracle']) if data['oracle'] else None,
            method=OptimizationResult.from_dict(data['method']) if data['method'] else None,
            rel_gap=data['rel_gap'],
            is_global=data['is_global'],
            error=data['error'],
        )


@dataclass(frozen=True)
class NoiseLevelSummary:
    noise_w: float
    n_instances: int
    n_global: int
    pct_global: float
    ci_low: float = math.nan
    ci_high: float = math.nan
    n_edge_instances: int = 0
    n_edge_global: int = 0
    pct_edge_conditional: float = math.nan
    mean_degradation_pct: float = math.nan
    max_degradation_pct: float = math.nan
    n_alpha_global: int = 0
    alpha_global_mean: float = math.nan
    alpha_global_std: float = math.nan
    n_alpha_subopt: int = 0
    alpha_subopt_mean: float = math.nan
    alpha_subopt_std: float = math.nan
    alpha_rule_accuracy: float = math.nan
    majority_baseline: float = math.nan

    @property
    def n_subopt(self) -> int:
        return self.n_instances - self.n_global

    @property
    def alpha_separated(self) -> Optional[bool]:
        """Whether global matches show a larger mean alpha; None when a class is too small."""
        if min(self.n_alpha_global, self.n_alpha_subopt) < MIN_ALPHA_CLASS_SIZE:
            return None
        return self.alpha_global_mean > self.alpha_subopt_mean


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    levels: tuple[NoiseLevelSummary, ...]
    records: tuple[InstanceRecord, ...] = field(default=(), repr=False)

    def level_at(self, noise_w: float) -> NoiseLevelSummary:
        """Summary of the configured noise level closest (in log scale) to noise_w."""
        return min(self.levels, key=lambda lv: abs(math.log(lv.noise_w / noise_w)))

    def records_at(self, noise_w: float) -> list[InstanceRecord]:
        level = self.level_at(noise_w).noise_w
        return [r for r in self.records if r.noise_w == level]

    @property
    def worst_degradation(self) -> NoiseLevelSummary:
        return max(self.levels, key=lambda lv: lv.mean_degradation_pct)


@dataclass(frozen=True)
class TrendReport:
    rank_correlation: float
    p_value: float
    non_decreasing: bool
    trend: str
    end_gain: float
    end_gain_se: float
    end_gain_significant: bool


def evaluate_instance(
    config: ExperimentConfig,
    instance: ScenarioInstance,
    instance_index: int,
    noise_level: float,
) -> InstanceRecord:
    """Run oracle, edge search and alpha on an instance re-normalized to noise_level."""
    radio = config.scenario.radio
    instance = instance.with_noise(radio.tx_power_per_bs, noise_level)
    weights = Weights(np.array(config.weights))
    kwargs = dict(spec=config.grid, target_kind=config.target_kind, base=config.log_base)
    oracle = grid_oracle_two_user(instance, weights, **kwargs)
    method = edge_search_two_user(instance, weights, **kwargs)
    outcome = compare_results(method, oracle, config.match_rel_tol)
    return InstanceRecord(
        instance_index=instance_index,
        seed_record=instance.seed_record,
        noise_w=noise_level,
        weights_case=config.weights_case,
        target_kind=config.target_kind,
        user_positions=tuple(tuple(float(v) for v in p) for p in instance.user_positions),
        gains=tuple(tuple(float(v) for v in row) for row in instance.gains.g),
        powers=tuple(float(v) for v in instance.powers.p),
        bs1_serves_user1=edge_subspace_two_user(instance.gains).bs1_serves_user1,
        alpha=normalized_advantage(instance.gains),
        oracle=oracle,
        method=method,
        rel_gap=outcome.rel_gap,
        is_global=outcome.is_global,
    )


def _failed(config: ExperimentConfig, seed: int, instance_index: int, noise_level: float, exc: Exception) -> InstanceRecord:
    logger.error('Instance %d (seed %d, noise %r) failed: %s', instance_index, seed, noise_level, exc, exc_info=True)
    return InstanceRecord(
        instance_index=instance_index,
        seed_record=seed,
        noise_w=noise_level,
        weights_case=config.weights_case,
        target_kind=config.target_kind,
        error=f'{type(exc).__name__}: {exc}',
    )


def run_instance_sweep(config: ExperimentConfig, instance_index: int) -> list[InstanceRecord]:
    """Draw instance_index once and evaluate it at every configured noise level."""
    seed = instance_seed(config.base_seed, instance_index)
    try:
        instance = generate_instance(np.random.default_rng(seed), config.scenario, seed_record=seed)
    except Exception as e:
        return [_failed(config, seed, instance_index, noise, e) for noise in config.noise_levels]
    records = []
    for noise in config.noise_levels:
        try:
            records.append(evaluate_instance(config, instance, instance_index, noise))
        except Exception as e:
            records.append(_failed(config, seed, instance_index, noise, e))
    return records


def run_instance(config: ExperimentConfig, instance_index: int, noise_level: float) -> InstanceRecord:
    """Single instance at a single noise level; failures are returned as records."""
    seed = instance_seed(config.base_seed, instance_index)
    try:
        instance = generate_instance(np.random.default_rng(seed), config.scenario, seed_record=seed)
        return evaluate_instance(config, instance, instance_index, noise_level)
    except Exception as e:
        return _failed(config, seed, instance_index, noise_level, e)


def _summarize_level(config: ExperimentConfig, noise_w: float, records: Sequence[InstanceRecord]) -> NoiseLevelSummary:
    n = len(records)
    is_global = np.array([r.is_global for r in records], dtype=bool)
    on_edge = np.array([r.oracle.on_edge for r in records], dtype=bool)
    gaps = np.array([r.rel_gap for r in records], dtype=float)
    alphas = np.array([r.alpha for r in records], dtype=float)

    n_global = int(is_global.sum())
    ci_low, ci_high = binomial_ci(n_global, n)
    n_edge = int(on_edge.sum())
    n_edge_global = int((on_edge & is_global).sum())
    g_mean, g_std = mean_std(alphas[is_global])
    s_mean, s_std = mean_std(alphas[~is_global])
    accuracy, baseline = threshold_rule_accuracy(alphas, is_global, config.alpha_threshold)

    level = NoiseLevelSummary(
        noise_w=noise_w,
        n_instances=n,
        n_global=n_global,
        pct_global=n_global / n,
        ci_low=ci_low,
        ci_high=ci_high,
        n_edge_instances=n_edge,
        n_edge_global=n_edge_global,
        pct_edge_conditional=n_edge_global / n_edge if n_edge else math.nan,
        mean_degradation_pct=float(np.mean(gaps)) * 100.0,
        max_degradation_pct=float(np.max(gaps)) * 100.0,
        n_alpha_global=n_global,
        alpha_global_mean=g_mean,
        alpha_global_std=g_std,
        n_alpha_subopt=n - n_global,
        alpha_subopt_mean=s_mean,
        alpha_subopt_std=s_std,
        alpha_rule_accuracy=accuracy,
        majority_baseline=baseline,
    )
    if n_edge and level.pct_edge_conditional < level.pct_global:
        logger.warning('Noise %r: edge-conditional match rate %.4f below overall rate %.4f',
                       noise_w, level.pct_edge_conditional, level.pct_global)
    if level.alpha_separated is False:
        logger.warning('Noise %r: mean alpha of global matches does not exceed that of sub-optima', noise_w)
    logger.info('Noise %.3e W: global %.4f, edge-conditional %.4f, degradation %.5f%%',
                noise_w, level.pct_global, level.pct_edge_conditional, level.mean_degradation_pct)
    return level


def summarize(config: ExperimentConfig, records: Sequence[InstanceRecord]) -> ExperimentSummary:
    """Reduce records to per-noise-level statistics.

    Records are sorted by (instance_index, noise) first, so the result does
    not depend on the order they were produced in.

    Raises:
        ExperimentError: If any record carries an error.
        SimulationError: If the records do not cover every (index, noise) pair exactly once.
    """
    ordered = sorted(records, key=lambda r: (r.instance_index, r.noise_w))
    failed = next((r for r in ordered if r.error is not None), None)
    if failed is not None:
        raise ExperimentError(failed.error, config.base_seed, failed.instance_index, failed.noise_w)

    expected = {(i, noise) for i in range(config.n_instances) for noise in config.noise_levels}
    seen = [(r.instance_index, r.noise_w) for r in ordered]
    if len(seen) != len(expected) or set(seen) != expected:
        raise SimulationError(
            f'records do not reconcile: {len(seen)} records for {len(expected)} (instance, noise) pairs'
        )

    levels = tuple(
        _summarize_level(config, noise, [r for r in ordered if r.noise_w == noise])
        for noise in config.noise_levels
    )
    return ExperimentSummary(config=config, levels=levels, records=tuple(ordered))


async def run_experiment_async(
    config: ExperimentConfig,
    workers: int = 1,
    on_records: Optional[Callable[[list[InstanceRecord]], Awaitable[None]]] = None,
) -> ExperimentSummary:
    """Run every instance at every noise level and summarize.

    Args:
        config: Experiment configuration.
        workers: Worker processes; 1 runs inline.
        on_records: Awaited with each instance's records as they complete.
    """
    total = config.n_instances
    every = max(1, total // 10)
    records: list[InstanceRecord] = []
    logger.info('Running %d instances x %d noise levels (%s weights, %s target, %d workers)',
                total, len(config.noise_levels), config.weights_case, config.target_kind, workers)

    async def collect(batch: list[InstanceRecord]) -> None:
        records.extend(batch)
        if on_records is not None:
            await on_records(batch)
        done = len(records) // len(config.noise_levels)
        if done % every == 0:
            logger.info('%d/%d instances done', done, total)

    if workers <= 1:
        for index in range(total):
            await collect(run_instance_sweep(config, index))
    else:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [loop.run_in_executor(pool, run_instance_sweep, config, index) for index in range(total)]
            for next_done in asyncio.as_completed(futures):
                await collect(await next_done)

    return summarize(config, records)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentSummary:
    """Synchronous wrapper of run_experiment_async."""
    return asyncio.run(run_experiment_async(config, workers))


def trend_statistics(summary: ExperimentSummary) -> TrendReport:
    """Direction of the global-match rate across noise levels.

    A drop between consecutive levels only counts when their binomial
    confidence intervals do not overlap.

    Raises:
        SimulationError: With fewer than three noise levels.
    """
    levels = summary.levels
    if len(levels) < 3:
        raise SimulationError('trend statistics need at least three noise levels')
    noise = [lv.noise_w for lv in levels]
    pct = [lv.pct_global for lv in levels]
    rho, p_value = rank_correlation(noise, pct)
    non_decreasing = all(
        not (later.ci_high < earlier.ci_low) for earlier, later in zip(levels, levels[1:])
    )
    if rho > 0 and non_decreasing:
        trend = 'increasing'
    elif rho < 0:
        trend = 'decreasing'
    else:
        trend = 'inconclusive'

    first, last = levels[0], levels[-1]
    gain = last.pct_global - first.pct_global
    se = math.sqrt(
        binomial_se(first.pct_global, first.n_instances) ** 2
        + binomial_se(last.pct_global, last.n_instances) ** 2
    )
    return TrendReport(
        rank_correlation=rho,
        p_value=p_value,
        non_decreasing=non_decreasing,
        trend=trend,
        end_gain=gain,
        end_gain_se=se,
        end_gain_significant=gain > 2.0 * se,
    )
