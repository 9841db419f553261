"""
Grid searches over two-user power allocations.

Single responsibility: find the allocation minimizing the best-over-SIC
target, either over the whole (f11, f12) square (the reference oracle) or
along the two edges chosen by comparative advantage (the reduced method).
Also hosts the exhaustive simplex search for the independent model.

Ties between grid points are resolved by the smallest (value, f11, f12),
so the argmin does not depend on evaluation order.

Public API:
- OptimizationResult, MatchOutcome
- unit_grid(n_points) -> np.ndarray
- grid_oracle_two_user(instance, w, spec, target_kind, base) -> OptimizationResult
- edge_search_two_user(instance, w, spec, target_kind, base) -> OptimizationResult
- brute_force_independent(gains, powers, w, steps, base) -> AllocationMatrix
- compare_results(method, oracle, match_rel_tol) -> MatchOutcome
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from noma_ca.core.advantage import Edge, edge_subspace_two_user
from noma_ca.core.channel import ScenarioInstance
from noma_ca.core.config import GridSpec
from noma_ca.core.errors import InfeasibleAllocationError, NoFeasibleAllocationError, SimulationError
from noma_ca.core.model import (
    AllocationMatrix,
    ChannelGains,
    DecodingOrder,
    NormalizedPowers,
    Weights,
    best_over_sic_orders,
    two_user_target_stack,
)

logger = logging.getLogger(__name__)

N_TWO_USER_ORDERS = 3


@dataclass(frozen=True)
class OptimizationResult:
    f11: float
    f12: float
    value: float
    order: DecodingOrder
    on_edge: bool
    evaluations: int

    @property
    def f_opt(self) -> AllocationMatrix:
        return AllocationMatrix.from_two_user(self.f11, self.f12)

    def to_dict(self) -> dict[str, Any]:
        return {
            'f11': self.f11,
            'f12': self.f12,
            'value': self.value,
            'order': self.order.label,
            'on_edge': self.on_edge,
            'evaluations': self.evaluations,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'OptimizationResult':
        return cls(
            f11=data['f11'],
            f12=data['f12'],
            value=data['value'],
            order=DecodingOrder.from_label(data['order']),
            on_edge=data['on_edge'],
            evaluations=data['evaluations'],
        )


@dataclass(frozen=True)
class MatchOutcome:
    is_global: bool
    rel_gap: float


def unit_grid(n_points: int) -> np.ndarray:
    """n_points evenly spaced values on [0, 1].

    Computed as i / (n - 1) so that nested grids share bit-identical points.
    """
    if n_points < 2:
        raise SimulationError('a grid needs at least two points')
    return np.arange(n_points, dtype=float) / (n_points - 1)


def _grid_values(f11, f12, instance: ScenarioInstance, w: Weights, target_kind: str, base: float) -> np.ndarray:
    stack = two_user_target_stack(
        f11, f12, 1.0 - f11, 1.0 - f12, instance.gains, instance.powers, w, target_kind, base
    )
    return stack.min(axis=0)


def _argmin_lex(values: np.ndarray, f11: np.ndarray, f12: np.ndarray) -> int:
    vmin = values.min()
    if not np.isfinite(vmin):
        raise NoFeasibleAllocationError()
    candidates = np.flatnonzero(values == vmin)
    if len(candidates) > 1:
        candidates = candidates[np.lexsort((f12[candidates], f11[candidates]))]
    return int(candidates[0])


def _on_edge(f11: float, f12: float) -> bool:
    return f11 in (0.0, 1.0) or f12 in (0.0, 1.0)


def _result(
    f11: float,
    f12: float,
    instance: ScenarioInstance,
    w: Weights,
    target_kind: str,
    base: float,
    evaluations: int,
) -> OptimizationResult:
    # Re-evaluate at the argmin so the reported value is exactly reproducible from (f11, f12).
    value, order = best_over_sic_orders(
        AllocationMatrix.from_two_user(f11, f12), instance.gains, instance.powers, w, target_kind, base
    )
    logger.debug('argmin (%r, %r) value=%r order=%s after %d evaluations',
                 f11, f12, value, order.label, evaluations)
    return OptimizationResult(
        f11=f11, f12=f12, value=value, order=order,
        on_edge=_on_edge(f11, f12), evaluations=evaluations,
    )


def _point_value(f11: float, f12: float, instance, w, target_kind, base) -> float:
    try:
        value, _ = best_over_sic_orders(
            AllocationMatrix.from_two_user(f11, f12), instance.gains, instance.powers, w, target_kind, base
        )
    except InfeasibleAllocationError:
        return np.inf
    return value


def grid_oracle_two_user(
    instance: ScenarioInstance,
    w: Weights,
    spec: Optional[GridSpec] = None,
    target_kind: str = 'static',
    base: float = 2.0,
) -> OptimizationResult:
    """Brute-force minimum over a uniform grid on the full (f11, f12) square.

    Infeasible points are skipped but still counted as evaluated.

    Raises:
        NoFeasibleAllocationError: If no grid point is feasible.
    """
    spec = spec or GridSpec()
    n = spec.grid_points_2d
    t = unit_grid(n)
    f11, f12 = (a.ravel() for a in np.meshgrid(t, t, indexing='ij'))
    values = _grid_values(f11, f12, instance, w, target_kind, base)
    idx = _argmin_lex(values, f11, f12)
    best = (float(f11[idx]), float(f12[idx]))
    evaluations = n * n * N_TWO_USER_ORDERS

    if spec.refine:
        # Zoom on the cells around the argmin with the same number of points per axis.
        step = 1.0 / (n - 1)
        lo11, hi11 = max(0.0, best[0] - step), min(1.0, best[0] + step)
        lo12, hi12 = max(0.0, best[1] - step), min(1.0, best[1] + step)
        z11, z12 = (np.clip(a.ravel(), 0.0, 1.0) for a in np.meshgrid(
            lo11 + (hi11 - lo11) * t, lo12 + (hi12 - lo12) * t, indexing='ij'))
        zvalues = _grid_values(z11, z12, instance, w, target_kind, base)
        evaluations += n * n * N_TWO_USER_ORDERS
        zidx = _argmin_lex(zvalues, z11, z12)
        if zvalues[zidx] < values[idx]:
            best = (float(z11[zidx]), float(z12[zidx]))

    return _result(*best, instance, w, target_kind, base, evaluations)


def _refine_on_edge(
    edge: Edge,
    best: tuple[float, float],
    step: float,
    instance: ScenarioInstance,
    w: Weights,
    target_kind: str,
    base: float,
) -> tuple[tuple[float, float], float, int]:
    free = best[1] if edge.pinned == 'f11' else best[0]

    def objective(s: float) -> float:
        a, b = edge.points(np.array([s]))
        return _point_value(float(a[0]), float(b[0]), instance, w, target_kind, base)

    res = minimize_scalar(
        objective,
        bounds=(max(0.0, free - step), min(1.0, free + step)),
        method='bounded',
        options={'xatol': 1e-12},
    )
    a, b = edge.points(np.array([float(res.x)]))
    return (float(a[0]), float(b[0])), float(res.fun), int(res.nfev)


def edge_search_two_user(
    instance: ScenarioInstance,
    w: Weights,
    spec: Optional[GridSpec] = None,
    target_kind: str = 'static',
    base: float = 2.0,
) -> OptimizationResult:
    """Minimum along the two edges selected by comparative advantage.

    A one-dimensional search per edge instead of the oracle's two-dimensional one.
    """
    spec = spec or GridSpec()
    subspace = edge_subspace_two_user(instance.gains)
    t = unit_grid(spec.grid_points_edge)
    coords = [edge.points(t) for edge in subspace.edges]
    f11 = np.concatenate([c[0] for c in coords])
    f12 = np.concatenate([c[1] for c in coords])
    values = _grid_values(f11, f12, instance, w, target_kind, base)
    idx = _argmin_lex(values, f11, f12)
    best = (float(f11[idx]), float(f12[idx]))
    evaluations = len(f11) * N_TWO_USER_ORDERS

    if spec.refine:
        edge = next(e for e in subspace.edges if e.contains(*best))
        step = 1.0 / (spec.grid_points_edge - 1)
        point, value, nfev = _refine_on_edge(edge, best, step, instance, w, target_kind, base)
        evaluations += nfev * N_TWO_USER_ORDERS
        if value < values[idx]:
            best = point

    return _result(*best, instance, w, target_kind, base, evaluations)


def compare_results(
    method: OptimizationResult,
    oracle: OptimizationResult,
    match_rel_tol: float = 1e-9,
) -> MatchOutcome:
    """Relative gap of the method over the oracle, clamped at 0 from below."""
    if oracle.value <= 0:
        raise SimulationError('oracle target value must be positive')
    rel_gap = max(0.0, (method.value - oracle.value) / oracle.value)
    return MatchOutcome(is_global=rel_gap <= match_rel_tol, rel_gap=rel_gap)


def _compositions(n_users: int, steps: int) -> np.ndarray:
    """All non-negative integer vectors of length n_users summing to steps, as fractions."""
    rows = []
    for bars in itertools.combinations(range(steps + n_users - 1), n_users - 1):
        edges = (-1,) + bars + (steps + n_users - 1,)
        rows.append([edges[k + 1] - edges[k] - 1 for k in range(n_users)])
    return np.array(rows, dtype=float) / steps


def brute_force_independent(
    gains: ChannelGains,
    powers: NormalizedPowers,
    w: Weights,
    steps: int = 10,
    base: float = 2.0,
) -> AllocationMatrix:
    """Exhaustive minimizer of the independent-reception target over a simplex grid.

    Each BS column runs over all splits of its power in multiples of 1/steps.
    Equal targets are resolved by comparing the per-user completion times
    sorted in decreasing order, then by enumeration order.
    """
    if steps < 1:
        raise SimulationError('steps must be positive')
    n, m = gains.g.shape
    if powers.p.shape != (m,) or w.w.shape != (n,):
        raise SimulationError('dimension mismatch between gains, powers and weights')
    columns = _compositions(n, steps)
    k = len(columns)

    x = np.zeros((k,) * m + (n,))
    for j in range(m):
        shape = [1] * m + [n]
        shape[j] = k
        x = x + (gains.g[:, j] * powers.p[j] * columns).reshape(shape)
    x = x.reshape(-1, n)

    with np.errstate(divide='ignore'):
        times = np.where(x > 0, w.w / (np.log1p(x) / np.log(base)), np.inf)
    ranked = -np.sort(-times, axis=1)
    order = np.lexsort([ranked[:, c] for c in reversed(range(n))])
    best = int(order[0])
    if not np.isfinite(ranked[best, 0]):
        raise NoFeasibleAllocationError()
    picks = np.unravel_index(best, (k,) * m)
    f = np.column_stack([columns[picks[j]] for j in range(m)])
    return AllocationMatrix(f)
