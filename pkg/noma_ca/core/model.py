"""
Allocation and channel data model with the SINR and target-function math.

Single responsibility: everything that maps a power allocation to SINRs
and SINRs to a completion-time target. No randomness, no I/O.

Powers are normalized by the receiver noise power, so every noise term
below is the literal 1.

Public API:
- ChannelGains, NormalizedPowers, AllocationMatrix, Weights, DecodingOrder
- TAU0, TAU1, TAU2, TWO_USER_ORDERS
- independent_sinr(f, gains, powers) -> np.ndarray
- target_independent(x, w, base) -> float
- limiting_sinr_two_user(f, gains, powers, order) -> np.ndarray
- limiting_sinr_general(f, gains, powers, order) -> np.ndarray
- target_noma(eta, w, base) -> float
- dynamic_target_from_sinr(eta, w, full_power_sinr, base) -> float
- target_dynamic_two_user(f, gains, powers, w, order, base) -> float
- best_over_sic_orders(f, gains, powers, w, target_kind, base) -> (float, DecodingOrder)
- two_user_target_stack(f11, f12, f21, f22, gains, powers, w, target_kind, base) -> np.ndarray
"""

import itertools
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from noma_ca.core.errors import (
    DimensionMismatchError,
    InfeasibleAllocationError,
    InvalidAllocationError,
    SimulationError,
    UserExcludedError,
)

# Column sums of an allocation may deviate from 1 by at most this much.
COLUMN_SUM_TOL = 1e-9

SinrVector = np.ndarray


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f'{name} must be {ndim}-dimensional, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise SimulationError(f'{name} must be finite')
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChannelGains:
    """Squared channel magnitudes |h_ij|^2, users along rows, base stations along columns."""

    g: np.ndarray

    def __post_init__(self) -> None:
        g = _frozen_array(self.g, 2, 'channel gains')
        if np.any(g < 0):
            raise SimulationError('channel gains must be non-negative')
        object.__setattr__(self, 'g', g)

    @property
    def n_users(self) -> int:
        return self.g.shape[0]

    @property
    def n_bs(self) -> int:
        return self.g.shape[1]

    def require_positive(self) -> None:
        if np.any(self.g <= 0):
            raise SimulationError('comparative advantage requires strictly positive gains')

    def permuted(self, perm: Sequence[int]) -> 'ChannelGains':
        return ChannelGains(self.g[list(perm)])


@dataclass(frozen=True)
class NormalizedPowers:
    """Per-BS transmit power divided by the noise power."""

    p: np.ndarray

    def __post_init__(self) -> None:
        p = _frozen_array(self.p, 1, 'powers')
        if np.any(p <= 0):
            raise SimulationError('normalized powers must be positive')
        object.__setattr__(self, 'p', p)

    @classmethod
    def from_watts(cls, tx_power: Sequence[float], noise_power: float) -> 'NormalizedPowers':
        return cls(np.asarray(tx_power, dtype=float) / noise_power)

    def scaled(self, factor: float) -> 'NormalizedPowers':
        return NormalizedPowers(self.p * factor)


@dataclass(frozen=True)
class AllocationMatrix:
    """Power fractions f_ij: share of BS j's power sent to user i."""

    f: np.ndarray

    def __post_init__(self) -> None:
        f = _frozen_array(self.f, 2, 'allocation')
        if np.any(f < 0) or np.any(f > 1):
            raise InvalidAllocationError('power fractions must lie in [0, 1]')
        if np.any(np.abs(f.sum(axis=0) - 1.0) > COLUMN_SUM_TOL):
            raise InvalidAllocationError('power fractions of every base station must sum to 1')
        object.__setattr__(self, 'f', f)

    @classmethod
    def from_two_user(cls, f11: float, f12: float) -> 'AllocationMatrix':
        """Two users, two BSs: user 2 receives whatever user 1 does not."""
        return cls(np.array([[f11, f12], [1.0 - f11, 1.0 - f12]]))

    @property
    def coords(self) -> tuple[float, float]:
        """(f11, f12), the free coordinates of a two-user allocation."""
        return float(self.f[0, 0]), float(self.f[0, 1])

    def permuted(self, perm: Sequence[int]) -> 'AllocationMatrix':
        return AllocationMatrix(self.f[list(perm)])


@dataclass(frozen=True)
class Weights:
    """Relative throughput coefficients (SLA weights) per user."""

    w: np.ndarray

    def __post_init__(self) -> None:
        w = _frozen_array(self.w, 1, 'weights')
        if np.any(w <= 0):
            raise SimulationError('weights must be positive')
        object.__setattr__(self, 'w', w)


@dataclass(frozen=True)
class DecodingOrder:
    """SIC decoding order. Earlier users are decoded first and cancelled by later ones."""

    kind: Literal['no_sic', 'ordered']
    order: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == 'no_sic':
            if self.order:
                raise SimulationError('no_sic order takes no permutation')
        elif self.kind == 'ordered':
            if sorted(self.order) != list(range(len(self.order))) or not self.order:
                raise SimulationError(f'invalid decoding permutation {self.order}')
        else:
            raise SimulationError(f'unknown decoding order kind {self.kind!r}')

    @classmethod
    def no_sic(cls) -> 'DecodingOrder':
        return cls('no_sic')

    @classmethod
    def ordered(cls, order: Sequence[int]) -> 'DecodingOrder':
        return cls('ordered', tuple(int(i) for i in order))

    @classmethod
    def from_label(cls, label: str) -> 'DecodingOrder':
        if label == 'no_sic':
            return cls.no_sic()
        if label.startswith('sic(') and label.endswith(')'):
            return cls.ordered([int(u) - 1 for u in label[4:-1].split('>')])
        raise SimulationError(f'unknown decoding order label {label!r}')

    @property
    def label(self) -> str:
        if self.kind == 'no_sic':
            return 'no_sic'
        return 'sic(' + '>'.join(str(i + 1) for i in self.order) + ')'

    def successors(self, user: int) -> tuple[int, ...]:
        """Users decoded after `user`; they must decode its signal too."""
        if self.kind == 'no_sic':
            return ()
        pos = self.order.index(user)
        return self.order[pos + 1:]


TAU0 = DecodingOrder.no_sic()
TAU1 = DecodingOrder.ordered((0, 1))
TAU2 = DecodingOrder.ordered((1, 0))
# Also the tie-break priority of best_over_sic_orders.
TWO_USER_ORDERS: tuple[DecodingOrder, ...] = (TAU0, TAU1, TAU2)


def _log_rate(sinr, base: float):
    return np.log1p(sinr) / np.log(base)


def _check_dims(f: AllocationMatrix, gains: ChannelGains, powers: NormalizedPowers) -> None:
    if f.f.shape != gains.g.shape:
        raise DimensionMismatchError(f'allocation {f.f.shape} vs gains {gains.g.shape}')
    if powers.p.shape != (gains.n_bs,):
        raise DimensionMismatchError(f'powers {powers.p.shape} vs {gains.n_bs} base stations')


def _check_weights(values: np.ndarray, w: Weights) -> None:
    if w.w.shape != values.shape:
        raise DimensionMismatchError(f'weights {w.w.shape} vs SINRs {values.shape}')


def independent_sinr(f: AllocationMatrix, gains: ChannelGains, powers: NormalizedPowers) -> SinrVector:
    """SINR of each user when receptions do not interfere: x_i = sum_j g_ij p_j f_ij."""
    _check_dims(f, gains, powers)
    return (gains.g * powers.p * f.f).sum(axis=1)


def target_independent(x: SinrVector, w: Weights, base: float = 2.0) -> float:
    """Longest normalized completion time, max_i w_i / log(1 + x_i).

    Raises:
        UserExcludedError: If some x_i <= 0.
    """
    x = np.asarray(x, dtype=float)
    _check_weights(x, w)
    if np.any(x <= 0):
        raise UserExcludedError()
    return float(np.max(w.w / _log_rate(x, base)))


def target_noma(eta: SinrVector, w: Weights, base: float = 2.0) -> float:
    """Same max-of-ratios target evaluated on limiting SINRs."""
    eta = np.asarray(eta, dtype=float)
    _check_weights(eta, w)
    if np.any(eta <= 0):
        raise UserExcludedError('user excluded')
    return float(np.max(w.w / _log_rate(eta, base)))


def _two_user_sinr(f11, f12, f21, f22, g: np.ndarray, p: np.ndarray, order_index: int):
    # s_uv: power of user v's signal at receiver u.
    g11, g12, g21, g22 = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    p1, p2 = p[0], p[1]
    s11 = g11 * p1 * f11 + g12 * p2 * f12
    s12 = g11 * p1 * f21 + g12 * p2 * f22
    s21 = g21 * p1 * f11 + g22 * p2 * f12
    s22 = g21 * p1 * f21 + g22 * p2 * f22
    if order_index == 0:
        return s11 / (s12 + 1), s22 / (s21 + 1)
    if order_index == 1:
        return np.minimum(s11 / (s12 + 1), s21 / (s22 + 1)), s22
    return s11, np.minimum(s22 / (s21 + 1), s12 / (s11 + 1))


def _two_user_index(gains: ChannelGains, order: DecodingOrder) -> int:
    if gains.g.shape != (2, 2):
        raise DimensionMismatchError('closed forms need two users and two base stations')
    if order.kind == 'ordered' and len(order.order) != 2:
        raise DimensionMismatchError('decoding order must cover two users')
    return TWO_USER_ORDERS.index(order)


def limiting_sinr_two_user(
    f: AllocationMatrix,
    gains: ChannelGains,
    powers: NormalizedPowers,
    order: DecodingOrder,
) -> SinrVector:
    """Closed-form limiting SINRs of the two-user two-cell system for tau0, tau1, tau2."""
    _check_dims(f, gains, powers)
    idx = _two_user_index(gains, order)
    cols = [f.f[i, j:j + 1] for i in range(2) for j in range(2)]
    eta1, eta2 = _two_user_sinr(*cols, gains.g, powers.p, idx)
    return np.array([eta1[0], eta2[0]])


def _received(gains: ChannelGains, powers: NormalizedPowers, f: AllocationMatrix, rx: int, user: int) -> float:
    total = 0.0
    for j in range(gains.n_bs):
        total = total + gains.g[rx, j] * powers.p[j] * f.f[user, j]
    return total


def limiting_sinr_general(
    f: AllocationMatrix,
    gains: ChannelGains,
    powers: NormalizedPowers,
    order: DecodingOrder,
) -> SinrVector:
    """Limiting SINR of every user for an arbitrary number of users and BSs.

    A user's rate is capped by the worst SINR of its signal over its own
    receiver and every later user in the SIC order. While user i's signal
    is being decoded, the signals not yet decoded interfere: the users
    after i in the order, or every other user without SIC.
    """
    _check_dims(f, gains, powers)
    n = gains.n_users
    if order.kind == 'ordered' and len(order.order) != n:
        raise DimensionMismatchError(f'decoding order covers {len(order.order)} users, expected {n}')
    eta = np.empty(n)
    for i in range(n):
        later = order.successors(i)
        interferers = later if order.kind == 'ordered' else tuple(m for m in range(n) if m != i)

        def sinr_at(rx: int) -> float:
            interference = 0.0
            for m in interferers:
                interference = interference + _received(gains, powers, f, rx, m)
            return _received(gains, powers, f, rx, i) / (interference + 1.0)

        eta[i] = min([sinr_at(i)] + [sinr_at(k) for k in later])
    return eta


def _dynamic_from_rates(r1, r2, full1, full2, w1: float, w2: float):
    t1 = w1 / r1
    t2 = w2 / r2
    # Whoever finishes first hands its power to the other, which then runs at full power.
    first_done = t1 + (w2 - w1 * r2 / r1) / full2
    second_done = t2 + (w1 - w2 * r1 / r2) / full1
    return np.where(t1 < t2, first_done, second_done)


def dynamic_target_from_sinr(
    eta: SinrVector,
    w: Weights,
    full_power_sinr: Sequence[float],
    base: float = 2.0,
) -> float:
    """Completion time with dynamic reallocation for two users.

    Args:
        eta: Limiting SINRs of both users under the static allocation.
        w: Two user weights.
        full_power_sinr: SINR each user reaches with all power of both BSs.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (2,):
        raise DimensionMismatchError('dynamic target is defined for two users')
    _check_weights(eta, w)
    if np.any(eta <= 0):
        raise UserExcludedError('user excluded')
    r1, r2 = _log_rate(eta, base)
    full1, full2 = _log_rate(np.asarray(full_power_sinr, dtype=float), base)
    return float(_dynamic_from_rates(r1, r2, full1, full2, w.w[0], w.w[1]))


def _full_power_sinr(gains: ChannelGains, powers: NormalizedPowers) -> np.ndarray:
    p1, p2 = powers.p
    return np.array([p1 * gains.g[0, 0] + p2 * gains.g[0, 1], p1 * gains.g[1, 0] + p2 * gains.g[1, 1]])


def target_dynamic_two_user(
    f: AllocationMatrix,
    gains: ChannelGains,
    powers: NormalizedPowers,
    w: Weights,
    order: DecodingOrder,
    base: float = 2.0,
) -> float:
    eta = limiting_sinr_two_user(f, gains, powers, order)
    return dynamic_target_from_sinr(eta, w, _full_power_sinr(gains, powers), base)


def two_user_target_stack(
    f11: np.ndarray,
    f12: np.ndarray,
    f21: np.ndarray,
    f22: np.ndarray,
    gains: ChannelGains,
    powers: NormalizedPowers,
    w: Weights,
    target_kind: str = 'static',
    base: float = 2.0,
) -> np.ndarray:
    """Targets of tau0, tau1, tau2 over arrays of two-user allocations.

    Returns an array of shape (3,) + f11.shape; infeasible entries (some
    user with zero SINR) are +inf.
    """
    if gains.g.shape != (2, 2) or powers.p.shape != (2,) or w.w.shape != (2,):
        raise DimensionMismatchError('two-user targets need 2x2 gains, 2 powers and 2 weights')
    w1, w2 = w.w
    full1, full2 = _log_rate(_full_power_sinr(gains, powers), base)
    out = np.empty((3,) + np.shape(f11))
    with np.errstate(divide='ignore', invalid='ignore'):
        for idx in range(3):
            eta1, eta2 = _two_user_sinr(f11, f12, f21, f22, gains.g, powers.p, idx)
            eta1 = np.broadcast_to(eta1, out.shape[1:])
            eta2 = np.broadcast_to(eta2, out.shape[1:])
            r1, r2 = _log_rate(eta1, base), _log_rate(eta2, base)
            if target_kind == 'static':
                values = np.maximum(w1 / r1, w2 / r2)
            elif target_kind == 'dynamic':
                values = _dynamic_from_rates(r1, r2, full1, full2, w1, w2)
            else:
                raise SimulationError(f'unknown target kind {target_kind!r}')
            out[idx] = np.where((eta1 > 0) & (eta2 > 0), values, np.inf)
    return out


def best_over_sic_orders(
    f: AllocationMatrix,
    gains: ChannelGains,
    powers: NormalizedPowers,
    w: Weights,
    target_kind: str = 'static',
    base: float = 2.0,
) -> tuple[float, DecodingOrder]:
    """Smallest target over all SIC orders and the order achieving it.

    Two users use tau0, tau1, tau2 with that tie priority. More users
    (static target only) try no SIC first, then every permutation in
    lexicographic order; the first order reaching the minimum wins.

    Raises:
        InfeasibleAllocationError: If every order leaves some user at zero SINR.
    """
    _check_dims(f, gains, powers)
    if gains.g.shape == (2, 2):
        cols = [f.f[i, j:j + 1] for i in range(2) for j in range(2)]
        stack = two_user_target_stack(*cols, gains, powers, w, target_kind, base)[:, 0]
        if not np.any(np.isfinite(stack)):
            raise InfeasibleAllocationError()
        idx = int(np.argmin(stack))
        return float(stack[idx]), TWO_USER_ORDERS[idx]

    if target_kind != 'static':
        raise DimensionMismatchError('dynamic target is defined for two users and two base stations')
    n = gains.n_users
    candidates = [DecodingOrder.no_sic()] + [
        DecodingOrder.ordered(perm) for perm in itertools.permutations(range(n))
    ]
    best_value, best_order = np.inf, None
    for order in candidates:
        eta = limiting_sinr_general(f, gains, powers, order)
        if np.any(eta <= 0):
            continue
        value = target_noma(eta, w, base)
        if value < best_value:
            best_value, best_order = value, order
    if best_order is None:
        raise InfeasibleAllocationError()
    return best_value, best_order
