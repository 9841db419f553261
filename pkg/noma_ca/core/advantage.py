"""
Comparative-advantage criterion and the reduced search spaces it implies.

Single responsibility: decide, from channel gains alone, which BS should
serve which user, and describe the resulting low-dimensional subspace of
allocations. Powers never enter: scaling a BS's power scales both sides
of every criterion alike.

Public API:
- Edge, EdgeSubspace, SupportPattern
- pairwise_criterion(gains, i1, i2, j1, j2) -> bool
- order_users_by_advantage(gains) -> tuple[int, ...]
- edge_subspace_two_user(gains) -> EdgeSubspace
- normalized_advantage(gains) -> float
- split_search_space(order, split_index, n_users) -> SupportPattern
"""

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from noma_ca.core.errors import DegenerateChannelError, DimensionMismatchError, SimulationError
from noma_ca.core.model import ChannelGains


@dataclass(frozen=True)
class Edge:
    """One side of the (f11, f12) unit square: one coordinate pinned, the other free."""

    pinned: Literal['f11', 'f12']
    value: float

    def points(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(f11, f12) arrays along the edge for free-coordinate values t."""
        pinned = np.full_like(t, self.value, dtype=float)
        return (pinned, t) if self.pinned == 'f11' else (t, pinned)

    def contains(self, f11: float, f12: float) -> bool:
        coord = f11 if self.pinned == 'f11' else f12
        return coord == self.value


@dataclass(frozen=True)
class EdgeSubspace:
    """The two edges of the unit square selected by comparative advantage."""

    edges: tuple[Edge, Edge]
    bs1_serves_user1: bool

    @property
    def corner(self) -> tuple[float, float]:
        """Shared corner: each BS serving exclusively the user it favours."""
        return (1.0, 0.0) if self.bs1_serves_user1 else (0.0, 1.0)

    def contains(self, f11: float, f12: float) -> bool:
        return any(edge.contains(f11, f12) for edge in self.edges)


@dataclass(frozen=True)
class SupportPattern:
    """Which f_ij may be non-zero under a split at a given user (two BSs).

    mask[i, j] is True when user i (original index) may receive power from BS j.
    """

    mask: np.ndarray
    split_index: int

    @property
    def degrees_of_freedom(self) -> int:
        """Free entries minus one unit-sum constraint per BS."""
        return int(self.mask.sum()) - self.mask.shape[1]


def _require_gains(gains: ChannelGains, *users: int, stations: Sequence[int] = ()) -> None:
    for i in users:
        if not 0 <= i < gains.n_users:
            raise DimensionMismatchError(f'user index {i} out of range')
    for j in stations:
        if not 0 <= j < gains.n_bs:
            raise DimensionMismatchError(f'BS index {j} out of range')


def pairwise_criterion(gains: ChannelGains, i1: int, i2: int, j1: int, j2: int) -> bool:
    """True iff BS j1 has a strict comparative advantage in serving user i1 over user i2.

    Cross-multiplied form g[i1][j1] * g[i2][j2] > g[i2][j1] * g[i1][j2].
    """
    _require_gains(gains, i1, i2, stations=(j1, j2))
    g = gains.g
    quad = (g[i1, j1], g[i2, j2], g[i2, j1], g[i1, j2])
    if any(v <= 0 for v in quad):
        raise SimulationError('comparative advantage requires strictly positive gains')
    return bool(g[i1, j1] * g[i2, j2] > g[i2, j1] * g[i1, j2])


def order_users_by_advantage(gains: ChannelGains) -> tuple[int, ...]:
    """Users by descending g[i][1] / g[i][2]; equal ratios keep index order."""
    if gains.n_bs != 2:
        raise DimensionMismatchError('user ordering is defined for two base stations')
    gains.require_positive()
    ratio = gains.g[:, 0] / gains.g[:, 1]
    return tuple(int(i) for i in np.argsort(-ratio, kind='stable'))


def edge_subspace_two_user(gains: ChannelGains) -> EdgeSubspace:
    """Edges f11 = 1 and f12 = 0 if BS 1 favours user 1, else edges f11 = 0 and f12 = 1.

    Equal ratios fall in the second case.
    """
    if gains.g.shape != (2, 2):
        raise DimensionMismatchError('edge subspace is defined for two users and two base stations')
    if pairwise_criterion(gains, 0, 1, 0, 1):
        return EdgeSubspace(edges=(Edge('f11', 1.0), Edge('f12', 0.0)), bs1_serves_user1=True)
    return EdgeSubspace(edges=(Edge('f11', 0.0), Edge('f12', 1.0)), bs1_serves_user1=False)


def normalized_advantage(gains: ChannelGains) -> float:
    """alpha = |A - B| / (A + B) with A = g11 g22 and B = g12 g21.

    0 for perfectly balanced channels, 1 when one cross-product vanishes.

    Raises:
        DegenerateChannelError: If A + B == 0.
    """
    if gains.g.shape != (2, 2):
        raise DimensionMismatchError('alpha is defined for two users and two base stations')
    g = gains.g
    a = g[0, 0] * g[1, 1]
    b = g[0, 1] * g[1, 0]
    if a + b == 0:
        raise DegenerateChannelError()
    return float(abs(a - b) / (a + b))


def split_search_space(order: Sequence[int], split_index: int, n_users: int) -> SupportPattern:
    """Support of an allocation split at position split_index (1-based) of the advantage order.

    Users ranked before the split are served by BS 1 only, users after it
    by BS 2 only, and the split user by both.
    """
    if sorted(order) != list(range(n_users)):
        raise SimulationError(f'{order} is not a permutation of {n_users} users')
    if not 1 <= split_index <= n_users:
        raise SimulationError(f'split index {split_index} outside [1, {n_users}]')
    mask = np.zeros((n_users, 2), dtype=bool)
    for rank, user in enumerate(order, start=1):
        mask[user, 0] = rank <= split_index
        mask[user, 1] = rank >= split_index
    mask.setflags(write=False)
    return SupportPattern(mask=mask, split_index=split_index)
