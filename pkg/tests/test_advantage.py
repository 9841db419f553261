"""Comparative-advantage criterion, reduced subspaces and the split structure of optima."""

import itertools

import numpy as np
import pytest

from noma_ca.core.advantage import (
    Edge,
    edge_subspace_two_user,
    normalized_advantage,
    order_users_by_advantage,
    pairwise_criterion,
    split_search_space,
)
from noma_ca.core.channel import generate_instance
from noma_ca.core.config import ScenarioConfig
from noma_ca.core.errors import DegenerateChannelError, DimensionMismatchError, SimulationError
from noma_ca.core.model import (
    AllocationMatrix,
    ChannelGains,
    NormalizedPowers,
    Weights,
    independent_sinr,
    target_independent,
)
from noma_ca.core.optimizers import brute_force_independent


def gains(*rows):
    return ChannelGains(np.array(rows, dtype=float))


class TestPairwiseCriterion:

    def test_strict_advantage(self):
        g = gains([4.0, 1.0], [1.0, 4.0])
        assert pairwise_criterion(g, 0, 1, 0, 1)
        assert not pairwise_criterion(g, 0, 1, 1, 0)
        assert pairwise_criterion(g, 1, 0, 1, 0)

    def test_equal_ratios_are_not_an_advantage(self):
        g = gains([2.0, 1.0], [4.0, 2.0])
        assert not pairwise_criterion(g, 0, 1, 0, 1)
        assert not pairwise_criterion(g, 1, 0, 0, 1)

    def test_invariant_under_power_scaling(self):
        g = gains([3.0, 1.0], [1.0, 2.0])
        scaled = ChannelGains(g.g * np.array([1e6, 1e-3]))
        assert pairwise_criterion(g, 0, 1, 0, 1) == pairwise_criterion(scaled, 0, 1, 0, 1)

    def test_zero_gain_rejected(self):
        with pytest.raises(SimulationError):
            pairwise_criterion(gains([0.0, 1.0], [1.0, 1.0]), 0, 1, 0, 1)

    def test_index_out_of_range(self):
        with pytest.raises(DimensionMismatchError):
            pairwise_criterion(gains([1.0, 1.0], [1.0, 1.0]), 0, 2, 0, 1)


class TestOrdering:

    def test_descending_ratio(self):
        assert order_users_by_advantage(gains([1.0, 2.0], [3.0, 1.0], [2.0, 2.0])) == (1, 2, 0)

    def test_ties_keep_index_order(self):
        assert order_users_by_advantage(gains([1.0, 1.0], [2.0, 2.0], [5.0, 1.0])) == (2, 0, 1)

    def test_needs_two_stations(self):
        with pytest.raises(DimensionMismatchError):
            order_users_by_advantage(ChannelGains(np.ones((2, 3))))

    def test_order_consistent_with_pairwise(self, rng):
        for _ in range(50):
            g = ChannelGains(rng.uniform(0.1, 1.0, size=(4, 2)))
            order = order_users_by_advantage(g)
            for a, b in itertools.combinations(order, 2):
                assert not pairwise_criterion(g, b, a, 0, 1)


class TestEdgeSubspace:

    def test_swapping_users_swaps_branch(self, rng):
        for _ in range(200):
            g = ChannelGains(rng.uniform(0.01, 1.0, size=(2, 2)))
            subspace = edge_subspace_two_user(g)
            swapped = edge_subspace_two_user(g.permuted((1, 0)))
            assert swapped.bs1_serves_user1 != subspace.bs1_serves_user1

    def test_bs1_serves_user1(self):
        subspace = edge_subspace_two_user(gains([1.0, 0.1], [0.1, 1.0]))
        assert subspace.bs1_serves_user1
        assert subspace.edges == (Edge('f11', 1.0), Edge('f12', 0.0))
        assert subspace.corner == (1.0, 0.0)

    def test_bs1_serves_user2(self):
        subspace = edge_subspace_two_user(gains([0.1, 1.0], [1.0, 0.1]))
        assert not subspace.bs1_serves_user1
        assert subspace.edges == (Edge('f11', 0.0), Edge('f12', 1.0))
        assert subspace.corner == (0.0, 1.0)

    def test_equal_ratios_take_second_case(self):
        assert not edge_subspace_two_user(gains([1.0, 1.0], [1.0, 1.0])).bs1_serves_user1

    def test_edge_points(self):
        f11, f12 = Edge('f12', 0.0).points(np.array([0.0, 0.5, 1.0]))
        np.testing.assert_array_equal(f11, [0.0, 0.5, 1.0])
        np.testing.assert_array_equal(f12, [0.0, 0.0, 0.0])

    def test_contains(self):
        subspace = edge_subspace_two_user(gains([1.0, 0.1], [0.1, 1.0]))
        assert subspace.contains(1.0, 0.3)
        assert subspace.contains(0.3, 0.0)
        assert not subspace.contains(0.3, 0.3)
        assert not subspace.contains(0.0, 1.0)

    def test_needs_two_by_two(self):
        with pytest.raises(DimensionMismatchError):
            edge_subspace_two_user(ChannelGains(np.ones((3, 2))))


class TestNormalizedAdvantage:

    def test_cross_products_three_to_one(self):
        # A = g11 g22 = 3, B = g12 g21 = 1
        assert normalized_advantage(gains([3.0, 1.0], [1.0, 1.0])) == 0.5

    def test_invariant_under_common_scaling(self, rng):
        for _ in range(100):
            g = rng.uniform(0.01, 1.0, size=(2, 2))
            alpha = normalized_advantage(ChannelGains(g))
            assert normalized_advantage(ChannelGains(4.0 * g)) == alpha
            assert normalized_advantage(ChannelGains(1e-11 * g)) == pytest.approx(alpha, rel=1e-12, abs=1e-15)

    def test_balanced_channels(self):
        assert normalized_advantage(gains([1.0, 1.0], [1.0, 1.0])) == 0.0
        assert normalized_advantage(gains([1.0, 2.0], [3.0, 6.0])) == 0.0

    def test_vanishing_cross_gain(self):
        assert normalized_advantage(gains([1.0, 1e-12], [1.0, 1.0])) == pytest.approx(1.0)

    def test_range(self, rng):
        for _ in range(100):
            alpha = normalized_advantage(ChannelGains(rng.uniform(0.0, 1.0, size=(2, 2)) + 1e-9))
            assert 0.0 <= alpha <= 1.0

    def test_degenerate(self):
        with pytest.raises(DegenerateChannelError, match='degenerate channel'):
            normalized_advantage(gains([0.0, 1.0], [0.0, 1.0]))


class TestSplitSearchSpace:

    def test_two_user_patterns_are_the_selected_edges(self, rng):
        for _ in range(100):
            g = ChannelGains(rng.uniform(0.01, 1.0, size=(2, 2)))
            order = order_users_by_advantage(g)
            edges = {_pinned_edge(split_search_space(order, split, 2)) for split in (1, 2)}
            assert edges == set(edge_subspace_two_user(g).edges)

    def test_mask(self):
        pattern = split_search_space((0, 1, 2), 2, 3)
        np.testing.assert_array_equal(pattern.mask, [[True, False], [True, True], [False, True]])
        assert pattern.degrees_of_freedom == 2

    def test_mask_follows_original_indices(self):
        pattern = split_search_space((2, 0, 1), 1, 3)
        np.testing.assert_array_equal(pattern.mask, [[False, True], [False, True], [True, True]])

    @pytest.mark.parametrize('n_users', [1, 2, 3, 5])
    def test_degrees_of_freedom(self, n_users):
        order = tuple(range(n_users))
        for split in range(1, n_users + 1):
            assert split_search_space(order, split, n_users).degrees_of_freedom == n_users - 1

    def test_bad_split(self):
        with pytest.raises(SimulationError):
            split_search_space((0, 1), 3, 2)

    def test_bad_order(self):
        with pytest.raises(SimulationError):
            split_search_space((0, 0), 1, 2)


def _cross_bound(g: np.ndarray, p: np.ndarray, i1: int, i2: int, step: float) -> float:
    # Largest cross product f[i1,BS2] * f[i2,BS1] a grid minimizer can keep: moving
    # power between the pair dominates any larger one. Grows as the advantage weakens.
    a1, b1 = g[i1, 0] * p[0], g[i1, 1] * p[1]
    a2, b2 = g[i2, 0] * p[0], g[i2, 1] * p[1]
    rho = (a2 * b1) / (a1 * b2)
    return 2.0 * step * (1.0 + 2.0 * max(a2 / b2, b1 / a1)) / (1.0 - rho)


def _uncross(f: np.ndarray, g: np.ndarray, p: np.ndarray, i1: int, i2: int) -> np.ndarray:
    """Trade BS 1 power from i2 to i1 against BS 2 power from i1 to i2.

    The trade keeps i1's SINR fixed and stops when one crossed share is empty;
    when BS 1 favours i1 it can only raise i2's SINR.
    """
    f = f.copy()
    a1, b1 = g[i1, 0] * p[0], g[i1, 1] * p[1]
    crossed1, crossed2 = f[i2, 0], f[i1, 1]
    if crossed2 * b1 <= crossed1 * a1:
        moved = crossed2 * b1 / a1
        f[i1, 1], f[i2, 1] = 0.0, f[i2, 1] + crossed2
        f[i2, 0], f[i1, 0] = max(crossed1 - moved, 0.0), min(f[i1, 0] + moved, 1.0)
    else:
        moved = crossed1 * a1 / b1
        f[i2, 0], f[i1, 0] = 0.0, f[i1, 0] + crossed1
        f[i1, 1], f[i2, 1] = max(crossed2 - moved, 0.0), min(f[i2, 1] + moved, 1.0)
    return f


def _pinned_edge(pattern) -> Edge:
    (user, station), = np.argwhere(~pattern.mask)
    return Edge('f11' if station == 0 else 'f12', 0.0 if user == 0 else 1.0)


class TestSplitStructure:
    """Brute-force optima of the independent model serve users in advantage order."""

    @pytest.mark.parametrize('n_users, steps', [(2, 50), (3, 25)])
    def test_crossed_service_is_rare_and_removable(self, n_users, steps):
        rng = np.random.default_rng(7 + n_users)
        scenario = ScenarioConfig(n_users=n_users)
        w = Weights(np.ones(n_users))
        step = 1.0 / steps
        pairs = crossed = 0
        for _ in range(200):
            instance = generate_instance(rng, scenario)
            g, p = instance.gains.g, instance.powers.p
            best = brute_force_independent(instance.gains, instance.powers, w, steps=steps)
            f = best.f
            best_value = target_independent(independent_sinr(best, instance.gains, instance.powers), w)
            for i1, i2 in itertools.permutations(range(n_users), 2):
                if not pairwise_criterion(instance.gains, i1, i2, 0, 1):
                    continue
                pairs += 1
                product = f[i1, 1] * f[i2, 0]
                bound = _cross_bound(g, p, i1, i2, step)
                assert product <= bound
                if product > 2.0 * step:
                    crossed += 1
                if product == 0.0:
                    continue
                split = AllocationMatrix(_uncross(f, g, p, i1, i2))
                assert split.f[i1, 1] * split.f[i2, 0] == 0.0
                split_value = target_independent(independent_sinr(split, instance.gains, instance.powers), w)
                assert split_value <= best_value * (1.0 + 1e-12)
        # Products above 2 x step come from weak advantages the grid cannot resolve.
        assert crossed <= 0.2 * pairs

    def test_single_user_gets_everything(self):
        f = brute_force_independent(gains([1.0, 2.0]), NormalizedPowers(np.array([1.0, 1.0])), Weights(np.ones(1)))
        np.testing.assert_array_equal(f.f, [[1.0, 1.0]])

    def test_weak_user_gets_most_power(self):
        f = brute_force_independent(
            gains([1.0, 1.0], [1e-3, 1e-3]),
            NormalizedPowers(np.array([100.0, 100.0])),
            Weights(np.ones(2)),
        )
        assert f.f[1].sum() > 1.5

    def test_symmetric_instance_has_symmetric_minimizer(self):
        g = gains([2.0, 1.0], [1.0, 2.0])
        p = NormalizedPowers(np.array([10.0, 10.0]))
        w = Weights(np.ones(2))
        f = brute_force_independent(g, p, w, steps=20)
        mirror = AllocationMatrix(f.f[::-1, ::-1])
        best = target_independent(independent_sinr(f, g, p), w)
        assert target_independent(independent_sinr(mirror, g, p), w) == pytest.approx(best, rel=1e-12)
