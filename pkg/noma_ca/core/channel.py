"""
Random two-cell scenario generation.

Single responsibility: draw user positions, turn distances into channel
gains and normalize BS powers by the noise power. Every function takes
its random source as an argument; nothing here holds state.

Public API:
- ScenarioInstance
- instance_seed(base_seed: int, instance_index: int) -> int
- place_users(rng, geometry, n_users) -> np.ndarray
- path_gain(user_pos, bs_pos, params, rng=None) -> float
- generate_instance(rng, config, seed_record=0) -> ScenarioInstance
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from noma_ca.core.config import Geometry, PathLossParams, ScenarioConfig
from noma_ca.core.errors import CoincidentPositionsError, SimulationError
from noma_ca.core.model import ChannelGains, NormalizedPowers


@dataclass(frozen=True)
class ScenarioInstance:
    """One random draw: where the users are, what they hear, and at what power."""

    user_positions: np.ndarray
    gains: ChannelGains
    powers: NormalizedPowers
    seed_record: int

    def __post_init__(self) -> None:
        if not np.all(self.gains.g > 0):
            raise SimulationError('instance gains must be strictly positive')

    def with_noise(self, tx_power: float, noise_power: float) -> 'ScenarioInstance':
        """Same users and gains, powers renormalized for another noise level."""
        n_bs = self.gains.n_bs
        return replace(self, powers=NormalizedPowers.from_watts([tx_power] * n_bs, noise_power))

    def with_gains(self, gains: ChannelGains) -> 'ScenarioInstance':
        return replace(self, gains=gains)


def instance_seed(base_seed: int, instance_index: int) -> int:
    """Integer seed of one instance, derived from (base_seed, index) only."""
    seq = np.random.SeedSequence([base_seed, instance_index])
    return int(seq.generate_state(1)[0])


def place_users(rng: np.random.Generator, geometry: Geometry, n_users: int) -> np.ndarray:
    """Uniform user positions over the area, shape (n_users, 2)."""
    if n_users < 1:
        raise SimulationError('at least one user is required')
    return rng.uniform(
        low=(0.0, 0.0),
        high=(geometry.area_width, geometry.area_height),
        size=(n_users, 2),
    )


def path_gain(
    user_pos: Sequence[float],
    bs_pos: Sequence[float],
    params: PathLossParams,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Power gain reference_gain * d^-exponent, times an Exp(1) draw under Rayleigh fading.

    Raises:
        CoincidentPositionsError: If the user sits on the base station.
    """
    distance = math.dist(user_pos, bs_pos)
    if distance == 0.0:
        raise CoincidentPositionsError()
    if params.reference_gain is None:
        raise SimulationError('reference gain is unresolved')
    gain = params.reference_gain * distance ** (-params.exponent)
    if params.fading == 'rayleigh':
        if rng is None:
            raise SimulationError('rayleigh fading needs a random source')
        gain *= rng.exponential(1.0)
    return gain


def generate_instance(
    rng: np.random.Generator,
    config: ScenarioConfig,
    seed_record: int = 0,
) -> ScenarioInstance:
    """Draw users, compute gains[i][j] = path_gain(user i, BS j), normalize powers.

    Positions are drawn before any fading sample, so the draw order is fixed
    for a given config.
    """
    positions = place_users(rng, config.geometry, config.n_users)
    stations = config.geometry.bs_positions
    g = np.array([
        [path_gain(user, bs, config.path_loss, rng) for bs in stations]
        for user in positions
    ])
    radio = config.radio
    powers = NormalizedPowers.from_watts([radio.tx_power_per_bs] * len(stations), radio.noise_power)
    return ScenarioInstance(
        user_positions=positions,
        gains=ChannelGains(g),
        powers=powers,
        seed_record=seed_record,
    )
