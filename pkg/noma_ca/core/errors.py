"""
Exception hierarchy for the simulator.

Every error subclasses ValueError so callers that only care about
"bad input" can catch the builtin type.
"""

from typing import Optional


class SimulationError(ValueError):
    """Base class for all simulator errors."""


class DimensionMismatchError(SimulationError):
    """Array shapes of allocation, gains, powers or weights disagree."""


class InvalidAllocationError(SimulationError):
    """Power fractions outside [0, 1] or columns not summing to one."""


class CoincidentPositionsError(SimulationError):
    """A user sits exactly on a base station."""

    def __init__(self, message: str = 'coincident positions') -> None:
        super().__init__(message)


class UserExcludedError(SimulationError):
    """Some user has a zero SINR, which removes it from the cluster."""

    def __init__(self, message: str = 'user excluded from cluster') -> None:
        super().__init__(message)


class InfeasibleAllocationError(SimulationError):
    """Every SIC order leaves some user with a zero SINR."""

    def __init__(self, message: str = 'infeasible allocation for all orders') -> None:
        super().__init__(message)


class NoFeasibleAllocationError(SimulationError):
    """A search grid contains no feasible point at all."""

    def __init__(self, message: str = 'no feasible allocation') -> None:
        super().__init__(message)


class DegenerateChannelError(SimulationError):
    """Both channel cross-products vanish."""

    def __init__(self, message: str = 'degenerate channel') -> None:
        super().__init__(message)


class ExperimentError(SimulationError):
    """An instance of a Monte Carlo run failed."""

    def __init__(
        self,
        message: str,
        base_seed: int,
        instance_index: int,
        noise_w: Optional[float] = None,
    ) -> None:
        super().__init__(
            f'{message} (base_seed={base_seed}, instance_index={instance_index}, noise_w={noise_w!r})'
        )
        self.base_seed = base_seed
        self.instance_index = instance_index
        self.noise_w = noise_w


class ConfigError(SimulationError):
    """Configuration file missing, unreadable or not valid JSON."""

    def __init__(self, message: str, path: Optional[str] = None) -> None:
        super().__init__(f'{path}: {message}' if path else message)
        self.path = path


class DuplicateRecordError(SimulationError):
    """A run already holds a record for the same instance and noise level."""

    def __init__(self, message: str = 'duplicate record') -> None:
        super().__init__(message)
