"""
Configuration module for the comparative-advantage NOMA simulator.

Single responsibility: define, validate and load every run parameter.
Settings come from a JSON file plus command-line overrides; environment
variables are deliberately not consulted so that the manifest echo of a
run is enough to reproduce it.

Public API:
- Geometry, PathLossParams, RadioParams, ScenarioConfig, GridSpec,
  ExperimentConfig, SimulationSettings
- free_space_reference_gain(carrier: float, exponent: float = 2.0) -> float
- load_settings(path: str | None) -> SimulationSettings
- apply_overrides(settings: SimulationSettings, **overrides) -> SimulationSettings
- format_validation_error(exc: ValidationError) -> list[str]
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from noma_ca.core.errors import ConfigError

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0

WeightsCase = Literal['equal', 'two_to_one']
TargetKind = Literal['static', 'dynamic']
Fading = Literal['none', 'rayleigh']
ReferenceConvention = Literal['free_space_1m', 'wavelength_power']

# 9 log-spaced points between 5e-12 and 5e-8 W, half a decade apart.
DEFAULT_NOISE_LEVELS: tuple[float, ...] = (
    5e-12, 1.5811388300841898e-11,
    5e-11, 1.5811388300841898e-10,
    5e-10, 1.5811388300841898e-09,
    5e-09, 1.5811388300841898e-08,
    5e-08,
)

WEIGHT_VECTORS: dict[str, tuple[float, float]] = {
    'equal': (1.0, 1.0),
    'two_to_one': (2.0, 1.0),
}


def free_space_reference_gain(carrier: float, exponent: float = 2.0) -> float:
    """Gain at 1 m, (lambda / 4 pi)^exponent with lambda = c / carrier.

    exponent 2 is the physical free-space value. Passing the path-loss
    exponent instead raises the whole ratio lambda / (4 pi d) to it.
    """
    wavelength = SPEED_OF_LIGHT / carrier
    return (wavelength / (4.0 * math.pi)) ** exponent


class _Model(BaseModel):
    model_config = ConfigDict(extra='forbid')


class Geometry(_Model):
    """Rectangular deployment area and base-station coordinates, in meters."""

    area_width: float = Field(1000.0, gt=0)
    area_height: float = Field(500.0, gt=0)
    bs_positions: tuple[tuple[float, float], ...] = ((250.0, 250.0), (750.0, 250.0))

    @model_validator(mode='after')
    def _check_stations(self) -> 'Geometry':
        if len(self.bs_positions) < 2:
            raise ValueError('at least two base stations are required')
        for x, y in self.bs_positions:
            if not (0.0 <= x <= self.area_width and 0.0 <= y <= self.area_height):
                raise ValueError(f'base station ({x}, {y}) lies outside the area')
        return self


class PathLossParams(_Model):
    """Power-law path loss, optionally with unit-mean exponential (Rayleigh) fading.

    reference_gain is the gain at 1 m. Leaving it null in a config file
    resolves it from the configured carrier: free_space_1m uses (lambda / 4 pi)^2,
    wavelength_power uses (lambda / 4 pi)^exponent, which sits about 16 dB lower
    at 1 GHz and behaves like a 42 times higher noise power.
    """

    exponent: float = Field(3.0, gt=0)
    reference_gain: Optional[float] = Field(None, gt=0)
    fading: Fading = 'none'
    reference_convention: ReferenceConvention = 'free_space_1m'


class RadioParams(_Model):
    tx_power_per_bs: float = Field(10.0, gt=0)
    noise_power: float = Field(5e-11, gt=0)
    bandwidth: float = Field(20e6, gt=0)
    carrier: float = Field(1e9, gt=0)


class ScenarioConfig(_Model):
    n_users: int = Field(2, ge=1)
    geometry: Geometry = Field(default_factory=Geometry)
    path_loss: PathLossParams = Field(default_factory=PathLossParams)
    radio: RadioParams = Field(default_factory=RadioParams)

    @model_validator(mode='after')
    def _resolve_reference_gain(self) -> 'ScenarioConfig':
        if self.path_loss.reference_gain is None:
            exponent = self.path_loss.exponent
            if self.path_loss.reference_convention == 'free_space_1m':
                exponent = 2.0
            self.path_loss = self.path_loss.model_copy(
                update={'reference_gain': free_space_reference_gain(self.radio.carrier, exponent)}
            )
        return self


class GridSpec(_Model):
    """Search resolutions for the 2-D oracle and the 1-D edge search."""

    grid_points_2d: int = Field(201, ge=2)
    grid_points_edge: int = Field(1001, ge=2)
    refine: bool = False

    @property
    def nested(self) -> bool:
        """True when every boundary point of the 2-D grid is also an edge-grid point."""
        return (self.grid_points_edge - 1) % (self.grid_points_2d - 1) == 0

    @model_validator(mode='after')
    def _warn_not_nested(self) -> 'GridSpec':
        if not self.nested:
            logger.warning(
                'Edge grid (%d points) does not refine the 2-D grid boundary (%d points); '
                'exact-match statistics are not meaningful.',
                self.grid_points_edge, self.grid_points_2d,
            )
        return self


class ExperimentConfig(_Model):
    """One Monte Carlo experiment: a fixed weight case swept over noise levels."""

    n_instances: int = Field(10_000, ge=1)
    base_seed: int = Field(1, ge=0)
    weights_case: WeightsCase = 'equal'
    noise_levels: tuple[float, ...] = DEFAULT_NOISE_LEVELS
    target_kind: TargetKind = 'static'
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    grid: GridSpec = Field(default_factory=GridSpec)
    match_rel_tol: float = Field(1e-9, ge=0)
    log_base: float = Field(2.0, gt=1)
    alpha_threshold: float = Field(0.7, ge=0, le=1)
    alpha_rule_noise: float = Field(5e-9, gt=0)
    fig1_noise: float = Field(5e-11, gt=0)

    @field_validator('noise_levels')
    @classmethod
    def _check_noise_levels(cls, levels: tuple[float, ...]) -> tuple[float, ...]:
        if not levels:
            raise ValueError('at least one noise level is required')
        if any(level <= 0 for level in levels):
            raise ValueError('noise levels must be positive')
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError('noise levels must be strictly ascending')
        return levels

    @model_validator(mode='after')
    def _check_two_cell(self) -> 'ExperimentConfig':
        if self.scenario.n_users != 2 or len(self.scenario.geometry.bs_positions) != 2:
            raise ValueError('experiments run the two-user two-cell system only')
        return self

    @property
    def weights(self) -> tuple[float, float]:
        return WEIGHT_VECTORS[self.weights_case]


class SimulationSettings(_Model):
    """Top-level config file schema."""

    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    weights_cases: tuple[WeightsCase, ...] = ('equal', 'two_to_one')
    out_dir: str = 'output'
    workers: int = Field(1, ge=1)
    db_name: str = 'records.db'

    @field_validator('weights_cases')
    @classmethod
    def _check_cases(cls, cases: tuple[str, ...]) -> tuple[str, ...]:
        if not cases:
            raise ValueError('at least one weights case is required')
        if len(set(cases)) != len(cases):
            raise ValueError('weights cases must be unique')
        return cases

    def experiment_for(self, case: str) -> ExperimentConfig:
        """Experiment config with the weight case replaced."""
        return self.experiment.model_copy(update={'weights_case': case})


def load_settings(path: Optional[str]) -> SimulationSettings:
    """Load settings from a JSON file, or defaults when path is None.

    The file may also be a run manifest, in which case its config echo is used.

    Raises:
        ConfigError: If the file is missing, not UTF-8 or not valid JSON.
        ValidationError: If the content does not match the schema.
    """
    if path is None:
        return SimulationSettings()
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError('config file not found', path=str(config_path))
    try:
        data = json.loads(config_path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise ConfigError(f'invalid JSON at line {e.lineno} column {e.colno}: {e.msg}', path=str(config_path))
    except UnicodeDecodeError:
        raise ConfigError('config file is not valid UTF-8', path=str(config_path))
    except OSError as e:
        raise ConfigError(f'cannot read config file: {e.strerror}', path=str(config_path))
    if isinstance(data, dict) and 'checksums' in data and 'config' in data:
        # A run manifest: re-run its config echo.
        data = data['config']
    settings = SimulationSettings.model_validate(data)
    logger.info('Loaded configuration from %s', config_path)
    return settings


def _parse_grid(value: str) -> dict[str, int]:
    parts = [p.strip() for p in value.split(',') if p.strip()]
    if not 1 <= len(parts) <= 2:
        raise ConfigError(f'--grid expects "N2D" or "N2D,NEDGE", got {value!r}')
    try:
        counts = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f'--grid expects integers, got {value!r}')
    grid = {'grid_points_2d': counts[0]}
    if len(counts) == 2:
        grid['grid_points_edge'] = counts[1]
    return grid


def apply_overrides(
    settings: SimulationSettings,
    instances: Optional[int] = None,
    seed: Optional[int] = None,
    noise: Optional[list[float]] = None,
    weights: Optional[str] = None,
    grid: Optional[str] = None,
    target: Optional[str] = None,
    out_dir: Optional[str] = None,
    workers: Optional[int] = None,
) -> SimulationSettings:
    """Return a re-validated copy of settings with CLI flag values applied.

    Args:
        weights: 'equal', 'two_to_one' or 'both'.
        grid: '201' or '201,1001' (2-D points per axis, points per edge).
    """
    data: dict[str, Any] = settings.model_dump()
    experiment = data['experiment']
    if instances is not None:
        experiment['n_instances'] = instances
    if seed is not None:
        experiment['base_seed'] = seed
    if noise is not None:
        experiment['noise_levels'] = sorted(noise)
    if target is not None:
        experiment['target_kind'] = target
    if grid is not None:
        experiment['grid'].update(_parse_grid(grid))
    if weights is not None:
        cases = ['equal', 'two_to_one'] if weights == 'both' else [weights]
        data['weights_cases'] = cases
        experiment['weights_case'] = cases[0]
    if out_dir is not None:
        data['out_dir'] = out_dir
    if workers is not None:
        data['workers'] = workers
    return SimulationSettings.model_validate(data)


def format_validation_error(exc: ValidationError) -> list[str]:
    """Render a pydantic error as 'dotted.schema.path: message' lines."""
    lines = []
    for err in exc.errors():
        location = '.'.join(str(part) for part in err['loc']) or '<root>'
        lines.append(f"{location}: {err['msg']}")
    return lines
