"""
Command-line entry point of the simulator.

Responsibilities:
1. Parse subcommands and load configuration (JSON file + flag overrides)
2. Run the Monte Carlo experiment for every weight case, storing records as they complete
3. Write figure CSVs and the run manifest
4. Map failures to exit codes

Subcommands: simulate, sweep (alias of simulate), instance, figures.
Exit codes: 0 success, 1 simulation failure, 2 configuration error, 3 I/O error.
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import aiosqlite
import numpy as np
from pydantic import ValidationError

from noma_ca import __version__
from noma_ca.core.advantage import edge_subspace_two_user
from noma_ca.core.channel import generate_instance, instance_seed
from noma_ca.core.config import (
    ExperimentConfig,
    SimulationSettings,
    apply_overrides,
    format_validation_error,
    load_settings,
)
from noma_ca.core.errors import ConfigError, SimulationError
from noma_ca.core.model import ChannelGains
from noma_ca.database import service as db_service
from noma_ca.reporting.figures import emit_figures, format_value
from noma_ca.reporting.manifest import build_manifest
from noma_ca.simulation.montecarlo import (
    ExperimentSummary,
    InstanceRecord,
    evaluate_instance,
    run_experiment_async,
    summarize,
    trend_statistics,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SIMULATION = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _noise_list(value: str) -> list[float]:
    try:
        levels = [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated watts, got {value!r}')
    if not levels:
        raise argparse.ArgumentTypeError('at least one noise level is required')
    return levels


def _gains(value: str) -> np.ndarray:
    try:
        values = [float(v) for v in value.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected g11,g12,g21,g22, got {value!r}')
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f'expected four gains g11,g12,g21,g22, got {len(values)}')
    return np.array(values).reshape(2, 2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='noma_ca',
        description='Comparative-advantage power allocation for two-cell NOMA: Monte Carlo simulator.',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON config file (or a run manifest); defaults apply when omitted')
    common.add_argument('--out-dir', help='output directory')
    common.add_argument('--verbose', action='store_true', help='debug logging')

    experiment = argparse.ArgumentParser(add_help=False)
    experiment.add_argument('--instances', type=int, help='Monte Carlo instances per noise level')
    experiment.add_argument('--seed', type=int, help='base seed')
    experiment.add_argument('--noise', type=_noise_list, help='comma-separated noise powers in watts')
    experiment.add_argument('--weights', choices=('equal', 'two_to_one', 'both'), help='weight case(s)')
    experiment.add_argument('--grid', help='"N2D" or "N2D,NEDGE" grid points')
    experiment.add_argument('--target', choices=('static', 'dynamic'), help='target function')
    experiment.add_argument('--workers', type=int, help='worker processes')

    for name in ('simulate', 'sweep'):
        sub.add_parser(
            name,
            parents=[common, experiment],
            help='run the experiment and write fig1..fig5 CSVs' if name == 'simulate' else 'alias of simulate',
        )

    inst = sub.add_parser('instance', parents=[common], help='evaluate and print a single instance')
    inst.add_argument('--seed', type=int, help='base seed')
    inst.add_argument('--index', type=int, default=0, help='instance index')
    inst.add_argument('--noise', type=float, help='noise power in watts (default: the scenario noise power)')
    inst.add_argument('--weights', choices=('equal', 'two_to_one'), help='weight case')
    inst.add_argument('--grid', help='"N2D" or "N2D,NEDGE" grid points')
    inst.add_argument('--target', choices=('static', 'dynamic'), help='target function')
    inst.add_argument('--gains', type=_gains, help='fixture gains g11,g12,g21,g22 replacing the drawn ones')
    inst.add_argument('--json', action='store_true', help='print the record as JSON')

    figs = sub.add_parser('figures', parents=[common], help='rebuild figure CSVs from a record store')
    figs.add_argument('--db', help='record store (default: <out-dir>/records.db)')
    return parser


def _settings(args: argparse.Namespace) -> SimulationSettings:
    settings = load_settings(args.config)
    return apply_overrides(
        settings,
        instances=getattr(args, 'instances', None),
        seed=getattr(args, 'seed', None),
        noise=getattr(args, 'noise', None) if args.command != 'instance' else None,
        weights=getattr(args, 'weights', None),
        grid=getattr(args, 'grid', None),
        target=getattr(args, 'target', None),
        out_dir=args.out_dir,
        workers=getattr(args, 'workers', None),
    )


def _log_summary(summary: ExperimentSummary) -> None:
    config = summary.config
    rule = summary.level_at(config.alpha_rule_noise)
    logger.info('alpha > %.2f rule at %.3e W: accuracy %.4f, majority baseline %.4f',
                config.alpha_threshold, rule.noise_w, rule.alpha_rule_accuracy, rule.majority_baseline)
    worst = summary.worst_degradation
    logger.info('Worst mean degradation %.5f%% at %.3e W', worst.mean_degradation_pct, worst.noise_w)
    if len(summary.levels) >= 3:
        trend = trend_statistics(summary)
        logger.info('Noise trend %s: rank correlation %.3f (p=%.3g), end gain %.4f (2 SE = %.4f)',
                    trend.trend, trend.rank_correlation, trend.p_value, trend.end_gain, 2.0 * trend.end_gain_se)


async def simulate(settings: SimulationSettings) -> list[Path]:
    """Run every weight case, persist records, write CSVs and the manifest.

    Returns:
        Paths of the written files, manifest last.
    """
    out_dir = Path(settings.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    db_path = str(out_dir / settings.db_name)
    await db_service.init_db(db_path)

    written: list[Path] = []
    for position, case in enumerate(settings.weights_cases):
        config = settings.experiment_for(case)
        run_id = await db_service.save_run(db_path, case, position, config.model_dump_json())

        async def store(batch: list[InstanceRecord], run_id: int = run_id) -> None:
            await db_service.save_records(db_path, run_id, batch)

        summary = await run_experiment_async(config, settings.workers, on_records=store)
        _log_summary(summary)
        suffix = '' if position == 0 else f'_{case}'
        written += emit_figures(summary, out_dir, suffix=suffix, include_scatter=position == 0)

    manifest_path = build_manifest(settings, written).write(out_dir)
    return written + [manifest_path]


async def rebuild_figures(db_path: str, out_dir: Path) -> list[Path]:
    """Recompute summaries of the latest stored invocation and rewrite its CSVs.

    Raises:
        FileNotFoundError: If db_path does not exist or holds no runs.
    """
    if not Path(db_path).is_file():
        raise FileNotFoundError(f'record store not found: {db_path}')
    runs = await db_service.fetch_latest_batch(db_path)
    if not runs:
        raise FileNotFoundError(f'record store holds no runs: {db_path}')
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for run in runs:
        config = ExperimentConfig.model_validate_json(run['config_json'])
        records = await db_service.fetch_records(db_path, run['id'])
        summary = summarize(config, records)
        suffix = '' if run['position'] == 0 else f"_{run['label']}"
        written += emit_figures(summary, out_dir, suffix=suffix, include_scatter=run['position'] == 0)
    return written


def inspect_instance(
    settings: SimulationSettings,
    index: int,
    noise: Optional[float] = None,
    gains: Optional[np.ndarray] = None,
) -> tuple[InstanceRecord, dict[str, Any]]:
    """Evaluate one instance of the primary weight case.

    Args:
        gains: Fixture gains replacing the drawn ones; positions stay as drawn.

    Returns:
        The record and its JSON-ready dump including the selected edges.
    """
    config = settings.experiment
    noise = config.scenario.radio.noise_power if noise is None else noise
    seed = instance_seed(config.base_seed, index)
    instance = generate_instance(np.random.default_rng(seed), config.scenario, seed_record=seed)
    if gains is not None:
        instance = instance.with_gains(ChannelGains(gains))
    record = evaluate_instance(config, instance, index, noise)
    subspace = edge_subspace_two_user(instance.gains)
    dump = record.to_dict()
    dump['edges'] = [f'{edge.pinned}={edge.value:g}' for edge in subspace.edges]
    return record, dump


def format_instance(dump: dict[str, Any]) -> str:
    """Human-readable block of an inspected instance."""
    def fmt(values) -> str:
        return ', '.join(format_value(float(v)) for v in values)

    lines = [
        f"instance {dump['instance_index']} (seed {dump['seed_record']}), noise {format_value(dump['noise_w'])} W, "
        f"{dump['weights_case']} weights, {dump['target_kind']} target",
    ]
    for i, pos in enumerate(dump['user_positions'], start=1):
        lines.append(f'  user {i} at ({fmt(pos)}) m')
    for i, row in enumerate(dump['gains'], start=1):
        lines.append(f'  gains user {i}: {fmt(row)}')
    lines.append(f"  normalized powers: {fmt(dump['powers'])}")
    lines.append(f"  selected edges: {', '.join(dump['edges'])}")
    lines.append(f"  alpha: {format_value(dump['alpha'])}")
    for name in ('oracle', 'method'):
        res = dump[name]
        lines.append(
            f"  {name}: f11={format_value(res['f11'])} f12={format_value(res['f12'])} "
            f"value={format_value(res['value'])} order={res['order']} on_edge={format_value(res['on_edge'])} "
            f"evaluations={res['evaluations']}"
        )
    lines.append(f"  rel_gap: {format_value(dump['rel_gap'])}  is_global: {format_value(dump['is_global'])}")
    return '\n'.join(lines)


async def dispatch(args: argparse.Namespace) -> None:
    settings = _settings(args)
    if args.command in ('simulate', 'sweep'):
        if args.command == 'sweep' and len(settings.experiment.noise_levels) < 3:
            logger.warning('sweep with %d noise level(s): no trend statistics', len(settings.experiment.noise_levels))
        written = await simulate(settings)
        logger.info('Wrote %d files to %s', len(written), settings.out_dir)
    elif args.command == 'instance':
        if args.index < 0:
            raise ConfigError(f'--index must be non-negative, got {args.index}')
        if args.noise is not None and args.noise <= 0:
            raise ConfigError(f'--noise must be positive, got {args.noise}')
        _, dump = inspect_instance(settings, args.index, args.noise, args.gains)
        print(json.dumps(dump, indent=2) if args.json else format_instance(dump))
    elif args.command == 'figures':
        db_path = args.db or str(Path(settings.out_dir) / settings.db_name)
        written = await rebuild_figures(db_path, Path(settings.out_dir))
        logger.info('Rebuilt %d files in %s', len(written), settings.out_dir)


def _fail(code: int, message: str) -> int:
    print(f'error: {message}', file=sys.stderr)
    logger.debug('Failure detail', exc_info=True)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit status."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    try:
        asyncio.run(dispatch(args))
    except ValidationError as e:
        source = args.config or 'configuration'
        return _fail(EXIT_CONFIG, '\n'.join(f'{source}: {line}' for line in format_validation_error(e)))
    except ConfigError as e:
        return _fail(EXIT_CONFIG, str(e))
    except SimulationError as e:
        return _fail(EXIT_SIMULATION, str(e))
    except (OSError, aiosqlite.Error) as e:
        return _fail(EXIT_IO, str(e))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
