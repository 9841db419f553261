"""
Figure-data export.

Single responsibility: turn an ExperimentSummary into the fig1..fig5 CSV
files. Floats are printed with 17 significant digits so that the files
reproduce the in-memory values exactly.

Public API:
- FIGURE_HEADERS
- format_value(value) -> str
- emit_figures(summary, out_dir, suffix='', include_scatter=True) -> list[Path]
"""

import csv
import io
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from noma_ca.simulation.montecarlo import ExperimentSummary
from noma_ca.utils.files import write_text_atomic

logger = logging.getLogger(__name__)

FIGURE_HEADERS: dict[str, tuple[str, ...]] = {
    'fig1': ('instance_index', 'f11_opt', 'f12_opt', 'on_edge', 'is_global', 'alpha'),
    'fig2': ('noise_w', 'pct_global', 'ci_low', 'ci_high'),
    'fig3': ('noise_w', 'pct_edge_conditional', 'n_edge_instances'),
    'fig4': ('noise_w', 'mean_degradation_pct'),
    'fig5': ('noise_w', 'alpha_global_mean', 'alpha_global_std', 'alpha_subopt_mean', 'alpha_subopt_std'),
}


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        return format(value, '.17g')
    return str(value)


def _render(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def _rows(summary: ExperimentSummary) -> dict[str, list[tuple]]:
    levels = summary.levels
    scatter = [
        (r.instance_index, r.oracle.f11, r.oracle.f12, r.oracle.on_edge, r.is_global, r.alpha)
        for r in summary.records_at(summary.config.fig1_noise)
    ]
    return {
        'fig1': scatter,
        'fig2': [(lv.noise_w, lv.pct_global, lv.ci_low, lv.ci_high) for lv in levels],
        'fig3': [(lv.noise_w, lv.pct_edge_conditional, lv.n_edge_instances) for lv in levels],
        'fig4': [(lv.noise_w, lv.mean_degradation_pct) for lv in levels],
        'fig5': [
            (lv.noise_w, lv.alpha_global_mean, lv.alpha_global_std, lv.alpha_subopt_mean, lv.alpha_subopt_std)
            for lv in levels
        ],
    }


def _warn_off_nominal_scatter(summary: ExperimentSummary) -> None:
    config = summary.config
    level = summary.level_at(config.fig1_noise).noise_w
    if level != config.fig1_noise:
        logger.warning(
            'fig1 uses noise level %s W; %s W is not in the sweep', format_value(level), format_value(config.fig1_noise)
        )
    if config.weights_case != 'equal':
        logger.warning('fig1 uses the %s weights case, not equal weights', config.weights_case)


def emit_figures(
    summary: ExperimentSummary,
    out_dir: Path,
    suffix: str = '',
    include_scatter: bool = True,
) -> list[Path]:
    """Write the figure CSVs into out_dir and return their paths.

    Args:
        summary: Complete experiment summary.
        out_dir: Existing output directory.
        suffix: Appended to file stems, e.g. '_two_to_one' gives fig2_two_to_one.csv.
        include_scatter: Write fig1 (the oracle argmin scatter).

    Raises:
        OSError: If a file cannot be written.
    """
    out_dir = Path(out_dir)
    written = []
    for name, rows in _rows(summary).items():
        if name == 'fig1':
            if not include_scatter:
                continue
            _warn_off_nominal_scatter(summary)
        path = out_dir / f'{name}{suffix}.csv'
        write_text_atomic(path, _render(FIGURE_HEADERS[name], rows))
        logger.info('Wrote %s (%d rows)', path, len(rows))
        written.append(path)
    return written
