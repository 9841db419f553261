import json
import logging

import numpy as np
import pytest

from noma_ca.core.model import ChannelGains, NormalizedPowers, Weights, best_over_sic_orders
from noma_ca.core.optimizers import OptimizationResult
from noma_ca.main import EXIT_CONFIG, EXIT_IO, EXIT_OK, main

SMALL_RUN = ['--instances', '3', '--seed', '7', '--noise', '5e-11', '--grid', '11,51', '--weights', 'equal']
INSTANCE = ['instance', '--seed', '7', '--index', '2', '--grid', '11,51']


def _csvs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.glob('*.csv'))}


class TestConfigErrors:

    def test_missing_config(self, tmp_path, capsys):
        path = tmp_path / 'nope.json'
        assert main(['simulate', '--config', str(path), '--out-dir', str(tmp_path / 'out')]) == EXIT_CONFIG
        assert str(path) in capsys.readouterr().err
        assert not (tmp_path / 'out').exists()

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / 'bad.json'
        path.write_text('{not json', encoding='utf-8')
        assert main(['simulate', '--config', str(path)]) == EXIT_CONFIG
        assert 'invalid JSON' in capsys.readouterr().err

    def test_config_not_utf8(self, tmp_path, capsys):
        path = tmp_path / 'latin.json'
        path.write_bytes(b'{"experiment": "\xff\xfe"}')
        assert main(['simulate', '--config', str(path), '--out-dir', str(tmp_path / 'out')]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert 'not valid UTF-8' in err
        assert str(path) in err

    def test_schema_error_names_the_field(self, tmp_path, capsys):
        path = tmp_path / 'config.json'
        path.write_text(json.dumps({'experiment': {'grid': {'grid_points_2d': 1}}}), encoding='utf-8')
        assert main(['simulate', '--config', str(path)]) == EXIT_CONFIG
        assert 'experiment.grid.grid_points_2d' in capsys.readouterr().err

    def test_negative_index(self, capsys):
        assert main(['instance', '--index', '-1']) == EXIT_CONFIG
        assert '--index' in capsys.readouterr().err

    def test_bad_grid_flag(self, tmp_path):
        assert main(['simulate', '--grid', 'x', '--out-dir', str(tmp_path)]) == EXIT_CONFIG


class TestSimulate:

    def test_outputs_are_reproducible(self, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert main(['simulate', *SMALL_RUN, '--out-dir', str(first)]) == EXIT_OK
        assert main(['simulate', *SMALL_RUN, '--out-dir', str(second)]) == EXIT_OK
        assert list(_csvs(first)) == ['fig1.csv', 'fig2.csv', 'fig3.csv', 'fig4.csv', 'fig5.csv']
        assert _csvs(first) == _csvs(second)
        assert (first / 'manifest.json').is_file()
        assert (first / 'records.db').is_file()

    def test_manifest_reruns_identically(self, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert main(['simulate', *SMALL_RUN, '--out-dir', str(first)]) == EXIT_OK
        manifest = first / 'manifest.json'
        assert main(['simulate', '--config', str(manifest), '--out-dir', str(second)]) == EXIT_OK
        assert _csvs(first) == _csvs(second)
        checksums = json.loads(manifest.read_text(encoding='utf-8'))['checksums']
        assert sorted(checksums) == list(_csvs(first))

    def test_figures_rebuild_from_store(self, tmp_path):
        out = tmp_path / 'out'
        assert main(['simulate', *SMALL_RUN, '--out-dir', str(out)]) == EXIT_OK
        before = _csvs(out)
        for path in out.glob('*.csv'):
            path.unlink()
        assert main(['figures', '--out-dir', str(out)]) == EXIT_OK
        assert _csvs(out) == before

    def test_figures_without_store(self, tmp_path):
        assert main(['figures', '--out-dir', str(tmp_path)]) == EXIT_IO

    def test_both_weight_cases(self, tmp_path):
        out = tmp_path / 'out'
        args = ['simulate', *SMALL_RUN[:-2], '--weights', 'both', '--out-dir', str(out)]
        assert main(args) == EXIT_OK
        names = set(_csvs(out))
        assert {'fig1.csv', 'fig2.csv', 'fig2_two_to_one.csv', 'fig5_two_to_one.csv'} <= names
        assert 'fig1_two_to_one.csv' not in names

    def test_weighted_only_run_flags_fig1(self, tmp_path, caplog):
        args = ['simulate', *SMALL_RUN[:-2], '--weights', 'two_to_one', '--out-dir', str(tmp_path)]
        with caplog.at_level(logging.WARNING, logger='noma_ca.reporting.figures'):
            assert main(args) == EXIT_OK
        assert (tmp_path / 'fig1.csv').is_file()
        assert 'two_to_one weights case' in caplog.text

    def test_sweep_alias(self, tmp_path):
        out = tmp_path / 'out'
        args = ['sweep', '--instances', '2', '--noise', '5e-12,5e-11,5e-10', '--grid', '11,51', '--weights', 'equal']
        assert main([*args, '--out-dir', str(out)]) == EXIT_OK
        assert len((out / 'fig2.csv').read_text(encoding='utf-8').splitlines()) == 4

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / 'file'
        blocker.write_text('', encoding='utf-8')
        assert main(['simulate', *SMALL_RUN, '--out-dir', str(blocker / 'out')]) == EXIT_IO


class TestInstance:

    def test_json_value_reevaluates(self, capsys):
        assert main([*INSTANCE, '--json']) == EXIT_OK
        dump = json.loads(capsys.readouterr().out)
        gains = ChannelGains(np.array(dump['gains']))
        powers = NormalizedPowers(np.array(dump['powers']))
        weights = Weights(np.array([1.0, 1.0]))
        for name in ('oracle', 'method'):
            result = OptimizationResult.from_dict(dump[name])
            value, _ = best_over_sic_orders(result.f_opt, gains, powers, weights, 'static')
            assert value == result.value
        assert dump['rel_gap'] >= 0.0

    def test_balanced_gains(self, capsys):
        assert main([*INSTANCE, '--gains', '1e-12,1e-12,1e-12,1e-12', '--json']) == EXIT_OK
        assert json.loads(capsys.readouterr().out)['alpha'] == 0.0

    def test_strong_advantage(self, capsys):
        assert main([*INSTANCE, '--gains', '1e-12,1e-20,1e-13,1e-12', '--json']) == EXIT_OK
        dump = json.loads(capsys.readouterr().out)
        assert dump['alpha'] == pytest.approx(1.0, abs=1e-6)
        assert dump['edges'] == ['f11=1', 'f12=0']
        assert dump['bs1_serves_user1']

    def test_human_readable(self, capsys):
        assert main(INSTANCE) == EXIT_OK
        out = capsys.readouterr().out
        assert 'selected edges' in out
        assert 'alpha:' in out
        assert 'oracle:' in out and 'method:' in out
