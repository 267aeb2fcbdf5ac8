import io
import math

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.evaluation.metrics import MetricsReport, MetricsRow
from apps.evaluation.simulation import build_snapshot

from .config import ExperimentConfig, parse_pa_grid
from .exceptions import ConfigError, ReportFormatError
from .loaders import dump_config, load_config
from .reports import (
    REPORT_HEADER, SnapshotDump, emit_plotdata, read_report, read_snapshot,
    write_report, write_snapshot
)

TINY = """[settings]
x_min = -2
x_max = 2
y_min = -2
y_max = 2
catalog_size = 20
cache_size = 5
realizations = 1
"""


@pytest.fixture
def document(tmp_path):
    def write(text):
        path = tmp_path / 'experiment.ini'
        path.write_text(text)
        return path
    return write


def run(*args):
    out = io.StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


class TestPaGrid:

    def test_range(self):
        grid = parse_pa_grid('0.1:1.0:0.1')
        assert len(grid) == 10
        assert grid[2] == 0.3
        assert grid[-1] == 1.0

    def test_list(self):
        assert parse_pa_grid('0.2, 0.5,0.8') == (0.2, 0.5, 0.8)

    @pytest.mark.parametrize('text', ['', '0.1:1.0', '0.1:1.0:0', '1.0:0.1:0.1', 'a,b', '0.2,0.2'])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_pa_grid(text)


class TestLoadConfig:

    def test_empty_document_gives_defaults(self, document):
        config = load_config(document(''))
        assert config == load_config(document('[settings]\n'))
        assert (config.tx_intensity, config.rx_intensity) == (3.0, 3.0)
        assert (config.catalog_size, config.cache_size) == (100, 10)
        assert (config.path_loss_exponent, config.sinr_threshold, config.noise_power) == (4.0, 0.01, 10.0)
        assert config.fading_rate == 1.0
        assert config.policies == ('random', 'matern', 'bidding_matern', 'bid_ordering')
        assert len(config.pa_grid) == 10

    def test_no_path_gives_defaults(self, document):
        assert load_config() == load_config(document(''))

    def test_full_cache_rejected(self, document):
        with pytest.raises(ConfigError, match='N_cache must be < M') as info:
            load_config(document('[settings]\ncache_size = 100\ncatalog_size = 100\n'))
        assert 'cache_size' in info.value.errors

    def test_negative_skew_rejected(self, document):
        with pytest.raises(ConfigError) as info:
            load_config(document('[settings]\nrequest_skew = -1\n'))
        assert 'request_skew' in info.value.errors

    @pytest.mark.parametrize('text, field', [
        ('path_loss_exponent = 2', 'path_loss_exponent'),
        ('x_max = -6', 'x_max'),
        ('range_mode = fixed', 'comm_radius'),
        ('pa_grid = 0.0:1.0:0.5', 'pa_grid'),
        ('range_mode = interference_limited', 'pa_grid'),
        ('policies = random, csma', 'policies'),
        ('boundary_mode = sphere', 'boundary_mode'),
        ('realizations = 0', 'realizations'),
        ('range_mode = fixed\ncomm_radius = 2\nnoise_power = 0', 'noise_power'),
        ('range_mode = interference_limited\npa_grid = 0.5\nnoise_power = 0', 'noise_power'),
    ])
    def test_field_errors(self, document, text, field):
        with pytest.raises(ConfigError) as info:
            load_config(document(f'[settings]\n{text}\n'))
        assert field in info.value.errors

    def test_zero_access_allowed_without_matern(self, document):
        config = load_config(document('[settings]\npolicies = random, bid_ordering\npa_grid = 0.0, 0.5\n'))
        assert config.pa_grid == (0.0, 0.5)

    def test_syntax_error_reports_line(self, document):
        with pytest.raises(ConfigError) as info:
            load_config(document('[settings]\nseed = 1\nthis line is broken\n'))
        assert info.value.line == 3

    def test_missing_section_header(self, document):
        with pytest.raises(ConfigError) as info:
            load_config(document('seed = 1\n'))
        assert info.value.line == 1

    def test_unknown_key(self, document):
        with pytest.raises(ConfigError) as info:
            load_config(document('[settings]\ncache_sise = 4\n'))
        assert 'cache_sise' in info.value.errors

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / 'absent.ini')

    def test_overrides_and_environment(self, document, monkeypatch):
        path = document('[settings]\nseed = 3\n')
        assert load_config(path).seed == 3
        monkeypatch.setenv('seed', '11')
        assert load_config(path).seed == 11
        assert load_config(path, {'seed': 12}).seed == 12

    def test_dump_round_trip(self, document, tmp_path):
        original = load_config(document(
            '[settings]\nboundary_mode = torus\ncomm_radius = 1.3\nrange_mode = fixed\n'
            'pa_grid = 0.1:0.7:0.3\npolicies = matern, random\nrequest_skew = 0.1\n'
        ))
        dump_config(original, tmp_path / 'dumped.ini')
        assert load_config(tmp_path / 'dumped.ini') == original

    def test_payload_round_trip(self):
        config = ExperimentConfig(contention_threshold=0.05, pa_grid=(0.25, 0.75))
        assert ExperimentConfig.from_dict(config.to_dict()) == config
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({'unknown': 1})


class TestReports:

    def _report(self):
        return MetricsReport([
            MetricsRow(policy, p, 0.1 * p, 0.01, 0.9, 2.5, p, 5)
            for policy in ('random', 'matern') for p in (0.5, 1.0)
        ])

    def test_header_and_rows(self, tmp_path):
        path = tmp_path / 'report.csv'
        write_report(self._report(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == ','.join(REPORT_HEADER)
        assert lines[1] == 'random,0.5,0.05,0.01,0.9,2.5,0.5,5'
        assert len(read_report(path)) == 4

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / 'report.csv'
        path.write_text('policy,p_A,mean_rate\nrandom,0.5,0.1\n')
        with pytest.raises(ReportFormatError):
            read_report(path)

    def test_rejects_bad_value(self, tmp_path):
        path = tmp_path / 'report.csv'
        path.write_text(','.join(REPORT_HEADER) + '\nrandom,half,0.1,0,1,1,1,5\n')
        with pytest.raises(ReportFormatError, match='line 2'):
            read_report(path)

    def test_plot_series(self, tmp_path):
        path = tmp_path / 'report.csv'
        write_report(self._report(), path)
        written = emit_plotdata(path, tmp_path / 'plots')
        assert set(written) == {'random', 'matern'}
        lines = written['matern'].read_text().splitlines()
        assert lines[0] == '# p_A mean_rate stderr'
        assert lines[1:] == ['0.5 0.05 0.01', '1.0 0.1 0.01']

    def test_empty_report(self, tmp_path):
        path = tmp_path / 'report.csv'
        write_report(MetricsReport(), path)
        assert emit_plotdata(path, tmp_path / 'plots') == {}
        assert not (tmp_path / 'plots').exists()

    def test_snapshot_round_trip(self, tmp_path):
        config = ExperimentConfig(x_min=-2, x_max=2, y_min=-2, y_max=2)
        dump = SnapshotDump.from_snapshot(build_snapshot(config, 0.5, 3), 'bidding_matern')
        write_snapshot(dump, tmp_path / 'one.snapshot')
        loaded = read_snapshot(tmp_path / 'one.snapshot')

        assert (loaded.policy, loaded.access_probability) == ('bidding_matern', 0.5)
        assert (loaded.comm_radius, loaded.exclusion_radius) == (dump.comm_radius, dump.exclusion_radius)
        assert loaded.policies == dump.policies
        assert loaded.caches == dump.caches
        for name in ('tx_coordinates', 'bids', 'marks', 'rx_coordinates', 'requests'):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(dump, name))
        for policy in dump.policies:
            np.testing.assert_array_equal(loaded.retained[policy], dump.retained[policy])

    def test_snapshot_rejects_garbage(self, tmp_path):
        path = tmp_path / 'bad.snapshot'
        path.write_text('TX 0 0.0\n')
        with pytest.raises(ReportFormatError):
            read_snapshot(path)


class TestRunSweepCommand:

    def test_writes_full_grid(self, document, tmp_path):
        out = tmp_path / 'report.csv'
        output = run('run_sweep', '--config', str(document(TINY)), '--out', str(out))
        assert 'Wrote 40 rows' in output
        report = read_report(out)
        assert len(report) == 40
        assert report.policies() == ['random', 'matern', 'bidding_matern', 'bid_ordering']

    def test_byte_identical_rerun(self, document, tmp_path):
        path = document(TINY)
        run('run_sweep', '--config', str(path), '--out', str(tmp_path / 'a.csv'), '--pa-grid', '0.5,1.0')
        run('run_sweep', '--config', str(path), '--out', str(tmp_path / 'b.csv'), '--pa-grid', '0.5,1.0')
        assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()

    def test_seed_changes_output(self, document, tmp_path):
        path = document(TINY)
        run('run_sweep', '--config', str(path), '--out', str(tmp_path / 'a.csv'), '--pa-grid', '0.5', '--seed', '1')
        run('run_sweep', '--config', str(path), '--out', str(tmp_path / 'b.csv'), '--pa-grid', '0.5', '--seed', '2')
        assert (tmp_path / 'a.csv').read_bytes() != (tmp_path / 'b.csv').read_bytes()

    def test_snapshots(self, document, tmp_path):
        out = tmp_path / 'report.csv'
        run('run_sweep', '--config', str(document(TINY)), '--out', str(out),
            '--policies', 'random,bidding_matern', '--pa-grid', '0.4,0.8', '--snapshot')
        for policy in ('random', 'bidding_matern'):
            dump = read_snapshot(tmp_path / f'report.{policy}.snapshot')
            assert dump.policy == policy
            assert dump.access_probability == 0.4
            assert dump.policies == ('random', 'bidding_matern')

    def test_config_error_exit_code(self, document, tmp_path):
        with pytest.raises(CommandError) as info:
            run('run_sweep', '--config', str(document('[settings]\ncache_size = 200\n')),
                '--out', str(tmp_path / 'r.csv'))
        assert info.value.returncode == 1

    def test_bad_override_exit_code(self, document, tmp_path):
        with pytest.raises(CommandError) as info:
            run('run_sweep', '--config', str(document(TINY)), '--out', str(tmp_path / 'r.csv'),
                '--policies', 'matern', '--pa-grid', '0:1:0.5')
        assert info.value.returncode == 1

    def test_repeated_access_value_exit_code(self, document, tmp_path):
        with pytest.raises(CommandError) as info:
            run('run_sweep', '--config', str(document(TINY)), '--out', str(tmp_path / 'r.csv'),
                '--pa-grid', '0.2,0.2')
        assert info.value.returncode == 1
        assert 'pa_grid' in str(info.value)

    def test_io_error_exit_code(self, document, tmp_path):
        with pytest.raises(CommandError) as info:
            run('run_sweep', '--config', str(document(TINY)), '--out', str(tmp_path), '--pa-grid', '0.5')
        assert info.value.returncode == 2


class TestEmitPlotdataCommand:

    def test_series_per_policy(self, document, tmp_path):
        out = tmp_path / 'report.csv'
        run('run_sweep', '--config', str(document(TINY)), '--out', str(out))
        run('emit_plotdata', str(out), '--out-dir', str(tmp_path / 'plots'))
        files = sorted(p.name for p in (tmp_path / 'plots').iterdir())
        assert files == ['bid_ordering.dat', 'bidding_matern.dat', 'matern.dat', 'random.dat']
        for name in files:
            lines = (tmp_path / 'plots' / name).read_text().splitlines()
            assert len(lines) == 11
            p_a, rate, stderr = (float(v) for v in lines[-1].split())
            assert p_a == 1.0 and rate >= 0 and not math.isnan(stderr)

    def test_empty_report(self, tmp_path):
        path = tmp_path / 'report.csv'
        write_report(MetricsReport(), path)
        assert 'nothing written' in run('emit_plotdata', str(path), '--out-dir', str(tmp_path / 'plots'))

    def test_malformed_report(self, tmp_path):
        path = tmp_path / 'report.csv'
        path.write_text('not,a,report\n')
        with pytest.raises(CommandError) as info:
            run('emit_plotdata', str(path), '--out-dir', str(tmp_path))
        assert info.value.returncode == 1
