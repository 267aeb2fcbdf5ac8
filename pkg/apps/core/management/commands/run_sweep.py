# apps/core/management/commands/run_sweep.py
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import ConfigError
from apps.core.loaders import load_config
from apps.core.reports import SnapshotDump, write_report, write_snapshot
from apps.evaluation.experiment import cell_seeds, sweep
from apps.evaluation.metrics import compare_policies
from apps.evaluation.simulation import build_snapshot
from apps.scheduling.policies import Policy

logger = logging.getLogger(__name__)

CHALLENGER = Policy.BIDDING_MATERN.value
BASELINES = (Policy.RANDOM.value, Policy.MATERN.value)


class Command(BaseCommand):
    help = 'Run a MAP sweep over the configured policies and write the metrics report as CSV'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Experiment document ([settings] INI file)')
        parser.add_argument('--out', default='report.csv', help='Report CSV path')
        parser.add_argument('--seed', type=int, help='Master seed override')
        parser.add_argument('--snapshot', action='store_true',
                            help='Also dump the first realization of every policy')
        parser.add_argument('--policies', help='Comma separated policy list override')
        parser.add_argument('--pa-grid', dest='pa_grid', help='start:stop:step or comma list override')
        parser.add_argument('--realizations', type=int, help='Realizations per cell override')

    def _overrides(self, options):
        overrides = {}
        if options.get('seed') is not None:
            overrides['seed'] = options['seed']
        if options.get('policies'):
            overrides['policies'] = [p.strip() for p in options['policies'].split(',') if p.strip()]
        if options.get('pa_grid'):
            overrides['pa_grid'] = options['pa_grid']
        if options.get('realizations') is not None:
            overrides['realizations'] = options['realizations']
        return overrides

    def handle(self, *args, **options):
        try:
            config = load_config(options.get('config'), self._overrides(options))
        except ConfigError as e:
            logger.error(f"Configuration rejected: {str(e)}")
            raise CommandError(str(e), returncode=1)

        out = Path(options['out'])
        self.stdout.write(
            f"Sweeping {len(config.policies)} policies x {len(config.pa_grid)} p_A values, "
            f"{config.realizations} realizations each..."
        )
        try:
            report = sweep(config)
            write_report(report, out)
            if options.get('snapshot'):
                self._write_snapshots(config, out)
        except (OSError, ValueError, ArithmeticError) as e:
            logger.error(f"Sweep failed: {str(e)}")
            raise CommandError(f"Sweep failed: {str(e)}", returncode=2)

        for baseline in BASELINES:
            for comparison in compare_policies(report, baseline, CHALLENGER):
                gain = 'n/a' if comparison.relative_gain is None else f"{comparison.relative_gain:+.1%}"
                logger.info(
                    f"{CHALLENGER} vs {baseline} at p_A={comparison.access_probability}: "
                    f"gap {comparison.gap:+.5f} ({comparison.z_score:+.1f} SE), relative gain {gain}"
                )

        self.stdout.write(self.style.SUCCESS(f'✅ Wrote {len(report)} rows to {out}'))

    def _write_snapshots(self, config, out):
        first = config.pa_grid[0]
        seeds = cell_seeds(config.seed, config.policies, config.pa_grid)
        for policy in config.policies:
            snapshot = build_snapshot(config, first, seeds[(policy, first)])
            path = out.with_name(f"{out.stem}.{policy}.snapshot")
            write_snapshot(SnapshotDump.from_snapshot(snapshot, policy), path)
            self.stdout.write(f'Snapshot for {policy} written to {path}')
