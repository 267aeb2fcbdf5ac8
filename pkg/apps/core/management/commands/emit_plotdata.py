# apps/core/management/commands/emit_plotdata.py
import logging

from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import ReportFormatError
from apps.core.reports import emit_plotdata

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Split a sweep report into one p_A / mean_rate / stderr series file per policy'

    def add_arguments(self, parser):
        parser.add_argument('report', help='Report CSV written by run_sweep')
        parser.add_argument('--out-dir', dest='out_dir', default='.', help='Directory for <policy>.dat files')

    def handle(self, *args, **options):
        try:
            written = emit_plotdata(options['report'], options['out_dir'])
        except ReportFormatError as e:
            logger.error(f"Malformed report: {str(e)}")
            raise CommandError(str(e), returncode=1)
        except OSError as e:
            logger.error(f"Cannot emit plot data: {str(e)}")
            raise CommandError(str(e), returncode=2)

        if not written:
            self.stdout.write(self.style.WARNING('Report is empty, nothing written'))
            return
        for policy, path in written.items():
            self.stdout.write(f'{policy}: {path}')
        self.stdout.write(self.style.SUCCESS(f'✅ Wrote {len(written)} series'))
