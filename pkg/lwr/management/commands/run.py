"""
Management command to run a scenario file and write its outputs.
"""
import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from lwr.exceptions import TrackingError
from lwr.runner import execute
from lwr.scenario import load_scenario
from lwr.utils import describe_error

logger = logging.getLogger('lwr')


class Command(BaseCommand):
    help = 'Run a scenario (JSON or YAML) and write fronts, xi, profiles, events and check reports'

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='Path to the scenario file')
        parser.add_argument(
            '--out',
            help='Output directory (default: a directory under OUTPUT_ROOT named after the scenario)',
        )
        parser.add_argument(
            '--no-svg',
            action='store_true',
            help='Skip the SVG figures',
        )
        parser.add_argument(
            '--no-store',
            action='store_true',
            help='Do not store a run record',
        )

    def handle(self, *args, **options):
        try:
            scenario = load_scenario(options['scenario'])
            result = execute(
                scenario,
                output_dir=options.get('out'),
                store=not options.get('no_store', False),
                svg=False if options.get('no_svg') else None,
            )
        except OSError as e:
            raise CommandError(f"Cannot read scenario: {e}")
        except ValidationError as e:
            raise CommandError(describe_error(e))
        except TrackingError as e:
            raise CommandError(f"Front tracking failed: {e}")

        for report in result.reports:
            if report.passed:
                self.stdout.write(f'  {report.check}: ok ({report.checked} items)')
            else:
                self.stdout.write(self.style.ERROR(
                    f'  {report.check}: {len(report.context)} violations, worst {report.worst_violation:.3e}'))
        self.stdout.write(f'Wrote {len(result.files)} files to {result.output_dir}')
        if result.passed:
            self.stdout.write(self.style.SUCCESS('✓ All checks passed'))
        else:
            self.stdout.write(self.style.WARNING('⚠ Some checks failed, see reports.json'))
