"""
Management command to classify Riemann data over a grid of [0, R]^2.
"""
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from lwr.emitters import write_region_map
from lwr.region_map import region_map
from lwr.scenario import load_scenario
from lwr.utils import describe_error, run_directory


class Command(BaseCommand):
    help = 'Write the region map (case label of every (rho_l, rho_r) grid point) of a scenario; also available as region-map'

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='Path to the scenario file')
        parser.add_argument('--grid', type=int, help='Points per axis (default: the scenario outputs.grid)')
        parser.add_argument('--workers', type=int, help='Worker processes over grid rows')
        parser.add_argument('--out', help='Output directory')

    def handle(self, *args, **options):
        try:
            scenario = load_scenario(options['scenario'])
            flux, _, constraint, _ = scenario.build()
            grid = options.get('grid') or scenario.outputs['grid']
            workers = options.get('workers') or scenario.outputs.get('workers', 1)
            region = region_map(flux, constraint, grid, workers=workers)
        except OSError as e:
            raise CommandError(f"Cannot read scenario: {e}")
        except ValidationError as e:
            raise CommandError(describe_error(e))

        directory = options.get('out') or run_directory(scenario.name, scenario.digest)
        files = write_region_map(directory, region)
        for label, count in region.counts().items():
            self.stdout.write(f'  {label}: {count}')
        self.stdout.write(self.style.SUCCESS(f'✓ Wrote {", ".join(files)} to {directory}'))
