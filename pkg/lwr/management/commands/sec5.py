"""
Management command to run the corridor evacuation and compare its
milestones with their reference values.
"""
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from lwr.exceptions import TrackingError
from lwr.riemann import POLICIES, RQ
from lwr.runner import execute
from lwr.scenario import SEC5_REFERENCE, compare_sec5, sec5_scenario
from lwr.utils import describe_error


class Command(BaseCommand):
    help = 'Run the corridor evacuation scenario and print its milestones next to the reference values'

    def add_arguments(self, parser):
        parser.add_argument('--n-fan', type=int, default=12, help='Fan mesh refinement (default: 12)')
        parser.add_argument('--policy', choices=POLICIES, default=RQ, help='Local solver policy at x = 0')
        parser.add_argument(
            '--sweep',
            type=int,
            nargs='+',
            metavar='N_FAN',
            help='Also run these fan refinements and report the evacuation time error of each',
        )
        parser.add_argument('--out', help='Output directory for the main run')
        parser.add_argument('--no-svg', action='store_true', help='Skip the SVG figures')

    def handle(self, *args, **options):
        try:
            scenario = sec5_scenario(n_fan=options['n_fan'], policy=options['policy'])
            result = execute(scenario, output_dir=options.get('out'),
                             svg=False if options.get('no_svg') else None)
        except ValidationError as e:
            raise CommandError(describe_error(e))
        except TrackingError as e:
            raise CommandError(f"Front tracking failed: {e}")

        rows, ordered = compare_sec5(result.trajectory)
        self.stdout.write(f'Corridor evacuation, n_fan={options["n_fan"]}, policy={options["policy"]}')
        self.stdout.write(f'  {"milestone":<10}{"computed":>14}{"reference":>14}{"rel. error":>14}')
        for name, value, reference, error in rows:
            computed = '-' if value is None else f'{value:.6g}'
            rel = '-' if error is None else f'{error:.2e}'
            self.stdout.write(f'  {name:<10}{computed:>14}{reference:>14.6g}{rel:>14}')
        if not ordered:
            self.stdout.write(self.style.WARNING('⚠ Milestones are not in the expected narrative order'))

        if options.get('sweep'):
            self._sweep(options['sweep'], options['policy'])

        self.stdout.write(f'Outputs in {result.output_dir}')
        if result.passed:
            self.stdout.write(self.style.SUCCESS('✓ All checks passed'))
        else:
            self.stdout.write(self.style.WARNING('⚠ Some checks failed, see reports.json'))

    def _sweep(self, refinements, policy):
        reference = SEC5_REFERENCE['t_I']
        errors = []
        self.stdout.write('\nEvacuation time against fan refinement:')
        for n_fan in refinements:
            try:
                result = execute(sec5_scenario(n_fan=n_fan, policy=policy), svg=False)
            except (ValidationError, TrackingError) as e:
                raise CommandError(f"n_fan={n_fan}: {describe_error(e)}")
            evacuation = result.trajectory.milestones['evacuation']
            error = abs(evacuation['time'] - reference) if evacuation['evacuated'] else None
            errors.append(error)
            shown = '-' if error is None else f'{error:.3e}'
            self.stdout.write(f'  n_fan={n_fan:<4} |t_I - {reference}| = {shown}')
        if None not in errors and all(b <= a for a, b in zip(errors, errors[1:])):
            self.stdout.write(self.style.SUCCESS('✓ Error decreases monotonically with refinement'))
        else:
            self.stdout.write(self.style.WARNING('⚠ Error does not decrease monotonically'))
