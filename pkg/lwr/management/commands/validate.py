"""
Management command to re-check a written trajectory directory.
"""
import json
import logging
import os

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from lwr.emitters import load_trajectory
from lwr.monitor import check_profile_mass, validate_entropy
from lwr.storage import RunStorage
from lwr.utils import describe_error, jsonable

logger = logging.getLogger('lwr')


class Command(BaseCommand):
    help = 'Validate the fronts of a trajectory directory (Rankine-Hugoniot, admissibility, mass)'

    def add_arguments(self, parser):
        parser.add_argument('directory', help='Directory written by `run` or `sec5`')

    def handle(self, *args, **options):
        directory = options['directory']
        try:
            traj = load_trajectory(directory)
        except (OSError, KeyError, ValueError) as e:
            raise CommandError(f"Cannot load trajectory from {directory}: {e}")
        except ValidationError as e:
            raise CommandError(describe_error(e))

        times = sorted({t for t, _, _ in traj.xi_trace.rows()} | {traj.T})
        reports = [validate_entropy(traj), check_profile_mass(traj, times)]
        result = {
            'passed': all(r.passed for r in reports),
            'fronts': len(traj.segments),
            'reports': [r.as_dict() for r in reports],
        }
        with open(os.path.join(directory, 'validation.json'), 'w', encoding='utf-8', newline='\n') as handle:
            json.dump(jsonable(result), handle, indent=2, sort_keys=True)
            handle.write('\n')
        RunStorage().attach_validation(directory, jsonable(result))

        for report in reports:
            line = f'  {report.check}: {report.checked} items'
            if report.passed:
                self.stdout.write(line + ', ok')
            else:
                self.stdout.write(self.style.ERROR(line + f', {len(report.context)} violations'))
        if not result['passed']:
            raise CommandError(f"Validation failed for {directory}")
        self.stdout.write(self.style.SUCCESS(f'✓ {len(traj.segments)} fronts validated'))
