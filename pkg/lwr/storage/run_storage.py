"""
Run storage layer - one RunRecord per engine run.
"""
import logging
import os

from django.db import transaction

from lwr.models import RunRecord

logger = logging.getLogger('lwr')


class RunStorage:
    """Handles RunRecord operations."""

    def record_run(self, scenario, traj, reports, output_dir):
        """Store a finished run; returns the saved RunRecord."""
        evacuation = traj.milestones.get('evacuation') or {}
        evac_time = evacuation.get('time') if evacuation.get('evacuated') else None
        checks = [{'check': r.check, 'pass': r.passed, 'worst_violation': r.worst_violation} for r in reports]
        try:
            with transaction.atomic():
                record = RunRecord.objects.create(
                    scenario_name=scenario.name,
                    scenario_sha256=scenario.digest,
                    engine=scenario.engine,
                    policy=scenario.parameters.get('policy', '') if scenario.engine == 'exact' else '',
                    parameters=scenario.parameters,
                    event_count=int(traj.milestones.get('events', 0)),
                    evacuation_time=evac_time,
                    checks_passed=all(r.passed for r in reports),
                    checks=checks,
                    output_dir=os.path.abspath(output_dir),
                )
        except Exception as e:
            logger.error(f"Error storing run record for {scenario.name}: {e}")
            raise
        logger.info(f"Stored run record {record.pk} for {scenario.name}")
        return record

    def find_by_output_dir(self, output_dir):
        return RunRecord.objects.filter(output_dir=os.path.abspath(output_dir)).first()

    def attach_validation(self, output_dir, result):
        """Attach a validation result to the latest record of an output directory, if any."""
        with transaction.atomic():
            record = (RunRecord.objects.select_for_update()
                      .filter(output_dir=os.path.abspath(output_dir)).first())
            if record is None:
                logger.info(f"No run record for {output_dir}; validation not stored")
                return None
            record.validation = result
            record.save(update_fields=['validation', 'updated'])
        return record

    def recent(self, limit=20):
        return list(RunRecord.objects.all()[:limit])
