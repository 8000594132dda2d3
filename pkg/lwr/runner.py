"""
Scenario execution shared by the management commands.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

from .emitters import write_run
from .exact_engine import evacuation_time, run_exact
from .monitor import run_checks
from .scenario import SPLIT
from .split_engine import build_split_config, run_splitting
from .storage import RunStorage
from .utils import run_directory

logger = logging.getLogger('lwr')

DEFAULT_N_FAN = 10


@dataclass
class RunResult:
    trajectory: object
    reports: list
    output_dir: str
    files: list = field(default_factory=list)
    record: Optional[object] = None

    @property
    def passed(self):
        return all(report.passed for report in self.reports)


def simulate(scenario):
    """Run the scenario's engine; returns the Trajectory."""
    flux, weight, constraint, initial = scenario.build()
    params = scenario.parameters
    profile_times = [float(t) for t in scenario.outputs.get('profile_times', [])]
    if scenario.engine == SPLIT:
        cfg = build_split_config(params['n'], params['h'], scenario.T, weight, constraint,
                                 dt_scale=params.get('dt_scale', 1.0))
        traj = run_splitting(initial, flux, weight, constraint, cfg, profile_times)
        traj.milestones['evacuation'] = evacuation_time(traj).as_dict()
    else:
        traj = run_exact(
            initial, flux, weight, constraint,
            policy=scenario.policy,
            n_fan=params.get('n_fan', DEFAULT_N_FAN),
            T=scenario.T,
            sample_dt=params.get('sample_dt'),
            profile_times=profile_times,
        )
    return traj


def execute(scenario, output_dir=None, store=True, svg=None):
    """
    Run a scenario, check the trajectory, write its files and store a record.

    Raises:
        ValidationError: If the scenario is rejected by an engine
        TrackingError: If the tracker fails internally
    """
    logger.info(f"Running scenario {scenario.name} ({scenario.engine}, sha256 {scenario.digest[:12]})")
    traj = simulate(scenario)
    reports = run_checks(traj)
    output_dir = output_dir or run_directory(scenario.name, scenario.digest)
    svg = scenario.outputs.get('svg', True) if svg is None else svg
    files = write_run(output_dir, scenario, traj, reports, svg=svg)
    result = RunResult(trajectory=traj, reports=reports, output_dir=output_dir, files=files)
    if store:
        result.record = RunStorage().record_run(scenario, traj, reports, output_dir)
    return result
