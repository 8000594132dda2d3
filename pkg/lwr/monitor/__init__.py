"""
Post-hoc checks of trajectories against the a priori estimates.
"""
from .checks import (  # noqa: F401
    CheckReport,
    check_efficiency_jumps,
    check_mass,
    check_profile_mass,
    check_q_functional,
    check_temple_monotone,
    check_traces,
    check_tv_bound,
    front_problems,
    run_checks,
    validate_entropy,
)
from .functional import TempleRecord, classify_interaction, classify_update, expected_delta, temple  # noqa: F401
from .stability import StabilityReport, stability_pair  # noqa: F401
