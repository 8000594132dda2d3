"""
Localized L1 stability with respect to the initial datum.
"""
import logging
import math
from dataclasses import asdict, dataclass

from django.core.exceptions import ValidationError

from .. import split_engine
from ..profile import l1_distance

logger = logging.getLogger('lwr')

RELATIVE_SLACK = 1e-6


@dataclass(frozen=True)
class StabilityReport:
    T: float
    L: float
    M: float
    C: float
    lhs: float
    rhs: float
    initial_distance: float

    @property
    def passed(self):
        return self.lhs <= self.rhs * (1.0 + RELATIVE_SLACK)

    def as_dict(self):
        data = asdict(self)
        data['pass'] = self.passed
        return data


def stability_pair(rho0, rho0_tilde, flux, w, p, cfg, L):
    """
    Run two splitting solutions from different data and compare

        ||rho(T) - rho~(T)||_{L1[-L, L]}  against  e^{CT} ||rho_0 - rho~_0||_{L1[-(L+MT), L+MT]}

    with M = Lip(f) and C = 2 Lip(p) w(0-). The right side uses the data
    after quantization to M^n, which is what both runs evolve.

    Raises:
        ValidationError: If L does not exceed the weight support i_w
    """
    if not L > w.i_w:
        raise ValidationError('The window half-width L must exceed i_w', code='stability_window',
                              params={'L': L})
    first = split_engine.run_splitting(rho0, flux, w, p, cfg)
    second = split_engine.run_splitting(rho0_tilde, flux, w, p, cfg)
    M = flux.lip
    C = 2.0 * p.lip * w.w_at_zero
    T = cfg.T
    wide = L + M * T
    initial = l1_distance(first.initial_profile, second.initial_profile, -wide, wide)
    report = StabilityReport(
        T=T,
        L=float(L),
        M=M,
        C=C,
        lhs=l1_distance(first.final_profile, second.final_profile, -L, L),
        rhs=math.exp(C * T) * initial,
        initial_distance=initial,
    )
    log = logger.info if report.passed else logger.warning
    log(f"Stability pair on [-{L}, {L}]: lhs={report.lhs!r} rhs={report.rhs!r} pass={report.passed}")
    return report
