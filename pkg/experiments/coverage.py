"""
Monte Carlo coverage of the confidence regions.

Repetition ``r`` samples from a seed derived from ``(seed, r)`` and runs its
bootstrap from a seed derived from that one, so a report depends only on
its arguments, never on the worker count or on execution order.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from core.exceptions import BadR
from core.parallel import ordered_map
from core.rng import BOOTSTRAP, REPETITION, derive_seed
from regions.applications import check_alpha
from regions.symdiff import confinement_fields
from .scenarios import get_scenario

logger = logging.getLogger(__name__)

CI_LEVEL = 0.95
# Tube constant for the n = 200 scenarios. With c = 1 the tube keeps boundary
# points whose field is far from zero, and coverage sits a few points above 1 - alpha.
CALIBRATED_ETA_C = 0.5


@dataclass(frozen=True)
class CoverageReport:
    scenario: str
    application: str
    alpha: float
    n: int
    B: int
    R: int
    hits: int
    seed: int
    q_mean: float
    ci_lo: float
    ci_hi: float
    runtime: float = field(default=0.0, compare=False)

    @property
    def coverage(self):
        return self.hits / self.R

    @property
    def wilson_ci(self):
        return (self.ci_lo, self.ci_hi)


def wilson_interval(hits, R, level=CI_LEVEL):
    interval = stats.binomtest(int(hits), int(R)).proportion_ci(confidence_level=level, method='wilson')
    return float(interval.low), float(interval.high)


def _repetition(scenario, alpha, boot, seed, truth, r):
    rep_seed = derive_seed(seed, REPETITION, r)
    samples = scenario.draw(rep_seed)
    rep_boot = replace(boot, seed=derive_seed(rep_seed, BOOTSTRAP), workers=1)
    regions, geometry = scenario.construct(samples, alpha, rep_boot)
    if geometry is not None:
        confinement_fields(samples[0], samples[1], geometry, scenario.truth_fields(), check=True)
    lower_truth, upper_truth = truth
    return regions.is_included(lower_truth, upper_truth), regions.q


def run_coverage(scenario, alpha, R, boot, seed=0, workers=None):
    """Fraction of ``R`` repetitions whose regions sit inside the truth sets.

    Symmetric-difference repetitions also verify the confinement ordering at
    every grid point and raise ConfinementViolation on a breach.
    """
    scenario = get_scenario(scenario)
    alpha = check_alpha(alpha)
    if int(R) != R or R < 1:
        raise BadR(f"Repetition count must be a positive integer, got {R}.")
    R = int(R)
    truth = scenario.truth_sets()
    started = time.perf_counter()

    outcomes = ordered_map(
        lambda r: _repetition(scenario, alpha, boot, seed, truth, r),
        range(R),
        workers=workers if workers is not None else boot.workers,
    )
    hits = sum(1 for included, _ in outcomes if included)
    qs = np.array([q for _, q in outcomes], dtype=float)
    q_mean = float(qs.mean()) if np.isfinite(qs).all() else math.inf
    ci_lo, ci_hi = wilson_interval(hits, R)
    report = CoverageReport(
        scenario=scenario.id,
        application=scenario.application,
        alpha=alpha,
        n=scenario.n,
        B=boot.B,
        R=R,
        hits=hits,
        seed=int(seed),
        q_mean=q_mean,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        runtime=time.perf_counter() - started,
    )
    logger.info('Coverage of %s at alpha=%.3g: %d/%d = %.4f [%.4f, %.4f]',
                scenario.id, alpha, hits, R, report.coverage, ci_lo, ci_hi)
    return report
