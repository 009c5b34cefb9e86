"""
Grid diagnostics for the conditions under which coverage is exact.

The closure condition asks, for every piece ``V`` of the truth partition,
that ``cl(Z ∩ V) = Z ∩ cl(V)`` where ``Z`` is the zero set of the target.
On the grid ``Z`` is the set of exact zeros plus the closer end of every
strict sign change between axis neighbours, and closures are one-cell
dilations intersected back with ``Z``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from core.rng import CONDITIONS, derive_seed
from domain.grid import GridSet, grid_closure
from piecewise.fields import PartitionLabeling
from regions.applications import BootstrapConfig, active_partition
from regions.boundaries import sign_partition
from regions.symdiff import confinement_fields, scaled_errors
from .scenarios import get_scenario

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.1


@dataclass(frozen=True)
class ConditionReport:
    scenario: str
    closure_passed: bool
    pieces: dict
    witnesses: list
    zero_set_size: int
    q: float
    ties_at_q: int
    atom_free: bool
    n_set_size: int = None
    confinement_gap: float = None
    details: dict = field(default_factory=dict)


def discrete_zero_set(mu):
    grid = mu.grid
    values = mu.values.reshape(grid.shape)
    zero = values == 0
    magnitude = np.abs(values)
    for axis in range(grid.dimension):
        head = tuple(slice(None, -1) if a == axis else slice(None) for a in range(grid.dimension))
        tail = tuple(slice(1, None) if a == axis else slice(None) for a in range(grid.dimension))
        with np.errstate(invalid='ignore'):
            change = values[head] * values[tail] < 0
        zero[head] |= change & (magnitude[head] <= magnitude[tail])
        zero[tail] |= change & (magnitude[tail] <= magnitude[head])
    return GridSet(grid, zero.ravel())


def truth_partition(scenario):
    fields = scenario.truth_fields()
    if scenario.application == 'absolute':
        # |gamma| is continuous: one piece
        return PartitionLabeling.single(scenario.grid)
    if scenario.application == 'symdiff':
        return sign_partition(fields)
    return active_partition(fields, 0.0, scenario.mode)


def closure_condition(zero_set, partition):
    """Per-piece verdicts and the points where the two sides differ."""
    verdicts, witnesses = {}, GridSet.empty(zero_set.grid)
    for key, piece in partition.pieces().items():
        if piece.is_empty():
            continue
        inner = zero_set & grid_closure(zero_set & piece)
        outer = zero_set & grid_closure(piece)
        differ = (inner - outer) | (outer - inner)
        verdicts[str(key)] = differ.is_empty()
        witnesses = witnesses | differ
    return verdicts, witnesses


def check_conditions(scenario, alpha=DEFAULT_ALPHA, boot=None, seed=0):
    """Closure condition on the truth, plus empirical diagnostics on one simulated sample.

    The sample gives the quantile's tie count (more than one value at ``q``
    means the statistic has an atom there) and, for the symmetric
    difference, the size of the estimated set ``N`` and the largest gap
    between the confinement upper field and the scaled error.
    """
    scenario = get_scenario(scenario)
    mu = scenario.truth_target()
    zero_set = discrete_zero_set(mu)
    verdicts, witnesses = closure_condition(zero_set, truth_partition(scenario))

    sample_seed = derive_seed(seed, CONDITIONS)
    boot = boot or BootstrapConfig(seed=derive_seed(sample_seed, CONDITIONS))
    samples = scenario.draw(sample_seed)
    regions, geometry = scenario.construct(samples, alpha, boot)
    ties = int(regions.diagnostics.get('ties_at_q', 0))
    n_set_size = gap = None
    if geometry is not None:
        truth = scenario.truth_fields()
        h, _, _ = scaled_errors(samples[0], samples[1], truth)
        _, upper = confinement_fields(samples[0], samples[1], geometry, truth)
        n_set_size = geometry.n_set.count()
        gap = float(np.max(upper.values - h.values))

    report = ConditionReport(
        scenario=scenario.id,
        closure_passed=all(verdicts.values()),
        pieces=verdicts,
        witnesses=[tuple(float(c) for c in point) for point in witnesses.points()],
        zero_set_size=zero_set.count(),
        q=regions.q,
        ties_at_q=ties,
        atom_free=ties <= 1,
        n_set_size=n_set_size,
        confinement_gap=gap,
        details={'fallback': bool(regions.diagnostics.get('fallback', False)), 'B': boot.B, 'alpha': alpha},
    )
    logger.info('Conditions for %s: closure %s (%d witnesses), ties at q=%d',
                scenario.id, 'holds' if report.closure_passed else 'fails', len(report.witnesses), ties)
    return report
