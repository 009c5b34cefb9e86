"""
Golden reproduction of the worked convergence examples.

Each row records one check on one fixture: what the example predicts, what
the numeric verifier observed, and whether the two agree.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from piecewise.fixtures import FIXTURES, load_fixture
from piecewise.limits import verify_sup_sandwich
from piecewise.restraint import check_restrained_bound, check_sum_condition

logger = logging.getLogger(__name__)

RESTRAINED = ('basic', 'all3_res_left', 'mid_bdd')
# smallest violation that counts as the expected failure
FAILURE_MARGINS = {'bad_converge': 0.5, 'bad_converge_weak': 0.9, 'symdiff4': 1.0}
SANDWICH_VALUES = {'basic': (1.0, 1.0, 1.0), 'mid_bdd': (0.0, 0.5, 1.0)}
SANDWICH_ATOL = 1e-3
SPIKE_NS = (25, 100, 400)
SPIKE_HEIGHT = 4 / 3
SPIKE_ATOL = 1e-2
SPIKE_SAMPLES = 4001


@dataclass(frozen=True)
class ExampleRow:
    fixture: str
    check: str
    expected: str
    observed: str
    passed: bool
    values: dict = field(default_factory=dict)


def _restraint_row(name, fixture, schedule, workers):
    report = check_restrained_bound(fixture.family, fixture.limit, schedule, side='both', workers=workers)
    values = {'worst_violation': report.worst_violation, 'tolerance': report.tolerance}
    if report.witness is not None:
        values['witness_point'] = list(report.witness.point)
        values['witness_piece'] = report.witness.label
    observed = 'pass' if report.passed else f"fail by {report.worst_violation:.4g}"
    if name in RESTRAINED:
        return ExampleRow(name, 'restraint', 'pass', observed, report.passed, values)
    margin = FAILURE_MARGINS.get(name, 0.0)
    passed = not report.passed and report.worst_violation > margin
    return ExampleRow(name, 'restraint', f"fail by more than {margin:g}", observed, passed, values)


def _sandwich_row(name, fixture):
    result = verify_sup_sandwich(fixture.family, fixture.limit, fixture.sets,
                                 fixture.sandwich_ladder, fixture.anchors)
    values = {'lower': result.lower, 'middle': result.middle, 'upper': result.upper, 'n': result.n}
    if result.lower_ok and result.upper_ok:
        observed = 'pass'
    else:
        observed = 'upper side fails' if result.lower_ok else 'lower side fails'
    expected = 'pass' if name in RESTRAINED else 'upper side fails'
    passed = observed == expected
    if name in SANDWICH_VALUES:
        target = SANDWICH_VALUES[name]
        expected += ' with values ' + ', '.join(f"{v:g}" for v in target)
        passed = passed and bool(np.allclose(result.values, target, atol=SANDWICH_ATOL))
    return ExampleRow(name, 'sandwich', expected, observed, passed, values)


def spike_height(family, n, samples=SPIKE_SAMPLES):
    """``sup |f_n|`` over ``[0, 2 / sqrt(n)]`` on an even sampling of the interval."""
    s = np.linspace(0.0, 2 / math.sqrt(n), samples)
    return float(np.abs(family.values(n, s[:, None])).max())


def _spike_row(name, fixture):
    heights = {str(n): spike_height(fixture.family, n) for n in SPIKE_NS}
    values = list(heights.values())
    spread = max(values) - min(values)
    passed = spread < SPIKE_ATOL and min(values) > 1 and abs(values[0] - SPIKE_HEIGHT) < SPIKE_ATOL
    observed = f"{heights['100']:.4f} (spread {spread:.2g})"
    return ExampleRow(name, 'spike', '4/3 for every n, above 1', observed, passed, heights)


def _sum_condition_row(name, fixture):
    first, second = fixture.extras['sum_fields']
    result = check_sum_condition(first, second)
    points = sorted({point for point, _, _ in result.violations})
    at_zero = any(abs(p[0]) <= fixture.grid.max_spacing for p in points)
    observed = 'holds' if result.holds else f"fails at {len(points)} points"
    values = {'violation_points': [list(p) for p in points]}
    return ExampleRow(name, 'sum_condition', 'fails at s = 0', observed, not result.holds and at_zero, values)


def reproduce_examples(fixture_ids=None, ladders=None, workers=None):
    """Rows of golden checks for ``fixture_ids`` (all built-ins by default).

    ``ladders`` optionally maps a fixture id to the ``(n_ladder, delta_ladder)``
    schedule of its restraint check.
    """
    ids = list(FIXTURES) if fixture_ids is None else list(fixture_ids)
    fixtures = {name: load_fixture(name) for name in ids}
    ladders = ladders or {}
    rows = []
    for name, fixture in fixtures.items():
        rows.append(_restraint_row(name, fixture, ladders.get(name), workers))
        if fixture.sets:
            rows.append(_sandwich_row(name, fixture))
        if name == 'symdiff4':
            rows.append(_spike_row(name, fixture))
            rows.append(_sum_condition_row(name, fixture))
    failed = [f"{row.fixture}/{row.check}" for row in rows if not row.passed]
    logger.info('Reproduced %d example checks, %d disagree%s', len(rows), len(failed),
                f": {', '.join(failed)}" if failed else '')
    return rows
