"""
Built-in function families with known limits.

Each fixture bundles a closed-form family ``f_n``, its piecewise limit, and,
where the textbook example uses one, a sequence of sets ``A_1..A_N`` with the
exact off-grid points of each set that matter for ``sup_{A_n} f_n``.

Unit-interval fixtures use 1001 points and read the sandwich middle value at
n = 512. A 4001-point grid with n up to 2**14 moves the sandwich values by
less than 1e-3. Every builder takes ``points``, and ``mid_bdd`` also takes the
sequence length, for running at that size.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import UnknownFixture
from domain.grid import GridSet, ScalarField, build_grid, evaluate, grid_closure, symdiff_values
from .fields import FunctionFamily, PartitionLabeling, PiecewiseField

logger = logging.getLogger(__name__)

UNIT_POINTS = 1001
SPIKE_POINTS = 401
SEQUENCE_LENGTH = 512
SANDWICH_LADDER = (64, 128, 256, 512)


@dataclass(frozen=True)
class Fixture:
    name: str
    description: str
    family: FunctionFamily
    limit: PiecewiseField
    sets: tuple = ()
    anchors: tuple = None
    sandwich_ladder: tuple = SANDWICH_LADDER
    extras: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.limit.grid


def bump(x):
    """Smooth bump of height 1 supported on (-1, 1)."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    safe = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(1 - 1 / (1 - safe ** 2)), 0.0)


# V1 = [0, 1/2], V2 = (1/2, 1]
def _closed_left(s):
    return np.where(s <= 0.5, 0, 1)


# V1 = [0, 1/2), V2 = [1/2, 1]
def _open_left(s):
    return np.where(s < 0.5, 0, 1)


def _step_limit(grid, classifier):
    partition = PartitionLabeling.from_rule(grid, (1, 2), classifier)
    base = ScalarField(grid, np.where(partition.codes == 0, 1.0, 0.0))
    return PiecewiseField.from_partition(base, partition)


def _right_sets(grid, start, count=SEQUENCE_LENGTH):
    """``A_n = [start(n), 1]`` for n = 1..count, plus their left endpoints."""
    sets, anchors = [], []
    for n in range(1, count + 1):
        edge = start(n)
        sets.append(GridSet.where(grid, lambda s, edge=edge: s >= edge))
        anchors.append(np.array([[edge]]))
    return tuple(sets), tuple(anchors)


def _basic_values(n, s):
    return np.where(s <= 0.5, 1.0, np.minimum(2 - 2 * s, 1.0) ** n)


def basic(points=UNIT_POINTS, name='basic'):
    grid = build_grid([(0.0, 1.0)], points)
    closed = GridSet.where(grid, lambda s: s >= 0.5)
    return Fixture(
        name=name,
        description='1 on [0, 1/2], (2 - 2s)^n on (1/2, 1]; limit is the indicator of [0, 1/2]',
        family=FunctionFamily(_basic_values, '(2-2s)^n past one half'),
        limit=_step_limit(grid, _closed_left),
        sets=(closed,) * SEQUENCE_LENGTH,
    )


def all3_res_left(points=UNIT_POINTS):
    return basic(points, name='all3_res_left')


def bad_converge(points=UNIT_POINTS):
    grid = build_grid([(0.0, 1.0)], points)

    def values(n, s):
        return _basic_values(n, s) + np.where(s > 0.5, bump(10 * n * s - 5 * n - 1), 0.0)

    sets, anchors = _right_sets(grid, lambda n: 0.5 + 1 / (10 * n))
    return Fixture(
        name='bad_converge',
        description='basic family plus a unit bump of width 1/(5n) starting at 1/2',
        family=FunctionFamily(values, '(2-2s)^n plus a travelling bump'),
        limit=_step_limit(grid, _closed_left),
        sets=sets,
        anchors=anchors,
    )


def bad_converge_weak(points=UNIT_POINTS):
    grid = build_grid([(0.0, 1.0)], points)

    def values(n, s):
        x = 4 * n * (s - 0.5)
        return np.where(x <= -1, 1.0, np.where(x <= 0, bump(x + 1), bump(x - 1)))

    sets, anchors = _right_sets(grid, lambda n: 0.5 + 1 / (4 * n))
    return Fixture(
        name='bad_converge_weak',
        description='drops to 0 at 1/2 then rises to a unit bump of width 1/(2n)',
        family=FunctionFamily(values, 'pinched bump at one half'),
        limit=_step_limit(grid, _open_left),
        sets=sets,
        anchors=anchors,
    )


def mid_bdd(points=UNIT_POINTS, count=SEQUENCE_LENGTH):
    grid = build_grid([(0.0, 1.0)], points)

    def values(n, s):
        return np.where(s < 0.5, 1 - np.minimum(2 * s, 1.0) ** n, 0.0)

    sets, anchors = _right_sets(grid, lambda n: 2.0 ** (-1 - 1 / n), count)
    return Fixture(
        name='mid_bdd',
        description='1 - (2s)^n on [0, 1/2), 0 after; A_n = [2^(-1-1/n), 1]',
        family=FunctionFamily(values, '1-(2s)^n before one half'),
        limit=_step_limit(grid, _open_left),
        sets=sets,
        anchors=anchors,
    )


SPIKE_GAMMAS = (lambda s: 2 * np.abs(s), lambda s: s)


def spike_values(n, s):
    """Scaled estimation error of the symmetric difference when the first signal is shifted down by 2/sqrt(n)."""
    g1, g2 = (rule(s) for rule in SPIKE_GAMMAS)
    root = np.sqrt(n)
    return root * (symdiff_values(g1 - 2 / root, g2) - symdiff_values(g1, g2))


def _sign_field(grid, level, inside, boundary):
    """Limit field of a scaled absolute-value error for a nonnegative ``level``.

    Equal to ``inside`` where the level is positive and ``boundary`` on its
    zero set; pieces are keyed by the sign of the level.
    """
    partition = PartitionLabeling.from_rule(
        grid, (0, 1), lambda *columns: (level(*columns) > 0).astype(np.int64),
    )
    base = ScalarField(grid, np.where(partition.codes == 1, inside, boundary))
    extensions = {}
    for key, value in ((1, inside), (0, boundary)):
        piece = partition.piece(key)
        if piece.is_empty():
            continue
        closure = grid_closure(piece).mask
        extensions[key] = ScalarField(grid, np.where(closure, value, np.nan), sentinel=True)
    return PiecewiseField(base, partition, extensions)


def symdiff4(points=SPIKE_POINTS):
    grid = build_grid([(-2.0, 2.0)], points)
    g1, g2 = SPIKE_GAMMAS
    limit = PiecewiseField.continuous(ScalarField.constant(grid, 0.0))
    # J1 = -2 and J2 = 0, so the half-difference and half-sum limits are both -1.
    j_d = j_m = -1.0
    first = _sign_field(grid, lambda s: 0.5 * (g1(s) - g2(s)), j_d, abs(j_d))
    second = _sign_field(grid, lambda s: 0.5 * (g1(s) + g2(s)), -j_m, -abs(j_m))
    return Fixture(
        name='symdiff4',
        description='symmetric difference of 2|s| - 2/sqrt(n) and s on [-2, 2]',
        family=FunctionFamily(spike_values, 'symmetric-difference spike'),
        limit=limit,
        sandwich_ladder=(),
        extras={
            'sum_fields': (first, second),
            'truth': evaluate(grid, lambda s: symdiff_values(g1(s), g2(s)), zero_atol=1e-12),
        },
    )


FIXTURES = {
    'basic': basic,
    'bad_converge': bad_converge,
    'all3_res_left': all3_res_left,
    'bad_converge_weak': bad_converge_weak,
    'mid_bdd': mid_bdd,
    'symdiff4': symdiff4,
}


def load_fixture(name, points=None):
    try:
        builder = FIXTURES[name]
    except KeyError:
        raise UnknownFixture(f"Unknown fixture {name!r}; choose one of {', '.join(FIXTURES)}.") from None
    fixture = builder() if points is None else builder(points)
    logger.debug('Loaded fixture %s on %d points', name, fixture.grid.size)
    return fixture
