"""
Limit sets of set sequences and the supremum sandwich they give.

A finite list of sets stands for an infinite sequence whose last ``period``
terms repeat forever. Under that reading the tail intersection and tail
union are just the intersection and union of the repeating block.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import GridMismatch, PiecewiseError
from domain.grid import NEG_INF, GridSet, grid_closure, sup_over

logger = logging.getLogger(__name__)

SANDWICH_TOLERANCE = 1e-9


def _tail(sequence, period):
    sequence = list(sequence)
    if not sequence:
        raise PiecewiseError('A set sequence needs at least one set.')
    period = int(period)
    if not 1 <= period <= len(sequence):
        raise PiecewiseError(f"Period {period} must lie in [1, {len(sequence)}].")
    grid = sequence[0].grid
    for item in sequence:
        if item.grid != grid:
            raise GridMismatch('All sets of a sequence must share one grid.')
    return sequence[-period:]


def liminf_set(sequence, period=1):
    """Points that eventually belong to every set."""
    tail = _tail(sequence, period)
    result = tail[0]
    for item in tail[1:]:
        result = result & item
    return result


def limsup_plus_set(sequence, partition, key, period=1):
    """Grid version of the closure of ``V_key`` meeting the closed tail union."""
    tail = _tail(sequence, period)
    if partition.grid != tail[0].grid:
        raise GridMismatch('Partition and sets live on different grids.')
    union = tail[0]
    for item in tail[1:]:
        union = union | item
    return grid_closure(partition.piece(key) & grid_closure(union))


@dataclass(frozen=True)
class SandwichResult:
    lower_ok: bool
    upper_ok: bool
    lower: float
    middle: float
    upper: float
    n: int

    @property
    def values(self):
        return (self.lower, self.middle, self.upper)

    def __iter__(self):
        return iter((self.lower_ok, self.upper_ok, self.values))


def _sup_at(family, n, gridset, anchors):
    value = NEG_INF
    if not gridset.is_empty():
        value = float(family.values(n, gridset.points()).max())
    if anchors is not None and len(anchors):
        value = max(value, float(family.values(n, np.asarray(anchors, dtype=float).reshape(len(anchors), -1)).max()))
    return value


def verify_sup_sandwich(family, f, sets, n_ladder, anchors=None, period=1, tolerance=SANDWICH_TOLERANCE):
    """Check that ``sup_{A_n} f_n`` sits between the two limit-set bounds.

    ``sets[k]`` is ``A_{k+1}``; ``anchors[k]`` optionally lists exact off-grid
    points of ``A_{k+1}`` that the grid misses. The middle value is read at
    the top of ``n_ladder``.
    """
    sets = list(sets)
    ladder = sorted(int(n) for n in n_ladder)
    if not ladder or ladder[0] < 1 or ladder[-1] > len(sets):
        raise PiecewiseError(f"The n ladder must lie within 1..{len(sets)}, got {list(n_ladder)}.")
    lower = sup_over(f.base, liminf_set(sets, period))
    upper = NEG_INF
    for key in f.partition.nonempty_keys():
        upper = max(upper, sup_over(f.extension(key), limsup_plus_set(sets, f.partition, key, period)))
    middles = [
        _sup_at(family, n, sets[n - 1], None if anchors is None else anchors[n - 1])
        for n in ladder
    ]
    middle = middles[-1]
    logger.debug('Sandwich middle values along the ladder: %s', middles)
    result = SandwichResult(
        lower_ok=lower <= middle + tolerance,
        upper_ok=middle <= upper + tolerance,
        lower=lower,
        middle=middle,
        upper=upper,
        n=ladder[-1],
    )
    logger.info('Sandwich %.6g <= %.6g <= %.6g: lower %s, upper %s',
                lower, middle, upper, result.lower_ok, result.upper_ok)
    return result
