"""
Numeric checks of restrained convergence.

``check_restrained_bound`` approximates, for every label i and every point s
of the closure of V_i,

    lim_{delta -> 0} limsup_n sup_{B_delta(s) ∩ V_i} f_n  -  max(f^i, f)

on finite ladders. Each f_n is sampled on a grid refined in proportion to n
so that features of width ~1/n stay visible, and off-grid points get their
piece from the partition's classifier. Windows are Chebyshev boxes; as
delta shrinks they give the same limit as Euclidean balls.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from core.exceptions import GridMismatch, InvalidSchedule, PiecewiseError, ScheduleTooCoarse
from core.parallel import ordered_map
from domain.grid import NEG_INF, GridSet, grid_closure

logger = logging.getLogger(__name__)

DEFAULT_N_LADDER = tuple(2 ** k for k in range(4, 15))
DEFAULT_DELTA_FRACTIONS = (0.2, 0.1, 0.05, 0.025)

# fine samples per unit of n across the domain width
SAMPLES_PER_N = 32
MAX_FINE_POINTS = {1: 2 ** 19, 2: 2 ** 22}

# limsup extrapolation accepts geometric tails contracting at least this fast
MAX_CONTRACTION = 0.75

SUM_CONDITION_TOLERANCE = 1e-12
WITNESS_TIE = 1e-12


@dataclass(frozen=True)
class Witness:
    label: object
    point: tuple
    n: int
    delta: float
    side: str = 'upper'


@dataclass(frozen=True)
class RestraintReport:
    passed: bool
    worst_violation: float
    witness: Witness
    schedule: dict = field(default_factory=dict)
    tolerance: float = 0.0
    side: str = 'upper'


class SumCondition(NamedTuple):
    holds: bool
    violations: list


def default_schedule(grid):
    return DEFAULT_N_LADDER, tuple(fraction * grid.width for fraction in DEFAULT_DELTA_FRACTIONS)


def _validated_schedule(grid, schedule):
    if schedule is None:
        schedule = default_schedule(grid)
    n_ladder, delta_ladder = schedule
    n_ladder = tuple(int(n) for n in n_ladder)
    delta_ladder = tuple(float(d) for d in delta_ladder)
    if not n_ladder or n_ladder[0] < 1 or any(b <= a for a, b in zip(n_ladder, n_ladder[1:])):
        raise InvalidSchedule(f"The n ladder must be positive and strictly increasing, got {n_ladder}.")
    if not delta_ladder or delta_ladder[-1] <= 0 or any(b >= a for a, b in zip(delta_ladder, delta_ladder[1:])):
        raise InvalidSchedule(f"The delta ladder must be positive and strictly decreasing, got {delta_ladder}.")
    if delta_ladder[-1] < grid.max_spacing:
        raise ScheduleTooCoarse(
            f"Smallest delta {delta_ladder[-1]:.6g} is below the grid spacing {grid.max_spacing:.6g}."
        )
    return n_ladder, delta_ladder


def refinement_factor(grid, n):
    """Sub-cells per grid cell used to sample ``f_n``."""
    wanted = math.ceil(grid.max_spacing * SAMPLES_PER_N * n / grid.width)
    per_axis = MAX_FINE_POINTS[grid.dimension] ** (1 / grid.dimension)
    ceiling = max(1, int((per_axis - 1) // (max(grid.points_per_axis) - 1)))
    return max(1, min(wanted, ceiling))


def lipschitz_estimate(ext, region):
    """Largest adjacent difference quotient of ``ext`` inside ``region``."""
    grid = ext.grid
    values = np.where(region.mask, ext.values, np.nan).reshape(grid.shape)
    slope = 0.0
    for axis, h in enumerate(grid.spacing):
        diffs = np.abs(np.diff(values, axis=axis)) / h
        diffs = diffs[np.isfinite(diffs)]
        if diffs.size:
            slope = max(slope, float(diffs.max()))
    return slope


def default_tolerance(f):
    slope = 0.0
    for key, ext in f.extensions.items():
        slope = max(slope, lipschitz_estimate(ext, grid_closure(f.partition.piece(key))))
    return 1e-6 + 10 * f.grid.max_spacing * slope


def _box_max(array, radii):
    out = array
    for axis, radius in enumerate(radii):
        out = ndimage.maximum_filter1d(out, size=2 * radius + 1, axis=axis, mode='constant', cval=NEG_INF)
    return out


def _coarse_view(fine_array, factor):
    index = tuple(slice(None, None, factor) for _ in range(fine_array.ndim))
    return fine_array[index].ravel()


def _limsup(values):
    """limsup over the n ladder (first axis), per point."""
    if len(values) == 1:
        return values[-1]
    top = np.maximum(values[-2], values[-1])
    if len(values) < 3:
        return top
    v1, v2, v3 = values[-3], values[-2], values[-1]
    with np.errstate(invalid='ignore', divide='ignore', over='ignore'):
        d1 = v2 - v1
        d2 = v3 - v2
        ratio = d2 / d1
        usable = np.isfinite(ratio) & (ratio > 0) & (ratio <= MAX_CONTRACTION)
        aitken = v3 + d2 * ratio / (1 - ratio)
    return np.where(usable, aitken, top)


def _upper_excess(family, f, n_ladder, delta_ladder, workers):
    """Per label: excess over the bound at the smallest delta, on the closure points."""
    grid = f.grid
    partition = f.partition
    keys = partition.nonempty_keys()
    closures = {key: partition.closure_of(key) for key in keys}
    bounds = {}
    for key in keys:
        ext = f.extension(key).values
        bound = np.fmax(ext, f.base.values)
        bound = np.where(closures[key].mask & ~np.isnan(bound), bound, NEG_INF)
        bounds[key] = bound.reshape(grid.shape)

    # lhs[key] has shape (len(n_ladder), len(delta_ladder), grid.size)
    lhs = {key: np.empty((len(n_ladder), len(delta_ladder), grid.size)) for key in keys}
    codes_cache = {}
    for row, n in enumerate(n_ladder):
        factor = refinement_factor(grid, n)
        fine = grid.refine(factor)
        values = family.values(n, fine.coordinates)
        if factor not in codes_cache:
            codes_cache[factor] = partition.classify(fine.coordinates)
        codes = codes_cache[factor]
        logger.debug('n=%d sampled on %d points (factor %d)', n, fine.size, factor)

        def windows(key, values=values, codes=codes, fine=fine, factor=factor):
            inside = np.where(codes == partition.code_of(key), values, NEG_INF).reshape(fine.shape)
            return [
                _coarse_view(_box_max(inside, [int(delta // h) for h in fine.spacing]), factor)
                for delta in delta_ladder
            ]

        for key, result in zip(keys, ordered_map(windows, keys, workers)):
            lhs[key][row] = np.asarray(result)

    excess = {}
    for key in keys:
        rhs = np.stack([
            _box_max(bounds[key], [math.ceil(delta / h) for h in grid.spacing]).ravel()
            for delta in delta_ladder
        ])
        limsup = np.minimum.accumulate(_limsup(lhs[key]), axis=0)[-1]
        rhs = np.minimum.accumulate(rhs, axis=0)[-1]
        with np.errstate(invalid='ignore'):
            value = np.where(np.isfinite(rhs) & (limsup > NEG_INF), limsup - rhs, NEG_INF)
        excess[key] = np.where(closures[key].mask, value, NEG_INF)
    return excess


def check_restrained_bound(family, f, schedule=None, side='upper', tolerance=None, workers=None):
    """Test whether ``f`` is a restrained bound for ``family`` on the given ladders."""
    if side not in ('upper', 'lower', 'both'):
        raise PiecewiseError(f"Side must be upper, lower or both, got {side!r}.")
    n_ladder, delta_ladder = _validated_schedule(f.grid, schedule)
    if tolerance is None:
        tolerance = default_tolerance(f)

    sides = ('upper', 'lower') if side == 'both' else (side,)
    worst, witness = NEG_INF, None
    for current in sides:
        fam, field_ = (family, f) if current == 'upper' else (-family, -f)
        excess = _upper_excess(fam, field_, n_ladder, delta_ladder, workers)
        for key, values in excess.items():
            # lowest grid index among near-ties, so flat plateaus report their left edge
            index = int(np.flatnonzero(values >= values.max() - WITNESS_TIE)[0])
            if values[index] > worst:
                worst = float(values[index])
                witness = Witness(
                    label=key,
                    point=tuple(float(c) for c in f.grid.coordinates[index]),
                    n=n_ladder[-1],
                    delta=delta_ladder[-1],
                    side=current,
                )

    worst_violation = max(worst, 0.0)
    report = RestraintReport(
        passed=worst_violation <= tolerance,
        worst_violation=worst_violation,
        witness=witness,
        schedule={'n': list(n_ladder), 'delta': list(delta_ladder)},
        tolerance=float(tolerance),
        side=side,
    )
    logger.info('Restraint check (%s): worst violation %.6g, tolerance %.3g, passed=%s',
                side, report.worst_violation, report.tolerance, report.passed)
    return report


def within_graph_tube(family, f, n, epsilon):
    """True when every sample of ``f_n`` lies in the epsilon-thickening of the completed graph."""
    if epsilon <= 0:
        raise PiecewiseError(f"The tube radius must be positive, got {epsilon}.")
    grid = f.grid
    factor = refinement_factor(grid, n)
    fine = grid.refine(factor)
    points = fine.coordinates
    values = family.values(n, points)
    lo, hi = f.graph_bounds()

    lower_index = []
    for axis, ((start, _), h) in enumerate(zip(grid.extents, grid.spacing)):
        lower_index.append(np.floor((points[:, axis] - start) / h).astype(np.int64))
    reach = [math.ceil(epsilon / h) for h in grid.spacing]

    best = np.full(len(points), np.inf)
    for offset in itertools.product(*(range(-r, r + 2) for r in reach)):
        valid = np.ones(len(points), dtype=bool)
        flat = np.zeros(len(points), dtype=np.int64)
        horizontal = np.zeros(len(points))
        for axis, (base, step) in enumerate(zip(lower_index, offset)):
            idx = base + step
            valid &= (idx >= 0) & (idx < grid.points_per_axis[axis])
            idx = np.clip(idx, 0, grid.points_per_axis[axis] - 1)
            flat = flat * grid.points_per_axis[axis] + idx
            horizontal += (points[:, axis] - grid.axes[axis][idx]) ** 2
        vertical = np.maximum(np.maximum(lo[flat] - values, values - hi[flat]), 0.0)
        best = np.minimum(best, np.where(valid, horizontal + vertical ** 2, np.inf))

    outside = best >= epsilon ** 2
    if outside.any():
        first = int(np.flatnonzero(outside)[0])
        logger.debug('f_%d leaves the %.3g-tube at %s (value %.6g)', n, epsilon, points[first], values[first])
        return False
    return True


def exceptional_set(first, second):
    """Points on the boundary of a piece of both partitions, next to their intersection.

    Closures come from ``closure_of``, so partitions with a classifier get
    their continuum boundaries rather than a one-cell band.
    """
    if first.grid != second.grid:
        raise GridMismatch('Partitions live on different grids.')
    result = GridSet.empty(first.grid)
    second_pieces = {key: (w, second.closure_of(key)) for key, w in second.pieces().items()}
    for key, u in first.pieces().items():
        u_closure = first.closure_of(key)
        u_edge = u_closure - u
        if u_edge.is_empty():
            continue
        for w, w_closure in second_pieces.values():
            meet = grid_closure(u & w) & u_closure & w_closure
            result = result | (u_edge & (w_closure - w) & meet)
    return result


def check_sum_condition(f, g, tolerance=SUM_CONDITION_TOLERANCE):
    """Evaluate the sum condition on the exceptional set of the two partitions."""
    if f.grid != g.grid:
        raise GridMismatch('Fields live on different grids.')
    exceptional = exceptional_set(f.partition, g.partition)
    f_closures = {key: f.partition.closure_of(key).mask for key in f.partition.nonempty_keys()}
    g_closures = {key: g.partition.closure_of(key).mask for key in g.partition.nonempty_keys()}
    violations = []
    for s in exceptional.indices():
        fs, gs = f.base.values[s], g.base.values[s]
        for i, f_closure in f_closures.items():
            fi = f.extension(i).values[s]
            if not f_closure[s] or np.isnan(fi):
                continue
            for j, g_closure in g_closures.items():
                gj = g.extension(j).values[s]
                if not g_closure[s] or np.isnan(gj):
                    continue
                if max(fi + gs, fs + gj) > max(fi + gj, fs + gs) + tolerance:
                    violations.append((tuple(float(c) for c in f.grid.coordinates[s]), i, j))
    logger.debug('Sum condition: %d exceptional points, %d violations', exceptional.count(), len(violations))
    return SumCondition(holds=not violations, violations=violations)
