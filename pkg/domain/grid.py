"""
Regular grids over 1D intervals and 2D rectangles, boolean masks over their
points, and real-valued fields.

Points are enumerated row-major (first axis slowest); every mask and field
indexes the same way. All three types are immutable once built.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

from core.exceptions import GridMismatch, InvalidExtent, InvalidInterval, TooFewPoints

logger = logging.getLogger(__name__)

# Supremum over the empty set. Never produced by a finite field value.
NEG_INF = -math.inf
POS_INF = math.inf


def _frozen_array(values, dtype):
    array = np.array(values, dtype=dtype, copy=True).ravel()
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class DomainGrid:
    extents: tuple
    points_per_axis: tuple

    def __post_init__(self):
        extents = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        points = tuple(int(p) for p in self.points_per_axis)
        if len(extents) not in (1, 2) or len(points) != len(extents):
            raise InvalidExtent(
                f"Grids are 1D or 2D with one point count per axis, got {len(extents)} extents "
                f"and {len(points)} counts."
            )
        for lo, hi in extents:
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise InvalidExtent(f"Axis extent [{lo}, {hi}] must satisfy lo < hi.")
        for count in points:
            if count < 2:
                raise TooFewPoints(f"Each axis needs at least 2 points, got {count}.")
        object.__setattr__(self, 'extents', extents)
        object.__setattr__(self, 'points_per_axis', points)

    @property
    def dimension(self):
        return len(self.extents)

    @property
    def shape(self):
        return self.points_per_axis

    @property
    def size(self):
        return math.prod(self.points_per_axis)

    @property
    def spacing(self):
        return tuple((hi - lo) / (count - 1) for (lo, hi), count in zip(self.extents, self.points_per_axis))

    @property
    def max_spacing(self):
        return max(self.spacing)

    @property
    def width(self):
        """Largest axis length; the unit of the default δ ladder."""
        return max(hi - lo for lo, hi in self.extents)

    @cached_property
    def axes(self):
        axes = []
        for (lo, hi), count in zip(self.extents, self.points_per_axis):
            axis = lo + (hi - lo) * np.arange(count) / (count - 1)
            axis[-1] = hi
            axis.flags.writeable = False
            axes.append(axis)
        return tuple(axes)

    @cached_property
    def coordinates(self):
        """``(size, dimension)`` array of point coordinates, row-major."""
        mesh = np.meshgrid(*self.axes, indexing='ij')
        coords = np.stack([m.ravel() for m in mesh], axis=1)
        coords.flags.writeable = False
        return coords

    def columns(self):
        return tuple(self.coordinates[:, a] for a in range(self.dimension))

    def reshape(self, flat):
        return np.asarray(flat).reshape(self.shape)

    def refine(self, factor):
        """Grid containing this one, with ``factor`` sub-cells per cell."""
        factor = int(factor)
        return DomainGrid(self.extents, tuple((p - 1) * factor + 1 for p in self.points_per_axis))

    def nearest_index(self, points):
        """Flat index of the nearest grid point, ties to the lower index."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        flat = np.zeros(len(points), dtype=np.int64)
        for a, ((lo, hi), count, h) in enumerate(zip(self.extents, self.points_per_axis, self.spacing)):
            k = np.ceil((points[:, a] - lo) / h - 0.5).astype(np.int64)
            k = np.clip(k, 0, count - 1)
            flat = flat * count + k
        return flat

    def as_dict(self):
        return {
            'extents': [list(e) for e in self.extents],
            'points': list(self.points_per_axis),
        }


def build_grid(extents, points_per_axis):
    """Grid over ``extents`` (one ``(lo, hi)`` per axis)."""
    if isinstance(points_per_axis, int):
        points_per_axis = (points_per_axis,) * len(extents)
    grid = DomainGrid(tuple(tuple(e) for e in extents), tuple(points_per_axis))
    logger.debug('Built %dD grid with %d points, spacing %s', grid.dimension, grid.size, grid.spacing)
    return grid


def _same_grid(*items):
    grid = items[0].grid
    for item in items[1:]:
        if item.grid != grid:
            raise GridMismatch(f"Grid {item.grid.as_dict()} does not match {grid.as_dict()}.")
    return grid


@dataclass(frozen=True, eq=False)
class GridSet:
    grid: DomainGrid
    mask: np.ndarray

    def __post_init__(self):
        mask = _frozen_array(self.mask, bool)
        if mask.size != self.grid.size:
            raise GridMismatch(f"Mask has {mask.size} entries for a grid of {self.grid.size} points.")
        object.__setattr__(self, 'mask', mask)

    @classmethod
    def empty(cls, grid):
        return cls(grid, np.zeros(grid.size, dtype=bool))

    @classmethod
    def full(cls, grid):
        return cls(grid, np.ones(grid.size, dtype=bool))

    @classmethod
    def where(cls, grid, rule):
        """Points where ``rule(*columns)`` is true."""
        return cls(grid, np.asarray(rule(*grid.columns()), dtype=bool))

    def __or__(self, other):
        _same_grid(self, other)
        return GridSet(self.grid, self.mask | other.mask)

    def __and__(self, other):
        _same_grid(self, other)
        return GridSet(self.grid, self.mask & other.mask)

    def __sub__(self, other):
        _same_grid(self, other)
        return GridSet(self.grid, self.mask & ~other.mask)

    def __invert__(self):
        return GridSet(self.grid, ~self.mask)

    def __eq__(self, other):
        if not isinstance(other, GridSet):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.mask, other.mask)

    __hash__ = None

    def __le__(self, other):
        return self.issubset(other)

    def issubset(self, other):
        _same_grid(self, other)
        return not np.any(self.mask & ~other.mask)

    def is_empty(self):
        return not self.mask.any()

    def count(self):
        return int(self.mask.sum())

    def indices(self):
        return np.flatnonzero(self.mask)

    def points(self):
        return self.grid.coordinates[self.mask]

    def as_array(self):
        return self.grid.reshape(self.mask)

    def __repr__(self):
        return f"GridSet({self.count()}/{self.grid.size} points)"


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: DomainGrid
    values: np.ndarray
    sentinel: bool = False

    def __post_init__(self):
        values = _frozen_array(self.values, float)
        if values.size != self.grid.size:
            raise GridMismatch(f"Field has {values.size} values for a grid of {self.grid.size} points.")
        if not self.sentinel and not np.all(np.isfinite(values)):
            raise ValueError('Field values must be finite unless the field is flagged as a sentinel field.')
        object.__setattr__(self, 'values', values)

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.size, float(value)))

    def defined(self):
        """Points carrying a real value (sentinel fields leave the rest NaN)."""
        return GridSet(self.grid, ~np.isnan(self.values))

    def as_array(self):
        return self.grid.reshape(self.values)

    def _combine(self, other, op):
        if isinstance(other, ScalarField):
            _same_grid(self, other)
            return ScalarField(self.grid, op(self.values, other.values), self.sentinel or other.sentinel)
        return ScalarField(self.grid, op(self.values, float(other)), self.sentinel)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __neg__(self):
        return ScalarField(self.grid, -self.values, self.sentinel)

    def __abs__(self):
        return ScalarField(self.grid, np.abs(self.values), self.sentinel)

    def __repr__(self):
        return f"ScalarField({self.grid.size} points, sentinel={self.sentinel})"


def pointwise_min(*fields):
    _same_grid(*fields)
    return ScalarField(fields[0].grid, np.minimum.reduce([f.values for f in fields]),
                       any(f.sentinel for f in fields))


def pointwise_max(*fields):
    _same_grid(*fields)
    return ScalarField(fields[0].grid, np.maximum.reduce([f.values for f in fields]),
                       any(f.sentinel for f in fields))


def symdiff_values(a, b):
    """``max(min(-a, b), min(a, -b))``: positive exactly where one of a, b is."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.maximum(np.minimum(-a, b), np.minimum(a, -b))


def symmetric_difference(f, g):
    _same_grid(f, g)
    return ScalarField(f.grid, symdiff_values(f.values, g.values), f.sentinel or g.sentinel)


def evaluate(grid, rule, zero_atol=0.0):
    """Field of ``rule(*columns)``; values within ``zero_atol`` of 0 become exactly 0."""
    values = np.broadcast_to(np.asarray(rule(*grid.columns()), dtype=float), (grid.size,)).copy()
    if zero_atol > 0:
        values[np.abs(values) <= zero_atol] = 0.0
    return ScalarField(grid, values)


def grid_closure(a):
    """``a`` plus every point whose Chebyshev neighbourhood meets ``a``.

    Each call grows a set by one cell; it is not idempotent.
    """
    structure = np.ones((3,) * a.grid.dimension, dtype=bool)
    grown = ndimage.binary_dilation(a.as_array(), structure=structure)
    return GridSet(a.grid, grown.ravel())


def sup_over(f, a):
    _same_grid(f, a)
    values = f.values[a.mask]
    values = values[~np.isnan(values)]
    return float(values.max()) if values.size else NEG_INF


def inf_over(f, a):
    _same_grid(f, a)
    values = f.values[a.mask]
    values = values[~np.isnan(values)]
    return float(values.min()) if values.size else POS_INF


def tube_set(f, lo, hi):
    """Points with ``lo <= f <= hi``; infinite bounds are allowed."""
    if lo > hi:
        raise InvalidInterval(f"Tube bounds must satisfy lo <= hi, got [{lo}, {hi}].")
    with np.errstate(invalid='ignore'):
        mask = (f.values >= lo) & (f.values <= hi)
    return GridSet(f.grid, mask)
