"""
Finite partitions of a grid, piecewise continuous fields over them and
closed-form function families.

A partition stores one integer code per grid point; ``keys[code]`` is the
label the rest of the toolkit talks about (ints for the textbook fixtures,
sign tuples for the symmetric-difference pieces). Pieces may be empty.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from core.exceptions import EmptyPiece, GridMismatch, PiecewiseError
from domain.grid import GridSet, ScalarField, grid_closure

logger = logging.getLogger(__name__)

# Offset used to sample the classifier around a grid point.
CLOSURE_PROBE = 1e-9


@dataclass(frozen=True, eq=False)
class PartitionLabeling:
    grid: object
    codes: np.ndarray
    keys: tuple
    classifier: Callable = None

    def __post_init__(self):
        codes = np.array(self.codes, dtype=np.int64, copy=True).ravel()
        keys = tuple(self.keys)
        if codes.size != self.grid.size:
            raise GridMismatch(f"Partition has {codes.size} labels for a grid of {self.grid.size} points.")
        if codes.size and (codes.min() < 0 or codes.max() >= len(keys)):
            raise PiecewiseError(f"Label codes must index the {len(keys)} keys {keys}.")
        if len(set(keys)) != len(keys):
            raise PiecewiseError(f"Partition keys must be distinct, got {keys}.")
        codes.flags.writeable = False
        object.__setattr__(self, 'codes', codes)
        object.__setattr__(self, 'keys', keys)

    @classmethod
    def from_rule(cls, grid, keys, classifier):
        """Partition whose codes come from ``classifier(*columns)``.

        The classifier is kept so that off-grid points can be labelled too.
        """
        return cls(grid, classifier(*grid.columns()), keys, classifier)

    @classmethod
    def single(cls, grid, key=0):
        return cls(grid, np.zeros(grid.size, dtype=np.int64), (key,),
                   lambda *columns: np.zeros(np.shape(columns[0]), dtype=np.int64))

    def code_of(self, key):
        try:
            return self.keys.index(key)
        except ValueError:
            raise PiecewiseError(f"Label {key!r} is not one of {self.keys}.") from None

    def piece(self, key):
        return GridSet(self.grid, self.codes == self.code_of(key))

    def pieces(self):
        return {key: GridSet(self.grid, self.codes == code) for code, key in enumerate(self.keys)}

    def nonempty_keys(self):
        present = set(np.unique(self.codes).tolist())
        return tuple(key for code, key in enumerate(self.keys) if code in present)

    def classify(self, points):
        """Codes of arbitrary points, shape ``(m, dimension)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.classifier is not None:
            columns = tuple(points[:, a] for a in range(points.shape[1]))
            return np.broadcast_to(np.asarray(self.classifier(*columns), dtype=np.int64), (len(points),))
        return self.codes[self.grid.nearest_index(points)]

    def closure_of(self, key):
        """Grid points lying in the closure of piece ``key``.

        With a classifier, a point belongs when the classifier puts it or a
        point within a tiny offset in every direction into the piece. Without
        one, the grid closure is used.
        """
        piece = self.piece(key)
        if self.classifier is None:
            return grid_closure(piece)
        code = self.code_of(key)
        coords = self.grid.coordinates
        eps = CLOSURE_PROBE * self.grid.width
        lows = np.array([lo for lo, _ in self.grid.extents])
        highs = np.array([hi for _, hi in self.grid.extents])
        mask = piece.mask.copy()
        for offset in itertools.product((-1, 0, 1), repeat=self.grid.dimension):
            if not any(offset):
                continue
            shifted = np.clip(coords + eps * np.asarray(offset, dtype=float), lows, highs)
            mask |= self.classify(shifted) == code
        return GridSet(self.grid, mask)

    def __repr__(self):
        return f"PartitionLabeling(keys={self.keys}, grid={self.grid.size} points)"


def _nearest_lowest(tree, points):
    """Nearest tree point for each query, ties broken by lowest tree position."""
    distances, _ = tree.query(points)
    radii = distances * (1 + 1e-9) + 1e-15
    candidates = tree.query_ball_point(points, r=radii)
    return np.array([min(c) for c in candidates], dtype=np.int64)


def extend_piece(f, partition, key):
    """Continuous extension of ``f`` from piece ``key`` onto its grid closure.

    Closure points outside the piece take the value of the nearest point of
    the piece. Everything else is NaN, so the result is a sentinel field.
    """
    if f.grid != partition.grid:
        raise GridMismatch('Field and partition live on different grids.')
    piece = partition.piece(key)
    if piece.is_empty():
        raise EmptyPiece(f"Piece {key!r} has no grid points.")
    values = np.full(f.grid.size, np.nan)
    inside = piece.indices()
    values[inside] = f.values[inside]
    outside = (grid_closure(piece) - piece).indices()
    if outside.size:
        tree = cKDTree(f.grid.coordinates[inside])
        nearest = _nearest_lowest(tree, f.grid.coordinates[outside])
        values[outside] = f.values[inside[nearest]]
    return ScalarField(f.grid, values, sentinel=True)


@dataclass(frozen=True, eq=False)
class PiecewiseField:
    base: ScalarField
    partition: PartitionLabeling
    extensions: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.base.grid != self.partition.grid:
            raise GridMismatch('Base field and partition live on different grids.')
        pieces = self.partition.pieces()
        for key in self.partition.nonempty_keys():
            if key not in self.extensions:
                raise PiecewiseError(f"No extension given for piece {key!r}.")
            ext = self.extensions[key]
            mask = pieces[key].mask
            if not np.array_equal(ext.values[mask], self.base.values[mask]):
                raise PiecewiseError(f"Extension {key!r} differs from the field on its own piece.")
            closure = grid_closure(pieces[key]).mask
            if np.isnan(ext.values[closure]).any():
                raise PiecewiseError(f"Extension {key!r} is undefined on part of its closure.")
        object.__setattr__(self, 'extensions', dict(self.extensions))

    @classmethod
    def from_partition(cls, base, partition):
        extensions = {key: extend_piece(base, partition, key) for key in partition.nonempty_keys()}
        return cls(base, partition, extensions)

    @classmethod
    def continuous(cls, base):
        return cls.from_partition(base, PartitionLabeling.single(base.grid))

    @property
    def grid(self):
        return self.base.grid

    def extension(self, key):
        return self.extensions[key]

    def __neg__(self):
        return PiecewiseField(-self.base, self.partition, {k: -v for k, v in self.extensions.items()})

    def graph_bounds(self):
        """Lowest and highest value of the completed graph above every grid point."""
        lo = self.base.values.copy()
        hi = self.base.values.copy()
        for key, ext in self.extensions.items():
            closure = self.partition.closure_of(key).mask & ~np.isnan(ext.values)
            lo[closure] = np.minimum(lo[closure], ext.values[closure])
            hi[closure] = np.maximum(hi[closure], ext.values[closure])
        return lo, hi


@dataclass(frozen=True)
class FunctionFamily:
    """A sequence ``f_n`` given in closed form: ``evaluator(n, *columns)``."""
    evaluator: Callable
    description: str = ''

    def values(self, n, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        columns = tuple(points[:, a] for a in range(points.shape[1]))
        out = np.asarray(self.evaluator(int(n), *columns), dtype=float)
        return np.broadcast_to(out, (len(points),)).copy()

    def at(self, n, grid):
        return ScalarField(grid, self.values(n, grid.coordinates))

    def __neg__(self):
        evaluator = self.evaluator
        return FunctionFamily(lambda n, *columns: -np.asarray(evaluator(n, *columns)),
                              f"-({self.description})")

    @classmethod
    def constant(cls, field_rule, description=''):
        """Family with ``f_n = f`` for every n."""
        return cls(lambda n, *columns: field_rule(*columns), description)
