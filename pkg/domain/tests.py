import json
import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from core.exceptions import GridMismatch, InvalidExtent, InvalidInterval, TooFewPoints
from .grid import (
    NEG_INF, POS_INF, GridSet, ScalarField, build_grid, evaluate, grid_closure, inf_over, sup_over,
    tube_set,
)
from .serializers import (
    DomainGridSerializer, GridSetRLESerializer, field_to_csv, gridset_from_csv, gridset_to_csv,
)

GRID = build_grid([(0.0, 1.0)], [21])

masks = st.lists(st.booleans(), min_size=GRID.size, max_size=GRID.size).map(lambda m: GridSet(GRID, m))
fields = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=GRID.size, max_size=GRID.size,
).map(lambda v: ScalarField(GRID, v))


class BuildGridTests(SimpleTestCase):
    def test_unit_interval_five_points(self):
        grid = build_grid([(0, 1)], [5])
        self.assertEqual(grid.spacing, (0.25,))
        np.testing.assert_array_equal(grid.axes[0], [0, 0.25, 0.5, 0.75, 1])

    def test_square_three_by_three(self):
        grid = build_grid([(0, 1), (0, 1)], [3, 3])
        self.assertEqual(grid.size, 9)
        self.assertIn([1.0, 1.0], grid.coordinates.tolist())
        # row-major: first axis slowest
        self.assertEqual(grid.coordinates[1].tolist(), [0.0, 0.5])

    def test_single_point_rejected(self):
        with self.assertRaises(TooFewPoints):
            build_grid([(0, 1)], [1])

    def test_reversed_extent_rejected(self):
        with self.assertRaises(InvalidExtent):
            build_grid([(1, 0)], [5])

    def test_three_dimensions_rejected(self):
        with self.assertRaises(InvalidExtent):
            build_grid([(0, 1)] * 3, [3] * 3)

    def test_symmetric_grid_hits_zero_exactly(self):
        grid = build_grid([(-2, 2)], [401])
        self.assertEqual(grid.axes[0][200], 0.0)

    def test_nearest_index_ties_to_lower(self):
        grid = build_grid([(0, 1)], [5])
        self.assertEqual(grid.nearest_index([[0.125]]).tolist(), [0])
        self.assertEqual(grid.nearest_index([[0.2]]).tolist(), [1])

    def test_refine_keeps_original_points(self):
        fine = GRID.refine(4)
        np.testing.assert_allclose(fine.axes[0][::4], GRID.axes[0])


class ClosureTests(SimpleTestCase):
    def test_single_interior_point(self):
        a = GridSet(GRID, np.arange(GRID.size) == 10)
        self.assertEqual(grid_closure(a).indices().tolist(), [9, 10, 11])

    def test_empty_and_full(self):
        self.assertTrue(grid_closure(GridSet.empty(GRID)).is_empty())
        self.assertEqual(grid_closure(GridSet.full(GRID)), GridSet.full(GRID))

    def test_two_dimensional_closure_is_chebyshev(self):
        grid = build_grid([(0, 1), (0, 1)], [5, 5])
        centre = GridSet(grid, np.arange(grid.size) == 12)
        self.assertEqual(grid_closure(centre).count(), 9)

    def test_repeated_closure_grows(self):
        a = GridSet(GRID, np.arange(GRID.size) == 10)
        self.assertEqual(grid_closure(grid_closure(a)).count(), 5)

    @settings(max_examples=50, deadline=None)
    @given(masks, masks)
    def test_monotone_and_extensive(self, a, b):
        self.assertTrue(a <= grid_closure(a))
        union = a | b
        self.assertTrue(grid_closure(a) <= grid_closure(union))


class MaskAlgebraTests(SimpleTestCase):
    @settings(max_examples=50, deadline=None)
    @given(masks, masks)
    def test_de_morgan(self, a, b):
        self.assertEqual(~(a | b), ~a & ~b)
        self.assertEqual(~(a & b), ~a | ~b)

    @settings(max_examples=50, deadline=None)
    @given(masks, masks)
    def test_difference(self, a, b):
        self.assertEqual(a - b, a & ~b)

    def test_grid_mismatch(self):
        other = build_grid([(0, 2)], [21])
        with self.assertRaises(GridMismatch):
            GridSet.full(GRID) | GridSet.full(other)


class SupremumTests(SimpleTestCase):
    def setUp(self):
        self.f = evaluate(GRID, lambda s: s)

    def test_full_set(self):
        self.assertEqual(sup_over(self.f, GridSet.full(GRID)), 1.0)

    def test_empty_set_is_negative_infinity(self):
        self.assertEqual(sup_over(self.f, GridSet.empty(GRID)), NEG_INF)
        self.assertEqual(inf_over(self.f, GridSet.empty(GRID)), POS_INF)

    def test_lower_half(self):
        self.assertEqual(sup_over(self.f, GridSet.where(GRID, lambda s: s <= 0.5)), 0.5)

    def test_grid_mismatch(self):
        with self.assertRaises(GridMismatch):
            sup_over(self.f, GridSet.full(build_grid([(0, 1)], [5])))

    def test_sentinel_points_are_skipped(self):
        values = np.full(GRID.size, np.nan)
        values[3] = 7.0
        field = ScalarField(GRID, values, sentinel=True)
        self.assertEqual(sup_over(field, GridSet.full(GRID)), 7.0)

    def test_nan_needs_sentinel_flag(self):
        with self.assertRaises(ValueError):
            ScalarField(GRID, np.full(GRID.size, np.nan))

    @settings(max_examples=50, deadline=None)
    @given(fields, masks, masks)
    def test_sup_of_union(self, f, a, b):
        self.assertEqual(sup_over(f, a | b), max(sup_over(f, a), sup_over(f, b)))


class TubeSetTests(SimpleTestCase):
    def test_sine_zero_set(self):
        grid = build_grid([(0, 1)], [401])
        f = evaluate(grid, lambda s: np.sin(2 * np.pi * s), zero_atol=1e-12)
        zeros = tube_set(f, 0.0, 0.0)
        np.testing.assert_array_equal(zeros.points()[:, 0], [0.0, 0.5, 1.0])

    def test_constant_outside_band(self):
        self.assertTrue(tube_set(ScalarField.constant(GRID, 1.0), -0.5, 0.5).is_empty())

    def test_unbounded_band(self):
        f = evaluate(GRID, lambda s: s)
        self.assertEqual(tube_set(f, -math.inf, math.inf), GridSet.full(GRID))

    def test_reversed_band(self):
        with self.assertRaises(InvalidInterval):
            tube_set(ScalarField.constant(GRID, 0.0), 1.0, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(fields, st.floats(-10, 10), st.floats(-10, 10))
    def test_split_bounds(self, f, lo, hi):
        lo, hi = min(lo, hi), max(lo, hi)
        self.assertEqual(tube_set(f, lo, hi), tube_set(f, lo, math.inf) & tube_set(f, -math.inf, hi))


class SerializationTests(SimpleTestCase):
    def test_rle_round_trip(self):
        mask = GridSet.where(GRID, lambda s: (s > 0.2) & (s < 0.6))
        data = GridSetRLESerializer(mask).data
        self.assertEqual(data['rle'][0], 5)
        parsed = GridSetRLESerializer(data=json.loads(json.dumps(data)))
        self.assertTrue(parsed.is_valid(), parsed.errors)
        self.assertEqual(parsed.save(), mask)

    def test_rle_starting_inside(self):
        data = GridSetRLESerializer(GridSet.full(GRID)).data
        self.assertEqual(data['rle'], [0, GRID.size])

    def test_rle_length_checked(self):
        parsed = GridSetRLESerializer(data={'grid': GRID.as_dict(), 'rle': [3, 4]})
        self.assertFalse(parsed.is_valid())
        self.assertIn('rle', parsed.errors)

    def test_csv_mask(self):
        mask = GridSet.where(GRID, lambda s: s >= 0.5)
        text = gridset_to_csv(mask)
        self.assertEqual(text.splitlines()[0], 'inside')
        self.assertEqual(gridset_from_csv(text, GRID), mask)

    def test_field_csv_has_coordinates(self):
        text = field_to_csv(evaluate(build_grid([(0, 1), (0, 1)], [2, 2]), lambda x, y: x + y))
        lines = text.splitlines()
        self.assertEqual(lines[0], 'x,y,value')
        self.assertEqual(lines[-1], '1.0,1.0,2.0')

    def test_grid_serializer_rejects_reversed_axis(self):
        parsed = DomainGridSerializer(data={'extents': [[1, 0]], 'points': [5]})
        self.assertFalse(parsed.is_valid())
