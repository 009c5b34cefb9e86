import json
import math

import numpy as np
from django.test import SimpleTestCase, tag
from hypothesis import given, settings, strategies as st

from core.exceptions import (
    EmptyPiece, GridMismatch, InvalidSchedule, ScheduleTooCoarse, UnknownFixture,
)
from domain.grid import GridSet, ScalarField, build_grid, evaluate, grid_closure
from .fields import FunctionFamily, PartitionLabeling, PiecewiseField, extend_piece
from .fixtures import load_fixture, mid_bdd
from .limits import liminf_set, limsup_plus_set, verify_sup_sandwich
from .restraint import (
    check_restrained_bound, check_sum_condition, exceptional_set, within_graph_tube,
)
from .serializers import RestraintReportSerializer, SandwichResultSerializer, SumConditionSerializer

# Shorter ladder for the cheaper checks.
QUICK = (tuple(2 ** k for k in range(6, 13)), (0.2, 0.1, 0.05, 0.025))


def index_of(grid, value):
    return int(grid.nearest_index([[value]])[0])


class ExtendPieceTests(SimpleTestCase):
    def test_basic_right_piece_at_the_jump(self):
        limit = load_fixture('basic').limit
        self.assertEqual(limit.extension(2).values[index_of(limit.grid, 0.5)], 0.0)

    def test_mid_bdd_left_piece_at_the_jump(self):
        limit = load_fixture('mid_bdd').limit
        at_half = index_of(limit.grid, 0.5)
        self.assertEqual(limit.base.values[at_half], 0.0)
        self.assertEqual(limit.extension(1).values[at_half], 1.0)

    def test_constant_field(self):
        grid = build_grid([(0, 1)], 11)
        partition = PartitionLabeling.from_rule(grid, (0, 1), lambda s: (s > 0.3).astype(int))
        ext = extend_piece(ScalarField.constant(grid, 2.5), partition, 0)
        closure = grid_closure(partition.piece(0))
        np.testing.assert_array_equal(ext.values[closure.mask], 2.5)
        self.assertTrue(np.isnan(ext.values[~closure.mask]).all())

    def test_ties_go_to_lowest_index(self):
        grid = build_grid([(0, 1)], 5)
        partition = PartitionLabeling(grid, [1, 0, 1, 0, 1], (0, 1))
        field = ScalarField(grid, [0, 10, 20, 30, 40])
        self.assertEqual(extend_piece(field, partition, 0).values[2], 10.0)

    def test_empty_piece(self):
        grid = build_grid([(0, 1)], 5)
        partition = PartitionLabeling(grid, np.zeros(5, dtype=int), (0, 1))
        with self.assertRaises(EmptyPiece):
            extend_piece(ScalarField.constant(grid, 0.0), partition, 1)

    def test_classifier_closure_includes_boundary_point(self):
        limit = load_fixture('basic').limit
        closure = limit.partition.closure_of(2)
        half = index_of(limit.grid, 0.5)
        self.assertTrue(closure.mask[half])
        self.assertFalse(closure.mask[half - 1])


class LimitSetTests(SimpleTestCase):
    def setUp(self):
        self.fixture = load_fixture('mid_bdd')
        self.grid = self.fixture.grid
        self.h = self.grid.max_spacing

    def test_decreasing_sequence_liminf(self):
        expected = GridSet.where(self.grid, lambda s: s >= 0.5)
        self.assertEqual(liminf_set(self.fixture.sets), expected)

    def test_decreasing_sequence_is_plain_intersection(self):
        total = self.fixture.sets[0]
        for item in self.fixture.sets[1:]:
            total = total & item
        self.assertEqual(liminf_set(self.fixture.sets), total)

    def test_constant_and_alternating(self):
        a = GridSet.where(self.grid, lambda s: s < 0.3)
        empty = GridSet.empty(self.grid)
        self.assertEqual(liminf_set([a, a, a]), a)
        self.assertTrue(liminf_set([a, empty, a, empty]).is_empty())
        self.assertTrue(liminf_set([a, empty, a, empty], period=2).is_empty())

    def test_upper_limit_on_the_open_piece(self):
        result = limsup_plus_set(self.fixture.sets, self.fixture.limit.partition, 1)
        points = result.points()[:, 0]
        self.assertIn(0.5, points.tolist())
        self.assertGreaterEqual(points.min(), 0.5 - 2 * self.h - 1e-12)
        self.assertLessEqual(points.max(), 0.5 + 1e-12)

    def test_upper_limit_on_the_closed_piece(self):
        result = limsup_plus_set(self.fixture.sets, self.fixture.limit.partition, 2)
        self.assertTrue(GridSet.where(self.grid, lambda s: s >= 0.5) <= result)
        self.assertGreaterEqual(result.points()[:, 0].min(), 0.5 - self.h - 1e-12)

    def test_constant_piece_sequence(self):
        partition = self.fixture.limit.partition
        piece = partition.piece(2)
        self.assertEqual(limsup_plus_set([piece] * 4, partition, 2), grid_closure(piece))

    def test_liminf_lies_in_own_upper_limit(self):
        partition = self.fixture.limit.partition
        lower = liminf_set(self.fixture.sets)
        for key, piece in partition.pieces().items():
            self.assertTrue((lower & piece) <= limsup_plus_set(self.fixture.sets, partition, key))

    def test_grid_mismatch(self):
        other = GridSet.full(build_grid([(0, 1)], 11))
        with self.assertRaises(GridMismatch):
            liminf_set([GridSet.full(self.grid), other])


class RestrainedBoundTests(SimpleTestCase):
    def test_basic_converges_with_restraint(self):
        fixture = load_fixture('basic')
        report = check_restrained_bound(fixture.family, fixture.limit, side='both')
        self.assertTrue(report.passed, report)
        self.assertEqual(report.schedule['n'][-1], 2 ** 14)

    def test_bad_converge_fails_at_the_jump(self):
        fixture = load_fixture('bad_converge')
        report = check_restrained_bound(fixture.family, fixture.limit, QUICK)
        self.assertFalse(report.passed)
        # the unit bump rides on (1 - 1/(5n))^n, about exp(-1/5)
        self.assertGreater(report.worst_violation, 0.5)
        self.assertEqual(report.witness.label, 2)
        self.assertLessEqual(abs(report.witness.point[0] - 0.5), fixture.grid.max_spacing)

    def test_bad_converge_weak_fails_by_about_one(self):
        fixture = load_fixture('bad_converge_weak')
        report = check_restrained_bound(fixture.family, fixture.limit, QUICK)
        self.assertFalse(report.passed)
        self.assertGreaterEqual(report.worst_violation, 0.9)
        self.assertEqual(report.witness.label, 2)
        self.assertLessEqual(abs(report.witness.point[0] - 0.5), fixture.grid.max_spacing)

    def test_mid_bdd_converges_with_restraint(self):
        fixture = load_fixture('mid_bdd')
        self.assertTrue(check_restrained_bound(fixture.family, fixture.limit, QUICK, side='both').passed)

    def test_uniform_convergence_passes(self):
        grid = build_grid([(0, 1)], 501)
        limit = PiecewiseField.continuous(evaluate(grid, lambda s: np.sin(2 * np.pi * s)))
        family = FunctionFamily(lambda n, s: np.sin(2 * np.pi * s) + 1 / n)
        self.assertTrue(check_restrained_bound(family, limit, QUICK, side='both').passed)

    def test_uniform_shift_of_a_step_passes(self):
        fixture = load_fixture('basic')
        family = FunctionFamily(lambda n, s: np.where(s <= 0.5, 1.0, 0.0) + 1 / n)
        self.assertTrue(check_restrained_bound(family, fixture.limit, QUICK, side='both').passed)

    def test_symmetric_difference_spike_is_not_restrained(self):
        fixture = load_fixture('symdiff4')
        report = check_restrained_bound(fixture.family, fixture.limit, (QUICK[0], (0.8, 0.4, 0.2, 0.1)))
        self.assertFalse(report.passed)
        self.assertAlmostEqual(report.worst_violation, 4 / 3, delta=0.05)

    def test_delta_below_spacing(self):
        fixture = load_fixture('basic')
        with self.assertRaises(ScheduleTooCoarse):
            check_restrained_bound(fixture.family, fixture.limit, ((16, 32), (0.1, 0.0001)))

    def test_ladders_must_be_monotone(self):
        fixture = load_fixture('basic')
        with self.assertRaises(InvalidSchedule):
            check_restrained_bound(fixture.family, fixture.limit, ((32, 16), (0.1, 0.05)))
        with self.assertRaises(InvalidSchedule):
            check_restrained_bound(fixture.family, fixture.limit, ((16, 32), (0.05, 0.1)))

    def test_report_serializes(self):
        fixture = load_fixture('bad_converge')
        report = check_restrained_bound(fixture.family, fixture.limit, QUICK)
        data = json.loads(json.dumps(RestraintReportSerializer(report).data))
        self.assertFalse(data['passed'])
        self.assertEqual(data['witness']['label'], 2)
        self.assertEqual(data['schedule']['delta'], list(QUICK[1]))


class SumConditionTests(SimpleTestCase):
    def test_single_piece_holds(self):
        grid = build_grid([(0, 1)], 51)
        f = PiecewiseField.continuous(evaluate(grid, lambda s: s ** 2))
        g = load_fixture('basic', points=51).limit
        self.assertTrue(check_sum_condition(f, g).holds)
        self.assertTrue(check_sum_condition(g, f).holds)

    def test_matching_steps_hold(self):
        f = load_fixture('basic').limit
        holds, violations = check_sum_condition(f, f)
        self.assertTrue(holds)
        self.assertEqual(violations, [])

    def test_spike_decomposition_fails_at_origin(self):
        first, second = load_fixture('symdiff4').extras['sum_fields']
        self.assertEqual(exceptional_set(first.partition, second.partition).points()[:, 0].tolist(), [0.0])
        result = check_sum_condition(first, second)
        self.assertFalse(result.holds)
        self.assertEqual(result.violations, [((0.0,), 1, 1)])
        self.assertEqual(SumConditionSerializer(result).data['violations'][0]['i'], 1)

    def test_grid_mismatch(self):
        with self.assertRaises(GridMismatch):
            check_sum_condition(load_fixture('basic').limit, load_fixture('basic', points=51).limit)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_continuous_partner_always_holds(self, a, b):
        grid = build_grid([(0, 1)], 21)
        step = PiecewiseField.from_partition(
            evaluate(grid, lambda s: np.where(s < 0.5, a, b)),
            PartitionLabeling.from_rule(grid, (0, 1), lambda s: (s >= 0.5).astype(int)),
        )
        flat = PiecewiseField.continuous(evaluate(grid, lambda s: a * s))
        self.assertTrue(check_sum_condition(step, flat).holds)


class GraphTubeTests(SimpleTestCase):
    def test_left_sequence_lies_in_the_tube(self):
        fixture = load_fixture('all3_res_left')
        self.assertTrue(within_graph_tube(fixture.family, fixture.limit, 100, 0.1))

    def test_bump_sequence_leaves_the_tube(self):
        fixture = load_fixture('bad_converge')
        for n in (1, 10, 100):
            self.assertFalse(within_graph_tube(fixture.family, fixture.limit, n, 0.1))

    def test_limit_itself_is_inside(self):
        fixture = load_fixture('basic')
        family = FunctionFamily(lambda n, s: np.where(s <= 0.5, 1.0, 0.0))
        self.assertTrue(within_graph_tube(family, fixture.limit, 50, 0.01))


class SandwichTests(SimpleTestCase):
    def sandwich(self, name):
        fixture = load_fixture(name)
        return verify_sup_sandwich(fixture.family, fixture.limit, fixture.sets,
                                   fixture.sandwich_ladder, fixture.anchors)

    def test_mid_bdd_strictly_between(self):
        lower_ok, upper_ok, values = self.sandwich('mid_bdd')
        self.assertTrue(lower_ok and upper_ok)
        np.testing.assert_allclose(values, (0.0, 0.5, 1.0), atol=1e-9)

    @tag('slow')
    def test_mid_bdd_on_a_finer_grid_and_longer_ladder(self):
        fixture = mid_bdd(points=4001, count=2 ** 14)
        fine = verify_sup_sandwich(fixture.family, fixture.limit, fixture.sets,
                                   (2 ** 10, 2 ** 12, 2 ** 14), fixture.anchors)
        np.testing.assert_allclose(fine.values, self.sandwich('mid_bdd').values, atol=1e-3)
        self.assertEqual(fine.n, 2 ** 14)

    def test_basic_closed_set(self):
        result = self.sandwich('basic')
        self.assertTrue(result.lower_ok and result.upper_ok)
        np.testing.assert_allclose(result.values, (1.0, 1.0, 1.0))

    def test_upper_side_tracks_restraint(self):
        for name, restrained in (('basic', True), ('all3_res_left', True), ('mid_bdd', True),
                                 ('bad_converge', False), ('bad_converge_weak', False)):
            result = self.sandwich(name)
            self.assertTrue(result.lower_ok, name)
            self.assertEqual(result.upper_ok, restrained, name)

    def test_constant_family(self):
        grid = build_grid([(0, 1)], 101)
        f = PiecewiseField.continuous(evaluate(grid, lambda s: s))
        family = FunctionFamily.constant(lambda s: s)
        result = verify_sup_sandwich(family, f, [GridSet.full(grid)] * 3, [1, 2, 3])
        np.testing.assert_allclose(result.values, (1.0, 1.0, 1.0))

    def test_serializes(self):
        data = SandwichResultSerializer(self.sandwich('mid_bdd')).data
        self.assertAlmostEqual(data['values']['middle'], 0.5)


class FixtureTests(SimpleTestCase):
    def test_unknown_fixture(self):
        with self.assertRaises(UnknownFixture):
            load_fixture('no_such_example')

    def test_spike_height_is_the_same_for_every_n(self):
        fixture = load_fixture('symdiff4')
        heights = []
        for n in (4, 100, 10000):
            s = np.linspace(0, 2 / math.sqrt(n), 30001)
            heights.append(np.abs(fixture.family.values(n, s[:, None])).max())
        self.assertLess(max(heights) - min(heights), 1e-2)
        self.assertAlmostEqual(heights[0], 4 / 3, places=3)
