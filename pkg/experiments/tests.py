import csv
import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, TestCase, tag

from core.exceptions import BadR, UnknownFixture, UnknownScenario
from domain.grid import ScalarField, build_grid
from regions.applications import BootstrapConfig
from .conditions import check_conditions, discrete_zero_set
from .coverage import CALIBRATED_ETA_C, CoverageReport, run_coverage, wilson_interval
from .models import CoverageRun
from .reproduce import SPIKE_HEIGHT, reproduce_examples
from .scenarios import SCENARIOS, Scenario, get_scenario
from .serializers import CSV_COLUMNS, CoverageReportSerializer, ExampleRowSerializer, append_coverage_csv

QUICK = (tuple(2 ** k for k in range(6, 13)), (0.2, 0.1, 0.05, 0.025))
SPIKE_LADDER = (QUICK[0], (0.8, 0.4, 0.2, 0.1))
FAST = BootstrapConfig(B=100, seed=1)


def report(**overrides):
    values = dict(scenario='abs_sine_1d', application='absolute', alpha=0.1, n=200, B=1000, R=10,
                  hits=9, seed=0, q_mean=2.1, ci_lo=0.6, ci_hi=0.98, runtime=1.5)
    values.update(overrides)
    return CoverageReport(**values)


class ScenarioTests(SimpleTestCase):
    def test_registry(self):
        for name in ('abs_sine_1d', 'abs_circles_2d', 'conj_shift_1d', 'conj_shift_2d', 'disj_shift_1d',
                     'symdiff_venn_2d', 'symdiff_spike_1d', 'conj_tangent_1d', 'zero_plateau_1d'):
            self.assertEqual(get_scenario(name).id, name)
        with self.assertRaises(UnknownScenario):
            get_scenario('no_such_scenario')

    def test_truths_live_on_the_scenario_grid(self):
        for scenario in SCENARIOS.values():
            with self.subTest(scenario=scenario.id):
                self.assertEqual(scenario.truth_target().grid, scenario.grid)
                self.assertEqual(len(scenario.models()), len(scenario.truths))

    def test_sine_vanishes_exactly_at_three_points(self):
        lower, upper = get_scenario('abs_sine_1d').truth_sets()
        self.assertTrue(lower.is_empty())
        self.assertEqual(upper.count(), 398)

    def test_spike_truth(self):
        scenario = get_scenario('symdiff_spike_1d')
        s = scenario.grid.coordinates[:, 0]
        np.testing.assert_allclose(scenario.truth_target().values, -s, atol=1e-12)

    def test_disjunction_uses_the_maximum(self):
        scenario = get_scenario('disj_shift_1d')
        first, second = scenario.truth_fields()
        self.assertEqual(scenario.mode, 'max')
        np.testing.assert_array_equal(scenario.truth_target().values, np.maximum(first.values, second.values))

    def test_draw_is_reproducible(self):
        scenario = get_scenario('conj_shift_1d')
        first, second = scenario.draw(11), scenario.draw(11)
        self.assertEqual(len(first), 2)
        self.assertEqual(first[0].n, 200)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.data, b.data)
        self.assertEqual(scenario.draw(11, n=5)[1].n, 5)

    def test_application_must_match_truth_count(self):
        with self.assertRaises(ValueError):
            Scenario('bad', 'absolute', (np.sin, np.cos), ((0.0, 1.0),), (11,))
        with self.assertRaises(ValueError):
            Scenario('bad', 'median', (np.sin,), ((0.0, 1.0),), (11,))


class CoverageTests(SimpleTestCase):
    def test_repetition_count_is_checked(self):
        for R in (0, -3, 1.5):
            with self.subTest(R=R), self.assertRaises(BadR):
                run_coverage('abs_sine_1d', 0.1, R, FAST)

    def test_infinite_quantile_always_covers(self):
        boot = BootstrapConfig(B=100, q_override=math.inf)
        for name in ('abs_sine_1d', 'conj_shift_1d', 'symdiff_spike_1d'):
            with self.subTest(scenario=name):
                result = run_coverage(name, 0.1, 3, boot, seed=4)
                self.assertEqual(result.hits, 3)
                self.assertEqual(result.coverage, 1.0)

    def test_identical_arguments_give_identical_reports(self):
        first = run_coverage('conj_shift_1d', 0.1, 3, FAST, seed=5, workers=1)
        second = run_coverage('conj_shift_1d', 0.1, 3, FAST, seed=5, workers=2)
        self.assertEqual(first, second)

    def test_larger_quantile_never_loses_hits(self):
        small = run_coverage('abs_sine_1d', 0.1, 6, BootstrapConfig(B=100, q_override=0.5), seed=8)
        large = run_coverage('abs_sine_1d', 0.1, 6, BootstrapConfig(B=100, q_override=3.0), seed=8)
        self.assertGreaterEqual(large.hits, small.hits)

    def test_vanishing_noise_covers(self):
        scenario = Scenario(
            'quiet_lines', 'conjunction', (lambda s: s - 0.3037, lambda s: 0.8037 - s),
            ((0.0, 1.0),), (101,), n=50, var=1e-8,
        )
        self.assertEqual(run_coverage(scenario, 0.1, 5, FAST, seed=2).coverage, 1.0)

    def test_symmetric_difference_checks_confinement(self):
        result = run_coverage('symdiff_spike_1d', 0.1, 2, FAST, seed=3)
        self.assertEqual(result.application, 'symdiff')
        self.assertTrue(0 <= result.hits <= 2)
        self.assertTrue(math.isfinite(result.q_mean))

    def test_calibrated_tube_is_narrower(self):
        scenario = get_scenario('abs_sine_1d')
        samples = scenario.draw(7)
        sizes = {}
        for c in (CALIBRATED_ETA_C, 1.0):
            boot = BootstrapConfig(B=100, seed=1, eta_c=c, q_override=2.0)
            regions, _ = scenario.construct(samples, 0.1, boot)
            sizes[c] = regions.diagnostics['tube_size']
        self.assertGreater(sizes[CALIBRATED_ETA_C], 0)
        self.assertLess(sizes[CALIBRATED_ETA_C], sizes[1.0])

    def test_runtime_is_ignored_by_equality(self):
        self.assertEqual(report(runtime=1.0), report(runtime=9.0))

    def test_wilson_interval(self):
        lo, hi = wilson_interval(90, 100)
        self.assertAlmostEqual(lo, 0.8256, delta=1e-3)
        self.assertAlmostEqual(hi, 0.9448, delta=1e-3)
        self.assertEqual(wilson_interval(0, 5)[0], 0.0)
        self.assertAlmostEqual(wilson_interval(5, 5)[1], 1.0)


@tag('slow')
class CoverageAcceptanceTests(SimpleTestCase):
    boot = BootstrapConfig(B=1000, seed=0, eta_c=CALIBRATED_ETA_C)

    def test_absolute_value(self):
        result = run_coverage('abs_sine_1d', 0.1, 2000, self.boot, seed=2024)
        self.assertGreaterEqual(result.coverage, 0.87)
        self.assertLessEqual(result.coverage, 0.93)

    def test_conjunction(self):
        result = run_coverage('conj_shift_1d', 0.1, 2000, self.boot, seed=2025)
        self.assertGreaterEqual(result.coverage, 0.87)
        self.assertLessEqual(result.coverage, 0.94)

    def test_symmetric_difference_is_conservative(self):
        result = run_coverage('symdiff_venn_2d', 0.1, 1000, self.boot, seed=2026)
        self.assertGreaterEqual(result.coverage, 0.87)


class ReproduceTests(SimpleTestCase):
    def rows(self, name, ladder=QUICK):
        return {row.check: row for row in reproduce_examples([name], {name: ladder})}

    def test_mid_bdd(self):
        rows = self.rows('mid_bdd')
        self.assertTrue(rows['restraint'].passed)
        self.assertTrue(rows['sandwich'].passed)
        self.assertAlmostEqual(rows['sandwich'].values['middle'], 0.5, places=6)

    def test_basic_passes_and_bad_converge_fails(self):
        self.assertEqual(self.rows('basic')['restraint'].observed, 'pass')
        rows = self.rows('bad_converge')
        self.assertTrue(rows['restraint'].observed.startswith('fail'))
        self.assertTrue(rows['restraint'].passed)
        self.assertEqual(rows['sandwich'].observed, 'upper side fails')

    def test_symdiff_spike(self):
        rows = self.rows('symdiff4', SPIKE_LADDER)
        self.assertEqual(set(rows), {'restraint', 'spike', 'sum_condition'})
        self.assertTrue(all(row.passed for row in rows.values()), rows)
        for n in ('25', '100', '400'):
            self.assertAlmostEqual(rows['spike'].values[n], SPIKE_HEIGHT, delta=1e-2)

    def test_unknown_fixture(self):
        with self.assertRaises(UnknownFixture):
            reproduce_examples(['no_such_example'])

    def test_rows_serialize(self):
        row = self.rows('mid_bdd')['sandwich']
        data = json.loads(json.dumps(ExampleRowSerializer(row).data))
        self.assertEqual(data['fixture'], 'mid_bdd')
        self.assertTrue(data['passed'])

    @tag('slow')
    def test_every_example_agrees(self):
        rows = reproduce_examples()
        self.assertTrue(all(row.passed for row in rows), [r for r in rows if not r.passed])


class ConditionTests(SimpleTestCase):
    def test_discrete_zero_set(self):
        grid = build_grid([(0.0, 1.0)], [5])
        zero = discrete_zero_set(ScalarField(grid, [1.0, 0.5, -2.0, -1.0, 0.0]))
        self.assertEqual(zero.indices().tolist(), [1, 4])

    def test_transversal_crossings_pass(self):
        result = check_conditions('conj_shift_1d', boot=FAST)
        self.assertTrue(result.closure_passed)
        self.assertEqual(result.witnesses, [])
        self.assertTrue(result.atom_free)

    def test_tangency_fails_with_a_witness(self):
        result = check_conditions('conj_tangent_1d', boot=FAST)
        self.assertFalse(result.closure_passed)
        self.assertEqual(result.witnesses, [(0.5,)])

    def test_zero_plateau_passes(self):
        result = check_conditions('zero_plateau_1d', boot=FAST)
        self.assertTrue(result.closure_passed)
        self.assertEqual(result.zero_set_size, 401)

    def test_symmetric_difference_diagnostics(self):
        result = check_conditions('symdiff_spike_1d', boot=FAST)
        # the two signals meet the double-zero piece at the origin only
        self.assertFalse(result.closure_passed)
        self.assertEqual(result.witnesses, [(0.0,)])
        self.assertIsNotNone(result.n_set_size)
        self.assertGreaterEqual(result.confinement_gap, 0.0)


class CoverageSerializerTests(SimpleTestCase):
    def test_json_leaves_out_runtime(self):
        data = CoverageReportSerializer(report()).data
        self.assertNotIn('runtime', data)
        self.assertAlmostEqual(data['coverage'], 0.9)
        self.assertEqual(data['wilson_ci'], [0.6, 0.98])

    def test_infinite_mean_quantile_is_null(self):
        self.assertIsNone(CoverageReportSerializer(report(q_mean=math.inf)).data['q_mean'])

    def test_csv_append(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'coverage.csv'
            append_coverage_csv(report(), path)
            append_coverage_csv(report(seed=1), path)
            with path.open() as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0], list(CSV_COLUMNS))
        self.assertEqual(len(rows), 3)
        self.assertEqual(rows[2][-1], '1')


class CoverageRunModelTests(TestCase):
    def test_record(self):
        run = CoverageRun.record(report(), 'absolute', {'command': 'coverage'})
        run.refresh_from_db()
        self.assertEqual(run.hits, 9)
        self.assertAlmostEqual(run.coverage, 0.9)
        self.assertEqual(run.config['command'], 'coverage')
        self.assertEqual(str(run), 'abs_sine_1d at alpha=0.1: 9/10')

    def test_infinite_mean_quantile_stored_as_null(self):
        run = CoverageRun.record(report(q_mean=math.inf), 'absolute')
        self.assertIsNone(CoverageRun.objects.get(pk=run.pk).q_mean)
