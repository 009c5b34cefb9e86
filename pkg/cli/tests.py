import csv
import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase, TestCase, tag

from domain.grid import GridSet, build_grid
from experiments.models import CoverageRun
from experiments.scenarios import get_scenario
from .export import contour_parts, interval_parts
from .serializers import RunConfigSerializer


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def call(self, name, **options):
        stdout, stderr = StringIO(), StringIO()
        options.setdefault('output_dir', str(self.out))
        call_command(name, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue()

    def fails(self, name, **options):
        stderr = StringIO()
        options.setdefault('output_dir', str(self.out))
        with self.assertRaises(SystemExit) as caught:
            call_command(name, stdout=StringIO(), stderr=stderr, **options)
        return caught.exception.code, json.loads(stderr.getvalue())

    def config_file(self, document, name='run.json'):
        path = self.out / name
        path.write_text(json.dumps(document))
        return str(path)

    def read_json(self, *parts):
        return json.loads(self.out.joinpath(*parts).read_text())


class CoverageCommandTests(CommandTestCase):
    def test_short_run(self):
        summary = self.call('coverage', scenario='abs_sine_1d', alpha=0.1, R=10, B=100)
        self.assertIn('abs_sine_1d', summary)
        report = self.read_json('coverage', 'coverage.json')
        self.assertEqual(report['R'], 10)
        self.assertTrue(0 <= report['coverage'] <= 1)
        self.assertNotIn('runtime', report)
        manifest = self.read_json('coverage', 'coverage_manifest.json')
        self.assertEqual(manifest['config']['alpha'], 0.1)
        self.assertNotIn('workers', manifest['config'])
        self.assertIn('coverage.json', manifest['outputs'])
        run = CoverageRun.objects.get()
        self.assertEqual((run.scenario, run.R, run.application), ('abs_sine_1d', 10, 'absolute'))

    def test_alpha_out_of_range(self):
        code, error = self.fails('coverage', scenario='abs_sine_1d', alpha=1.5)
        self.assertEqual(code, 2)
        self.assertEqual(error['kind'], 'validation')
        self.assertIn('alpha', error['detail'])

    def test_unknown_scenario(self):
        code, error = self.fails('coverage', scenario='no_such_scenario')
        self.assertEqual(code, 2)
        self.assertIn('scenario', error['detail'])

    def test_scenario_is_required(self):
        code, error = self.fails('coverage')
        self.assertEqual(code, 2)
        self.assertIn('scenario', error['detail'])

    def test_too_few_bootstrap_replicates(self):
        code, error = self.fails('coverage', scenario='abs_sine_1d', B=50)
        self.assertEqual(code, 2)
        self.assertIn('B', error['detail'])


class RegionsCommandTests(CommandTestCase):
    def test_csv_outputs(self):
        self.call('regions', scenario='abs_sine_1d', B=100, seed=3)
        for name in ('lower.csv', 'upper.csv', 'upper_boundary.csv', 'lower_boundary.csv', 'report.json',
                     'mean_hat_1.csv', 'regions_manifest.json'):
            self.assertTrue((self.out / 'regions' / name).exists(), name)
        report = self.read_json('regions', 'report.json')
        self.assertEqual(report['B'], 100)
        self.assertEqual(report['seed'], 3)

    def test_rle_outputs(self):
        self.call('regions', scenario='conj_shift_1d', B=100, format='rle')
        upper = self.read_json('regions', 'upper.json')
        self.assertEqual(sum(upper['rle']), 401)

    def test_symmetric_difference_writes_geometry(self):
        self.call('regions', scenario='symdiff_spike_1d', B=100)
        self.assertTrue((self.out / 'regions' / 'n_set.csv').exists())
        self.assertIsNotNone(self.read_json('regions', 'report.json')['q_upper'])

    def test_two_dimensional_boundaries(self):
        self.call('regions', scenario='conj_shift_2d', B=100)
        with (self.out / 'regions' / 'upper_boundary.csv').open() as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['region', 'part', 'x', 'y'])
        self.assertGreater(len(rows), 1)

    def test_outputs_do_not_depend_on_workers(self):
        first, second = self.out / 'one', self.out / 'two'
        self.call('regions', scenario='conj_shift_1d', B=200, seed=9, workers=1, output_dir=str(first))
        self.call('regions', scenario='conj_shift_1d', B=200, seed=9, workers=3, output_dir=str(second))
        for name in ('upper.csv', 'lower.csv', 'report.json', 'upper_boundary.csv', 'regions_manifest.json'):
            self.assertEqual((first / 'regions' / name).read_bytes(), (second / 'regions' / name).read_bytes())

    def test_noise_model_block(self):
        config = self.config_file({'command': 'regions', 'scenario': 'conj_shift_1d', 'model': {'rho': 0.5}})
        correlated = self.out / 'correlated'
        self.call('regions', config=config, B=100, seed=6, output_dir=str(correlated))
        manifest = json.loads((correlated / 'regions' / 'regions_manifest.json').read_text())
        self.assertEqual(manifest['config']['model']['rho'], 0.5)
        self.assertEqual(manifest['config']['model']['covariance']['ell'], 0.2)
        independent = self.out / 'independent'
        self.call('regions', scenario='conj_shift_1d', B=100, seed=6, output_dir=str(independent))
        self.assertNotEqual((correlated / 'regions' / 'mean_hat_2.csv').read_bytes(),
                            (independent / 'regions' / 'mean_hat_2.csv').read_bytes())

    def test_input_stacks_match_simulation(self):
        scenario = get_scenario('conj_shift_1d')
        paths = []
        for k, sample in enumerate(scenario.draw(4), start=1):
            path = self.out / f"stack_{k}.csv"
            np.savetxt(path, sample.data, fmt='%.17g', delimiter=',')
            paths.append(str(path))
        simulated = self.out / 'simulated'
        self.call('regions', scenario='conj_shift_1d', B=100, seed=4, output_dir=str(simulated))
        loaded = self.out / 'loaded'
        config = self.config_file({'command': 'regions', 'scenario': 'conj_shift_1d', 'inputs': paths})
        self.call('regions', config=config, B=100, seed=4, output_dir=str(loaded))
        self.assertEqual((simulated / 'regions' / 'upper.csv').read_bytes(),
                         (loaded / 'regions' / 'upper.csv').read_bytes())

    def test_missing_input_is_a_runtime_error(self):
        config = self.config_file({
            'command': 'regions', 'scenario': 'abs_sine_1d', 'inputs': [str(self.out / 'missing.csv')],
        })
        code, error = self.fails('regions', config=config, B=100)
        self.assertEqual(code, 3)
        self.assertEqual(error['kind'], 'runtime')


class OtherCommandTests(CommandTestCase):
    def test_examples(self):
        config = self.config_file({'command': 'examples', 'fixtures': ['mid_bdd']})
        summary = self.call('examples', config=config)
        self.assertIn('2 of 2', summary)
        rows = self.read_json('examples', 'examples.json')
        self.assertEqual({row['check'] for row in rows}, {'restraint', 'sandwich'})

    def test_conditions(self):
        summary = self.call('conditions', scenario='conj_tangent_1d', B=100)
        self.assertIn('fails', summary)
        self.assertEqual(self.read_json('conditions', 'conditions.json')['witnesses'], [[0.5]])

    def test_quantile(self):
        self.call('quantile', scenario='abs_sine_1d', B=100, seed=2)
        result = self.read_json('quantile', 'quantile.json')
        self.assertAlmostEqual(result['level'], 0.9)
        self.assertEqual((result['samples']['B'], result['samples']['seed']), (100, 2))
        lines = (self.out / 'quantile' / 'bootstrap_samples.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'value')
        self.assertEqual(len(lines), 101)

    def test_run_dispatches_on_the_document(self):
        config = self.config_file({'command': 'quantile', 'scenario': 'abs_sine_1d', 'B': 100})
        self.call('run', config=config)
        self.assertTrue((self.out / 'quantile' / 'quantile_manifest.json').exists())

    def test_run_needs_a_document(self):
        code, error = self.fails('run')
        self.assertEqual(code, 2)
        self.assertIn('config', error['detail'])

    def test_malformed_document(self):
        path = self.out / 'broken.json'
        path.write_text('{"command": ')
        code, _ = self.fails('run', config=str(path))
        self.assertEqual(code, 2)

    @tag('slow')
    def test_every_example(self):
        summary = self.call('examples')
        rows = self.read_json('examples', 'examples.json')
        self.assertTrue(all(row['passed'] for row in rows), summary)


class RunConfigSerializerTests(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        serializer = RunConfigSerializer(data={'command': 'examples'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        data = serializer.validated_data
        self.assertEqual(data['B'], 1000)
        self.assertEqual(data['eta_c'], 1.0)
        self.assertEqual(data['format'], 'csv')

    def test_ranges(self):
        for field, value in (('n', 0), ('R', 0), ('seed', -1), ('workers', 0), ('eta_c', 0.0), ('alpha', 0.0)):
            with self.subTest(field=field):
                serializer = RunConfigSerializer(data={'command': 'coverage', 'scenario': 'abs_sine_1d', field: value})
                self.assertFalse(serializer.is_valid())
                self.assertIn(field, serializer.errors)

    def test_unknown_fixture(self):
        serializer = RunConfigSerializer(data={'command': 'examples', 'fixtures': ['nope']})
        self.assertFalse(serializer.is_valid())
        self.assertIn('fixtures', serializer.errors)

    def test_model_correlation_range(self):
        serializer = RunConfigSerializer(data={
            'command': 'coverage', 'scenario': 'conj_shift_1d', 'model': {'rho': 3},
        })
        self.assertFalse(serializer.is_valid())
        self.assertIn('model', serializer.errors)

    def test_grid_dimension_must_match(self):
        serializer = RunConfigSerializer(data={
            'command': 'regions', 'scenario': 'abs_sine_1d',
            'grid': {'extents': [[0, 1], [0, 1]], 'points': [11, 11]},
        })
        self.assertFalse(serializer.is_valid())
        self.assertIn('grid', serializer.errors)


class ExportTests(SimpleTestCase):
    def test_interval_endpoints(self):
        grid = build_grid([(0.0, 1.0)], [5])
        parts = interval_parts(GridSet(grid, [False, True, True, False, True]))
        self.assertEqual(parts, [[(0.25,), (0.5,)], [(1.0,), (1.0,)]])

    def test_disc_gives_one_closed_contour(self):
        grid = build_grid([(-1.0, 1.0), (-1.0, 1.0)], [41, 41])
        disc = GridSet.where(grid, lambda x, y: x ** 2 + y ** 2 < 0.25)
        parts = contour_parts(disc)
        self.assertEqual(len(parts), 1)
        points = np.array(parts[0])
        np.testing.assert_allclose(points[0], points[-1])
        radii = np.hypot(points[:, 0], points[:, 1])
        self.assertTrue(((radii > 0.4) & (radii < 0.6)).all())
