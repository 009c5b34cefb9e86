import io
import math

import numpy as np
from django.test import SimpleTestCase, override_settings, tag
from hypothesis import given, settings, strategies as st
from scipy import stats

from core.exceptions import (
    BadLevel, CovarianceNotPSD, EmptyAllMasks, GridMismatch, InvalidModel, RandomFieldError, UnequalN,
)
from domain.grid import GridSet, ScalarField, build_grid
from .bootstrap import SupSamples, bootstrap_sup, quantile
from .estimators import estimate
from .gaussian import (
    FieldSample, GaussianFieldModel, _cholesky_factor, mixing_matrix, sample_correlated, sample_fields,
)
from .serializers import GaussianModelSerializer
from .statistics import Abs, Field, Inf, Max, MaxOf, Min, Neg, Sup, SymDiff, evaluate, sup_abs

LINE = build_grid([(0.0, 1.0)], [51])


def zero_model(grid=LINE, **kwargs):
    return GaussianFieldModel(ScalarField.constant(grid, 0.0), **kwargs)


def residuals_for(n=200, grid=LINE, seed=3):
    return estimate(sample_fields(zero_model(grid), grid, n, seed)).residuals


class GaussianModelTests(SimpleTestCase):
    def test_invalid_parameters(self):
        for kwargs in ({'kind': 'matern'}, {'var': 0.0}, {'ell': -1.0}, {'rho': 1.5},
                       {'kind': 'smoothed_white', 'kernel_width': 0.0}):
            with self.subTest(**kwargs), self.assertRaises(InvalidModel):
                zero_model(**kwargs)

    def test_self_correlation_is_one(self):
        model = zero_model(var=2.5)
        cov = model.covariance(LINE.coordinates[:3])
        np.testing.assert_allclose(np.diag(cov) / 2.5, 1.0)

    def test_smoothed_white_matches_se_with_scaled_width(self):
        se = zero_model(ell=0.2)
        white = zero_model(kind='smoothed_white', kernel_width=0.2 / math.sqrt(2))
        points = LINE.coordinates
        np.testing.assert_allclose(se.covariance(points), white.covariance(points))


class SampleFieldsTests(SimpleTestCase):
    def test_pointwise_variance(self):
        sample = sample_fields(zero_model(ell=0.2, var=1.0), LINE, 40000, seed=11)
        variance = sample.data.var(axis=0)
        self.assertTrue(np.all((variance > 0.95) & (variance < 1.05)), variance)

    def test_same_seed_same_sample(self):
        model = zero_model()
        first = sample_fields(model, LINE, 20, seed=5)
        second = sample_fields(model, LINE, 20, seed=5)
        np.testing.assert_array_equal(first.data, second.data)
        self.assertFalse(np.array_equal(first.data, sample_fields(model, LINE, 20, seed=6).data))

    def test_mean_is_added(self):
        mean = ScalarField(LINE, np.linspace(-1, 1, LINE.size))
        sample = sample_fields(GaussianFieldModel(mean, var=1e-10), LINE, 3, seed=0)
        np.testing.assert_allclose(sample.data, np.tile(mean.values, (3, 1)), atol=1e-3)

    def test_sample_is_read_only(self):
        sample = sample_fields(zero_model(), LINE, 2, seed=0)
        with self.assertRaises(ValueError):
            sample.data[0, 0] = 1.0

    def test_grid_mismatch(self):
        with self.assertRaises(GridMismatch):
            sample_fields(zero_model(), build_grid([(0, 1)], [11]), 2, seed=0)

    def test_jitter_escalation_is_logged(self):
        grid = build_grid([(0.0, 1.0)], [200])
        _cholesky_factor.cache_clear()
        with self.assertLogs('randfield.gaussian', level='WARNING'):
            sample_fields(zero_model(grid, ell=1.0), grid, 2, seed=0)

    def test_hopeless_covariance(self):
        grid = build_grid([(0.0, 1.0)], [400])
        _cholesky_factor.cache_clear()
        with self.assertRaises(CovarianceNotPSD):
            _cholesky_factor(grid, 1e6, -1.0)

    def test_convolution_path_variance(self):
        grid = build_grid([(0.0, 1.0), (0.0, 1.0)], [70, 70])
        model = zero_model(grid, kind='smoothed_white', kernel_width=0.05)
        sample = sample_fields(model, grid, 400, seed=2)
        self.assertEqual(sample.data.shape, (400, grid.size))
        self.assertAlmostEqual(float(sample.data.var(axis=0).mean()), 1.0, delta=0.1)


class CorrelatedSampleTests(SimpleTestCase):
    def test_cross_correlation(self):
        grid = build_grid([(0.0, 1.0)], [11])
        models = [zero_model(grid), zero_model(grid)]
        first, second = sample_correlated(models, grid, 4000, seed=8, rho=0.6)
        corr = np.corrcoef(first.data[:, 5], second.data[:, 5])[0, 1]
        self.assertAlmostEqual(corr, 0.6, delta=0.05)

    def test_equicorrelation_must_be_valid(self):
        with self.assertRaises(InvalidModel):
            mixing_matrix(3, -1.0)

    def test_mixing_matrix_reproduces_correlation(self):
        root = mixing_matrix(3, 0.3)
        np.testing.assert_allclose(root @ root.T, [[1, .3, .3], [.3, 1, .3], [.3, .3, 1]], atol=1e-12)


class EstimateTests(SimpleTestCase):
    def test_constant_replicates(self):
        result = estimate(FieldSample(LINE, np.full((5, LINE.size), 2.0), seed=0))
        np.testing.assert_array_equal(result.mean_hat.values, 2.0)
        np.testing.assert_array_equal(result.sd_hat.values, 0.0)

    def test_rate(self):
        self.assertEqual(estimate(sample_fields(zero_model(), LINE, 4, seed=0)).tau_n, 0.5)

    def test_residuals_sum_to_zero(self):
        result = estimate(sample_fields(zero_model(), LINE, 50, seed=1))
        scale = np.abs(result.residuals).max()
        np.testing.assert_allclose(result.residuals.sum(axis=0), 0.0, atol=1e-12 * scale * 50)

    def test_single_replicate_sd_is_sentinel(self):
        result = estimate(sample_fields(zero_model(), LINE, 1, seed=1))
        self.assertTrue(result.sd_hat.sentinel)
        self.assertTrue(np.isnan(result.sd_hat.values).all())


class RecipeTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid([(0.0, 1.0)], [5])
        self.fields = {
            'J1': ScalarField(self.grid, [-2, -1, 0, 1, 2]),
            'J2': ScalarField(self.grid, [1, 1, 1, 1, 1]),
        }
        self.masks = {
            'all': GridSet.full(self.grid),
            'none': GridSet.empty(self.grid),
            'left': GridSet(self.grid, [1, 1, 0, 0, 0]),
        }

    def test_canonical_ids(self):
        recipe = MaxOf((Sup(Neg(Min((Field('J1'), Field('J2')))), 'left'), sup_abs('J1', 'all')))
        self.assertEqual(str(recipe), 'maxof(sup[left](-(min(J1, J2))), sup[all](|J1|))')
        self.assertEqual(recipe.mask_names(), {'left', 'all'})
        self.assertEqual(recipe.field_names(), {'J1', 'J2'})

    def test_empty_mask_conventions(self):
        self.assertEqual(evaluate(Sup(Field('J1'), 'none'), self.fields, self.masks), -math.inf)
        self.assertEqual(evaluate(Inf(Field('J1'), 'none'), self.fields, self.masks), math.inf)

    def test_deterministic_values(self):
        self.assertEqual(evaluate(sup_abs('J1', 'left'), self.fields, self.masks), 2.0)
        self.assertEqual(evaluate(Sup(Max((Field('J1'), Field('J2'))), 'left'), self.fields, self.masks), 1.0)
        self.assertEqual(evaluate(Inf(Abs(Field('J1')), 'all'), self.fields, self.masks), 0.0)

    def test_symdiff_positive_where_exactly_one_is(self):
        values = evaluate(SymDiff(Field('J1'), Field('J2')), self.fields, self.masks)
        np.testing.assert_array_equal(values > 0, [True, True, False, False, False])

    def test_batched_evaluation(self):
        batch = {'J1': np.array([[1.0, -3.0, 0, 0, 0], [0, 0, 0, 0, 5.0]])}
        np.testing.assert_array_equal(sup_abs('J1', 'all').evaluate(batch, self.masks), [3.0, 5.0])

    def test_maxof_ignores_empty_parts(self):
        recipe = MaxOf((Sup(Field('J1'), 'none'), Sup(Field('J1'), 'left')))
        self.assertEqual(evaluate(recipe, self.fields, self.masks), -1.0)


class BootstrapTests(SimpleTestCase):
    def setUp(self):
        self.residuals = residuals_for()
        self.everywhere = {'all': GridSet.full(LINE)}

    def test_zero_residuals(self):
        zeros = np.zeros((20, LINE.size))
        samples = bootstrap_sup(zeros, self.everywhere, sup_abs('G', 'all'), 200, seed=1, studentize=False)
        np.testing.assert_array_equal(samples.values, 0.0)

    def test_too_few_replicates(self):
        with self.assertRaises(RandomFieldError):
            bootstrap_sup(self.residuals, self.everywhere, sup_abs('G', 'all'), 50, seed=1)

    def test_all_masks_empty(self):
        masks = {'none': GridSet.empty(LINE)}
        with self.assertRaises(EmptyAllMasks):
            bootstrap_sup(self.residuals, masks, sup_abs('G', 'none'), 100, seed=1)
        samples = bootstrap_sup(self.residuals, masks, sup_abs('G', 'none'), 100, seed=1, allow_empty=True)
        self.assertTrue(samples.empty)
        self.assertTrue(np.isneginf(samples.values).all())
        self.assertTrue(quantile(samples, 0.9).fallback)

    def test_unequal_replicate_counts(self):
        with self.assertRaises(UnequalN):
            bootstrap_sup({'J1': self.residuals, 'J2': self.residuals[:-1]}, self.everywhere,
                          sup_abs('J1', 'all'), 100, seed=1)

    def test_nested_masks(self):
        inner = GridSet.where(LINE, lambda s: s < 0.3)
        masks = {'inner': inner, 'outer': inner | GridSet.where(LINE, lambda s: s > 0.8)}
        small = bootstrap_sup(self.residuals, masks, sup_abs('G', 'inner'), 300, seed=4)
        large = bootstrap_sup(self.residuals, masks, sup_abs('G', 'outer'), 300, seed=4)
        self.assertTrue(np.all(large.values >= small.values))
        for level in (0.5, 0.9, 0.95):
            self.assertGreaterEqual(float(quantile(large, level)), float(quantile(small, level)))

    def test_permuted_observations_with_ids(self):
        order = np.random.default_rng(0).permutation(self.residuals.shape[0])
        recipe = sup_abs('G', 'all')
        plain = bootstrap_sup(self.residuals, self.everywhere, recipe, 200, seed=9)
        permuted = bootstrap_sup(self.residuals[order], self.everywhere, recipe, 200, seed=9, ids=order)
        np.testing.assert_allclose(plain.values, permuted.values, rtol=1e-10)

    @override_settings(EXCURSION_WORKERS=3)
    def test_worker_count_does_not_change_values(self):
        recipe = sup_abs('G', 'all')
        threaded = bootstrap_sup(self.residuals, self.everywhere, recipe, 500, seed=2)
        serial = bootstrap_sup(self.residuals, self.everywhere, recipe, 500, seed=2, workers=1)
        np.testing.assert_array_equal(threaded.values, serial.values)

    def test_csv_export(self):
        samples = SupSamples([1.5, -math.inf], 2, 'sup[all](|G|)', seed=0)
        buffer = io.StringIO()
        samples.to_csv(buffer)
        self.assertEqual(buffer.getvalue().splitlines(), ['value', '1.5', '-inf'])

    @tag('slow')
    def test_single_point_calibration(self):
        grid = build_grid([(0.0, 1.0)], [2])
        residuals = residuals_for(n=200, grid=grid, seed=21)
        masks = {'point': GridSet(grid, [True, False])}
        samples = bootstrap_sup(residuals, masks, Sup(Field('G'), 'point'), 100000, seed=7)
        q = float(quantile(samples, 0.95))
        self.assertTrue(1.595 <= q <= 1.695, q)
        self.assertLess(stats.kstest(samples.values, 'norm').statistic, 0.02)


class QuantileTests(SimpleTestCase):
    def samples(self, values):
        return SupSamples(values, len(values), 'test', seed=0)

    def test_rank_rule(self):
        self.assertEqual(float(quantile(self.samples(np.arange(1, 101)), 0.95)), 95.0)

    def test_constant_samples(self):
        self.assertEqual(float(quantile(self.samples([2.5] * 10), 0.3)), 2.5)

    def test_ties_at_the_order_statistic(self):
        self.assertEqual(quantile(self.samples([2.5] * 10), 0.3).ties, 10)
        self.assertEqual(quantile(self.samples(np.arange(1, 101)), 0.95).ties, 1)

    def test_bad_level(self):
        for level in (0, 1, 1.5, -0.1):
            with self.subTest(level=level), self.assertRaises(BadLevel):
                quantile(self.samples([1.0]), level)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=60),
        st.floats(min_value=0.01, max_value=0.99),
        st.floats(min_value=0.01, max_value=0.99),
    )
    def test_nondecreasing_in_level(self, values, a, b):
        low, high = sorted((a, b))
        samples = self.samples(values)
        self.assertLessEqual(float(quantile(samples, low)), float(quantile(samples, high)))


class GaussianModelSerializerTests(SimpleTestCase):
    def test_defaults(self):
        serializer = GaussianModelSerializer(data={})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        model = serializer.build(ScalarField.constant(LINE, 0.0))
        self.assertEqual((model.kind, model.ell, model.var, model.rho), ('se', 0.2, 1.0, 0.0))

    def test_round_trip_block(self):
        block = {'covariance': {'kind': 'smoothed_white', 'ell': 0.2, 'var': 2.0, 'kernel_width': 0.1},
                 'rho': 0.5}
        serializer = GaussianModelSerializer(data=block)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        model = serializer.build(ScalarField.constant(LINE, 0.0))
        self.assertEqual(GaussianModelSerializer(model).data, block)

    def test_rejects_bad_rho(self):
        serializer = GaussianModelSerializer(data={'rho': 2})
        self.assertFalse(serializer.is_valid())
        self.assertIn('rho', serializer.errors)
