import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from core.exceptions import ConfinementViolation, GridMismatch, InvalidRate, NegativeQ, UnequalN
from domain.grid import GridSet, ScalarField, build_grid, evaluate, grid_closure
from piecewise.fields import PartitionLabeling
from piecewise.fixtures import load_fixture, spike_values
from randfield.bootstrap import bootstrap_sup
from randfield.estimators import estimate
from randfield.gaussian import FieldSample, GaussianFieldModel, sample_fields
from randfield.statistics import Field, MaxOf
from .applications import (
    BootstrapConfig, active_partition, conjunction_terms, cr_absolute, cr_conjunction, cr_piecewise,
    sided_terms,
)
from .boundaries import SIGN_PAIRS, estimate_u_sets, sign_partition
from .serializers import ConfidenceRegionsSerializer, RegionReportSerializer
from .symdiff import (
    check_ordering, confine, confinement_fields, cr_symmetric_difference, symdiff_geometry,
    symdiff_statistics,
)
from .thresholds import eta_rule, threshold_crs

UNIT = build_grid([(0.0, 1.0)], [101])
BOOT = BootstrapConfig(B=200, seed=3)


def at(grid, value):
    return int(grid.nearest_index([[value]])[0])


def noisy(rule, n, seed, grid=UNIT, var=1.0):
    model = GaussianFieldModel(evaluate(grid, rule, zero_atol=1e-12), var=var)
    return sample_fields(model, grid, n, seed)


class ThresholdTests(SimpleTestCase):
    def setUp(self):
        self.mu = evaluate(UNIT, lambda s: s - 0.5)

    def test_linear_field(self):
        regions = threshold_crs(self.mu, 0.1, 1.0)
        self.assertEqual(regions.upper, GridSet.where(UNIT, lambda s: s > 0.6))
        self.assertEqual(regions.lower, GridSet.where(UNIT, lambda s: s < 0.4))

    def test_zero_quantile(self):
        regions = threshold_crs(self.mu, 0.1, 0.0)
        self.assertEqual(regions.upper, GridSet(UNIT, self.mu.values > 0))
        self.assertEqual(regions.lower, GridSet(UNIT, self.mu.values < 0))

    def test_dominating_quantile(self):
        regions = threshold_crs(self.mu, 0.1, 1e9)
        self.assertTrue(regions.upper.is_empty() and regions.lower.is_empty())

    def test_infinite_quantile_empties_both(self):
        regions = threshold_crs(self.mu, 0.1, math.inf)
        self.assertTrue(regions.upper.is_empty() and regions.lower.is_empty())

    def test_scale_acts_like_a_larger_quantile(self):
        scaled = threshold_crs(self.mu, 0.1, 1.0, scale=np.full(UNIT.size, 2.0))
        self.assertEqual(scaled.upper, threshold_crs(self.mu, 0.1, 2.0).upper)

    def test_errors(self):
        with self.assertRaises(NegativeQ):
            threshold_crs(self.mu, 0.1, -0.5)
        with self.assertRaises(InvalidRate):
            threshold_crs(self.mu, 0.0, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(min_value=-5, max_value=5), min_size=UNIT.size, max_size=UNIT.size),
        st.floats(min_value=0, max_value=10),
        st.floats(min_value=0, max_value=10),
    )
    def test_monotone_in_q(self, values, a, b):
        q1, q2 = sorted((a, b))
        mu = ScalarField(UNIT, values)
        loose, tight = threshold_crs(mu, 0.1, q1), threshold_crs(mu, 0.1, q2)
        self.assertTrue(tight.upper <= loose.upper)
        self.assertTrue(tight.lower <= loose.lower)
        self.assertTrue((tight.upper & tight.lower).is_empty())


class EtaRuleTests(SimpleTestCase):
    def test_values(self):
        self.assertAlmostEqual(eta_rule(100), 0.1 * math.log(100))
        self.assertAlmostEqual(eta_rule(2), 1 / math.sqrt(2))
        self.assertAlmostEqual(eta_rule(100, c=2.0), 0.2 * math.log(100))

    def test_shrinks_but_outgrows_the_rate(self):
        ladder = [10 ** k for k in range(2, 7)]
        etas = [eta_rule(n) for n in ladder]
        self.assertEqual(etas, sorted(etas, reverse=True))
        ratios = [eta * math.sqrt(n) for eta, n in zip(etas, ladder)]
        self.assertEqual(ratios, sorted(ratios))

    def test_invalid(self):
        for kwargs in ({'n': 0}, {'n': 10, 'c': 0.0}, {'n': 10, 'tau_n': -1.0}):
            with self.subTest(**kwargs), self.assertRaises(InvalidRate):
                eta_rule(**kwargs)


class EstimateUSetsTests(SimpleTestCase):
    def test_linear_single_piece(self):
        mu = evaluate(UNIT, lambda s: s - 0.5)
        boundary = estimate_u_sets(mu, PartitionLabeling.single(UNIT), 0.01, 0.05)
        u_plus, u_minus = boundary.u_plus[0].mask, boundary.u_minus[0].mask
        self.assertTrue(u_plus[at(UNIT, 0.5)] and u_plus[at(UNIT, 0.53)])
        self.assertFalse(u_plus[at(UNIT, 0.44)] or u_plus[at(UNIT, 0.6)])
        self.assertTrue(u_minus[at(UNIT, 0.5)] and u_minus[at(UNIT, 0.47)])
        self.assertFalse(u_minus[at(UNIT, 0.56)] or u_minus[at(UNIT, 0.4)])

    def test_positive_field_has_no_lower_boundary(self):
        mu = ScalarField.constant(UNIT, 1.0)
        boundary = estimate_u_sets(mu, PartitionLabeling.single(UNIT), 0.01, 0.05)
        self.assertTrue(boundary.u_minus[0].is_empty())
        self.assertTrue(boundary.tube.is_empty())

    def test_zero_plateau(self):
        partition = PartitionLabeling.from_rule(UNIT, (0, 1), lambda s: (s > 0.3).astype(int))
        boundary = estimate_u_sets(ScalarField.constant(UNIT, 0.0), partition, 0.01, 0.05)
        for key, piece in partition.pieces().items():
            self.assertEqual(boundary.u_plus[key], grid_closure(piece))
            self.assertEqual(boundary.u_minus[key], grid_closure(piece))

    def test_sets_stay_near_the_tube(self):
        mu = evaluate(UNIT, lambda s: np.sin(6 * s))
        partition = PartitionLabeling.from_rule(UNIT, (0, 1), lambda s: (s > 0.5).astype(int))
        boundary = estimate_u_sets(mu, partition, 0.01, 0.1)
        for key, piece in partition.pieces().items():
            bound = grid_closure(grid_closure(boundary.tube) & grid_closure(piece))
            self.assertTrue(boundary.both(key) <= grid_closure(bound))

    def test_default_rule(self):
        mu = evaluate(UNIT, lambda s: s - 0.5)
        boundary = estimate_u_sets(mu, PartitionLabeling.single(UNIT), 0.1)
        self.assertAlmostEqual(boundary.eta_n, eta_rule(100))

    def test_grid_mismatch(self):
        with self.assertRaises(GridMismatch):
            estimate_u_sets(ScalarField.constant(UNIT, 0.0), PartitionLabeling.single(build_grid([(0, 1)], 5)),
                            0.1, 0.1)


class SignPartitionTests(SimpleTestCase):
    def test_single_field(self):
        partition = sign_partition(evaluate(UNIT, lambda s: s - 0.5))
        self.assertEqual(partition.piece(-1), GridSet.where(UNIT, lambda s: s < 0.5))
        self.assertEqual(partition.piece(0).indices().tolist(), [at(UNIT, 0.5)])
        self.assertEqual(partition.piece(1), GridSet.where(UNIT, lambda s: s > 0.5))

    def test_tolerance_widens_zero_piece(self):
        partition = sign_partition(evaluate(UNIT, lambda s: s - 0.5), tol=0.0201)
        self.assertEqual(partition.piece(0).count(), 5)

    def test_symdiff_pair(self):
        grid = build_grid([(-2.0, 2.0)], [401])
        partition = sign_partition((evaluate(grid, lambda s: 2 * np.abs(s)), evaluate(grid, lambda s: s)))
        self.assertEqual(partition.keys, SIGN_PAIRS)
        self.assertEqual(partition.piece((0, 0)).indices().tolist(), [200])
        self.assertEqual(partition.piece((1, 1)).count(), 400)

    def test_zero_pair(self):
        zero = ScalarField.constant(UNIT, 0.0)
        partition = sign_partition((zero, zero))
        self.assertEqual(partition.piece((0, 0)).count(), UNIT.size)


class AbsoluteValueTests(SimpleTestCase):
    def setUp(self):
        self.sample = noisy(lambda s: np.sin(2 * np.pi * s), 100, seed=1)

    def test_lower_region_is_empty(self):
        regions, diagnostics = cr_absolute(self.sample, 0.1, BOOT)
        self.assertTrue(regions.lower.is_empty())
        self.assertFalse(diagnostics['fallback'])
        self.assertEqual(diagnostics['statistic_id'], 'sup[zero](|G|)')

    def test_quantile_grows_as_alpha_shrinks(self):
        loose, _ = cr_absolute(self.sample, 0.10, BOOT)
        strict, _ = cr_absolute(self.sample, 0.05, BOOT)
        self.assertGreaterEqual(strict.q, loose.q)
        self.assertTrue(strict.upper <= loose.upper)

    def test_empty_zero_set_falls_back(self):
        sample = noisy(lambda s: 5 + 0 * s, 50, seed=2, var=1e-4)
        regions, diagnostics = cr_absolute(sample, 0.1, BOOT)
        self.assertTrue(diagnostics['fallback'])
        self.assertEqual(regions.q, 0.0)
        self.assertEqual(regions.upper, GridSet.full(UNIT))

    def test_infinite_override(self):
        regions, _ = cr_absolute(self.sample, 0.1, BootstrapConfig(B=200, q_override=math.inf))
        self.assertTrue(regions.upper.is_empty())

    def test_studentized_rule(self):
        regions, _ = cr_absolute(self.sample, 0.1, BootstrapConfig(B=200, seed=3, studentize=True))
        self.assertTrue(regions.lower.is_empty())
        self.assertGreater(regions.q, 0)


class PiecewiseRegionTests(SimpleTestCase):
    def test_regions_avoid_the_crossing(self):
        sample = noisy(lambda s: s - 0.5, 200, seed=4, var=0.25)
        regions, diagnostics = cr_piecewise(sample, 0.1, BOOT)
        self.assertFalse(regions.upper.mask[at(UNIT, 0.5)])
        self.assertFalse(regions.lower.mask[at(UNIT, 0.5)])
        self.assertTrue(regions.upper.mask[at(UNIT, 0.95)])
        self.assertTrue(regions.lower.mask[at(UNIT, 0.05)])
        self.assertEqual(diagnostics['B'], 200)

    def test_given_partition(self):
        sample = noisy(lambda s: np.where(s < 0.5, -1.0, 1.0), 100, seed=5, var=0.25)
        partition = PartitionLabeling.from_rule(UNIT, (0, 1), lambda s: (s >= 0.5).astype(int))
        regions, diagnostics = cr_piecewise(sample, 0.1, BOOT, partition=partition)
        self.assertTrue(diagnostics['fallback'])
        self.assertEqual(regions.upper, GridSet.where(UNIT, lambda s: s >= 0.5))


class ConjunctionTests(SimpleTestCase):
    def test_single_study_matches_piecewise(self):
        sample = noisy(lambda s: s - 0.4, 100, seed=6)
        conj, _ = cr_conjunction([sample], 0.1, BOOT)
        single, _ = cr_piecewise(sample, 0.1, BOOT)
        self.assertEqual(conj.upper, single.upper)
        self.assertEqual(conj.lower, single.lower)
        self.assertEqual(conj.q, single.q)

    def test_mismatched_samples(self):
        first = noisy(lambda s: s, 20, seed=1)
        with self.assertRaises(UnequalN):
            cr_conjunction([first, noisy(lambda s: s, 21, seed=2)], 0.1, BOOT)
        other = noisy(lambda s: s, 20, seed=2, grid=build_grid([(0, 1)], [11]))
        with self.assertRaises(GridMismatch):
            cr_conjunction([first, other], 0.1, BOOT)

    def test_conjunction_is_inside_each_study(self):
        first = noisy(lambda s: s - 0.3, 400, seed=7, var=0.25)
        second = noisy(lambda s: 0.8 - s, 400, seed=8, var=0.25)
        regions, diagnostics = cr_conjunction([first, second], 0.1, BOOT)
        self.assertEqual(diagnostics['mode'], 'min')
        self.assertTrue(regions.upper <= GridSet.where(UNIT, lambda s: (s > 0.3) & (s < 0.8)))
        self.assertTrue(regions.upper.mask[at(UNIT, 0.55)])

    def test_disjunction(self):
        first = noisy(lambda s: s - 0.7, 400, seed=7, var=0.25)
        second = noisy(lambda s: 0.3 - s, 400, seed=8, var=0.25)
        regions, _ = cr_conjunction([first, second], 0.1, BOOT, mode='max')
        self.assertTrue(regions.lower <= GridSet.where(UNIT, lambda s: (s > 0.3) & (s < 0.7)))
        self.assertTrue(regions.upper.mask[at(UNIT, 0.0)] and regions.upper.mask[at(UNIT, 1.0)])

    def test_disjoint_boundaries_split_the_statistic(self):
        first = noisy(lambda s: s - 0.3, 400, seed=9, var=0.01)
        second = noisy(lambda s: 0.7 - s, 400, seed=10, var=0.01)
        results = [estimate(first), estimate(second)]
        means = [r.mean_hat for r in results]
        tau_n = results[0].tau_n
        eta_n = eta_rule(400, 0.2)
        mu_hat = ScalarField(UNIT, np.minimum(means[0].values, means[1].values))
        partition = active_partition(means, eta_n)
        boundary = estimate_u_sets(mu_hat, partition, tau_n, eta_n)
        self.assertTrue(boundary.both((1, 2)).is_empty())

        masks = {}
        joint = bootstrap_sup({'J1': results[0].residuals, 'J2': results[1].residuals}, masks,
                              MaxOf(conjunction_terms(boundary, partition, 'min', masks)), 300, seed=1,
                              studentize=False)
        separate = []
        for index, (result, mean) in enumerate(zip(results, means), start=1):
            own = estimate_u_sets(mean, PartitionLabeling.single(UNIT), tau_n, eta_n)
            own_masks = {}
            terms = sided_terms(Field(f"J{index}"), '', own, 0, own_masks)
            separate.append(bootstrap_sup({f"J{index}": result.residuals}, own_masks, MaxOf(terms), 300,
                                          seed=1, studentize=False).values)
        np.testing.assert_allclose(joint.values, np.maximum(*separate))


class SymmetricDifferenceTests(SimpleTestCase):
    def setUp(self):
        self.spike_grid = build_grid([(-2.0, 2.0)], [401])
        self.g1 = evaluate(self.spike_grid, lambda s: 2 * np.abs(s))
        self.g2 = evaluate(self.spike_grid, lambda s: s)

    def truth_geometry(self):
        return symdiff_geometry(self.g1, self.g2, 0.1, 0.0, 0.0)

    def test_spike_geometry(self):
        geometry = self.truth_geometry()
        self.assertEqual(geometry.double_zero.indices().tolist(), [200])
        self.assertEqual(geometry.n_set.indices().tolist(), [200])
        np.testing.assert_array_equal(geometry.d.values, 0.5 * (self.g1.values - self.g2.values))
        np.testing.assert_array_equal(geometry.m.values, 0.5 * (self.g1.values + self.g2.values))
        self.assertTrue(geometry.n_set <= geometry.double_zero)

    def test_spike_statistic_exceeds_unpatched_sup(self):
        fixture = load_fixture('symdiff4')
        zero_set = GridSet(fixture.grid, fixture.extras['truth'].values == 0)
        n = 100
        unpatched = np.abs(spike_values(n, fixture.grid.coordinates[:, 0]))[zero_set.mask].max()
        inner, _ = symdiff_statistics(
            self.truth_geometry(),
            ScalarField.constant(self.spike_grid, -2.0), ScalarField.constant(self.spike_grid, 0.0),
        )
        self.assertEqual(inner, 2.0)
        self.assertGreater(inner, unpatched)

    def test_far_negative_second_field_reduces_to_one_sided(self):
        first = noisy(lambda s: s - 0.5, 100, seed=11, var=0.25)
        second = noisy(lambda s: -10 + 0 * s, 100, seed=12, var=0.25)
        regions, q_lower, _, geometry = cr_symmetric_difference(first, second, 0.1, BOOT)
        single, _ = cr_piecewise(first, 0.1, BOOT)
        self.assertTrue(geometry.n_set.is_empty())
        self.assertEqual(geometry.partition.piece((1, -1)).count(), UNIT.size)
        self.assertEqual(q_lower, single.q)
        self.assertEqual(regions.upper, single.upper)
        self.assertEqual(regions.lower, single.lower)

    def test_identical_fields_have_empty_upper_region(self):
        sample = noisy(lambda s: np.sin(4 * s), 50, seed=13)
        regions, q_lower, q_upper, _ = cr_symmetric_difference(sample, sample, 0.1, BOOT)
        self.assertTrue(regions.upper.is_empty())
        self.assertGreaterEqual(q_lower, 0)
        self.assertEqual(regions.diagnostics['q_upper'], q_upper)

    def test_unequal_replicate_counts(self):
        with self.assertRaises(UnequalN):
            cr_symmetric_difference(noisy(lambda s: s, 10, 1), noisy(lambda s: s, 11, 2), 0.1, BOOT)


class ConfinementTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid([(-2.0, 2.0)], [401])
        self.truth = (evaluate(self.grid, lambda s: 2 * np.abs(s)), evaluate(self.grid, lambda s: s))
        self.geometry = symdiff_geometry(*self.truth, 0.1, 0.0, 0.0)

    def test_no_patch_without_n_set(self):
        h = evaluate(self.grid, lambda s: np.cos(s))
        j = ScalarField.constant(self.grid, 3.0)
        lower, upper = confine(h, j, j, GridSet.empty(self.grid))
        np.testing.assert_array_equal(lower.values, h.values)
        np.testing.assert_array_equal(upper.values, h.values)

    def test_spike_patch_value(self):
        n = 100
        shifted = FieldSample(self.grid, np.tile(self.truth[0].values - 2 / math.sqrt(n), (n, 1)), seed=0)
        exact = FieldSample(self.grid, np.tile(self.truth[1].values, (n, 1)), seed=0)
        lower, upper = confinement_fields(shifted, exact, self.geometry, self.truth, check=True)
        self.assertAlmostEqual(upper.values[200], 2.0)
        self.assertAlmostEqual(lower.values[200], -2.0)

    def test_ordering_holds_for_noisy_samples(self):
        for seed in range(5):
            first = noisy(lambda s: 2 * np.abs(s), 50, seed=seed, grid=self.grid)
            second = noisy(lambda s: s, 50, seed=100 + seed, grid=self.grid)
            confinement_fields(first, second, self.geometry, self.truth, check=True)

    def test_violation_is_reported(self):
        h = ScalarField.constant(self.grid, 1.0)
        lower, upper = confine(h, h * 0.5, h * 0.5, GridSet.full(self.grid))
        with self.assertRaises(ConfinementViolation):
            check_ordering(lower, h, upper)


class RegionSerializerTests(SimpleTestCase):
    def test_symdiff_report(self):
        sample = noisy(lambda s: np.sin(4 * s), 50, seed=13)
        other = noisy(lambda s: np.cos(4 * s), 50, seed=14)
        regions, q_lower, q_upper, _ = cr_symmetric_difference(sample, other, 0.1, BOOT)
        data = RegionReportSerializer(regions).data
        self.assertEqual(data['q'], q_lower)
        self.assertEqual(data['q_upper'], q_upper)
        self.assertEqual(data['B'], 200)
        self.assertEqual(data['seed'], 3)

    def test_full_regions(self):
        regions = threshold_crs(evaluate(UNIT, lambda s: s - 0.5), 0.1, 1.0, alpha=0.1)
        data = ConfidenceRegionsSerializer(regions).data
        self.assertIsNone(data['q_lower'])
        self.assertEqual(sum(data['upper']['rle']), UNIT.size)
