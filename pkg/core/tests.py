import numpy as np
from django.test import SimpleTestCase, override_settings

from .exceptions import DomainError, ExcursionError, UnknownFixture, UnknownScenario
from .parallel import ordered_map, resolve_workers
from .rng import BOOTSTRAP, SAMPLE, blocks, derive_seed, stream


class StreamTests(SimpleTestCase):
    def test_same_path_same_numbers(self):
        a = stream(7, SAMPLE, 0).standard_normal(5)
        b = stream(7, SAMPLE, 0).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_paths_are_independent(self):
        a = stream(7, SAMPLE, 0).standard_normal(5)
        b = stream(7, BOOTSTRAP, 0).standard_normal(5)
        c = stream(8, SAMPLE, 0).standard_normal(5)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_derived_seed_is_stable(self):
        self.assertEqual(derive_seed(1, 2, 3), derive_seed(1, 2, 3))
        self.assertNotEqual(derive_seed(1, 2, 3), derive_seed(1, 2, 4))
        self.assertGreaterEqual(derive_seed(1, 2, 3), 0)

    def test_blocks_cover_range(self):
        parts = blocks(130, 64)
        self.assertEqual(parts, [(0, 0, 64), (1, 64, 128), (2, 128, 130)])
        self.assertEqual(blocks(0), [])


class OrderedMapTests(SimpleTestCase):
    def test_order_kept_with_threads(self):
        self.assertEqual(ordered_map(lambda x: x * x, range(20), workers=4), [x * x for x in range(20)])

    def test_serial_path(self):
        self.assertEqual(ordered_map(str, [1, 2], workers=1), ['1', '2'])

    @override_settings(EXCURSION_WORKERS=3)
    def test_default_workers_from_settings(self):
        self.assertEqual(resolve_workers(), 3)
        self.assertEqual(resolve_workers(0), 1)


class ExceptionTests(SimpleTestCase):
    def test_hierarchy(self):
        self.assertTrue(issubclass(DomainError, ExcursionError))
        self.assertTrue(issubclass(DomainError, ValueError))

    def test_key_errors_print_plainly(self):
        self.assertEqual(str(UnknownFixture('nope')), 'nope')
        self.assertEqual(str(UnknownScenario('gone')), 'gone')
