import unittest

import numpy as np

from main.FilterBank import FilterBank, conjugate_all
from main.Numerics import orthonormal_columns
from main.SimulationErrors import DimensionMismatch


class TestFilterBank(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(5)
        self.precoders = [orthonormal_columns(rng, 3, 2), orthonormal_columns(rng, 3, 1)]
        self.suppressors = [orthonormal_columns(rng, 4, 2), orthonormal_columns(rng, 4, 1)]
        self.bank = FilterBank(self.precoders, self.suppressors)

    def test_unit_columns(self):
        self.assertTrue(self.bank.has_unit_columns())
        self.assertLessEqual(self.bank.max_norm_error(), 1e-12)

    def test_scaled_columns_are_reported(self):
        bank = FilterBank([2.0 * self.precoders[0], self.precoders[1]], self.suppressors)
        self.assertFalse(bank.has_unit_columns())
        self.assertAlmostEqual(bank.max_norm_error(), 1.0, delta=1e-12)

    def test_filters_are_copied_and_read_only(self):
        self.precoders[0][0, 0] = 10.0
        self.assertNotEqual(self.bank.get_precoders()[0][0, 0], 10.0)
        with self.assertRaises(ValueError):
            self.bank.get_suppressors()[1][0, 0] = 1.0

    def test_reversed(self):
        reverse = self.bank.reversed()
        for original, swapped in zip(self.suppressors, reverse.get_precoders()):
            np.testing.assert_array_equal(swapped, np.conj(original))
        for original, swapped in zip(self.precoders, reverse.get_suppressors()):
            np.testing.assert_array_equal(swapped, np.conj(original))
        np.testing.assert_array_equal(reverse.reversed().get_precoders()[0], self.bank.get_precoders()[0])

    def test_conjugate_all(self):
        conjugated = conjugate_all(self.precoders)
        self.assertEqual(len(conjugated), 2)
        np.testing.assert_array_equal(conjugated[1], self.precoders[1].conj())

    def test_mismatched_streams(self):
        with self.assertRaises(DimensionMismatch):
            FilterBank(self.precoders, self.suppressors[::-1])
        with self.assertRaises(DimensionMismatch):
            FilterBank(self.precoders, self.suppressors[:1])
        with self.assertRaises(DimensionMismatch):
            FilterBank([np.ones(3)], [np.ones(3)])


if __name__ == '__main__':
    unittest.main()
