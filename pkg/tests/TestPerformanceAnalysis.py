import math
import unittest

import numpy as np

from main.ChannelSet import ChannelSet, complex_gaussian
from main.NetworkConfig import NetworkConfig
from main.Numerics import orthonormal_columns
from main.PerformanceAnalysis import (AccuracyRow, accuracy_alpha, energy_efficiency, first_order_moments,
                                      mean_quadratic_forms, mean_sinr_first_order, mean_sinr_numeric,
                                      sinr_stream, snr_at_rate, stream_stats, sum_rate)
from main.RandomStreams import RandomStreams
from main.SimulationErrors import AccuracyUndefined, IndexOutOfRange


class TestPerformanceAnalysis(unittest.TestCase):

    def setUp(self):
        self.config = NetworkConfig.from_scenario("(2x2,1)^3", 10.0, 0.1)
        self.channels = ChannelSet.sample(self.config, RandomStreams(2)).get_estimated()
        rng = np.random.default_rng(8)
        self.precoders = [orthonormal_columns(rng, 2, 1) for _ in range(3)]
        self.suppressors = [orthonormal_columns(rng, 2, 1) for _ in range(3)]
        # One scalar link with gain 2 at P = 10.
        self.scalar_config = NetworkConfig(K=1, M=1, N=1, D=1, P=10.0)
        self.scalar_channels = np.full((1, 1, 1, 1), 2.0 + 0j)
        self.unit = [np.ones((1, 1), dtype=complex)]

    def test_sinr_by_hand(self):
        sinr = sinr_stream(self.scalar_channels, self.unit, self.unit, self.scalar_config, 0, 0)
        self.assertAlmostEqual(sinr, 40.0)
        self.assertAlmostEqual(sum_rate(self.scalar_channels, self.unit, self.unit, self.scalar_config),
                               math.log2(41.0))

    def test_sinr_with_interference(self):
        # Receiver 0 hears gain 1 from its own transmitter and gain 2 from the other.
        config = NetworkConfig(K=2, M=1, N=1, D=1, P=1.0)
        channels = np.array([[1.0, 2.0], [0.0, 1.0]], dtype=complex).reshape(2, 2, 1, 1)
        filters = [np.ones((1, 1), dtype=complex)] * 2
        self.assertAlmostEqual(sinr_stream(channels, filters, filters, config, 0, 0), 1.0 / 5.0)
        self.assertAlmostEqual(sinr_stream(channels, filters, filters, config, 1, 0), 1.0)

    def test_zero_channels(self):
        zeros = np.zeros((3, 3, 2, 2), dtype=complex)
        self.assertEqual(sinr_stream(zeros, self.precoders, self.suppressors, self.config, 0, 0), 0.0)
        self.assertEqual(sum_rate(zeros, self.precoders, self.suppressors, self.config), 0.0)

    def test_stream_stats(self):
        stats = stream_stats(self.channels, self.precoders, self.suppressors, self.config)
        self.assertEqual([(stat.get_k(), stat.get_d()) for stat in stats], [(0, 0), (1, 0), (2, 0)])
        self.assertAlmostEqual(sum(stat.get_rate_bits() for stat in stats),
                               sum_rate(self.channels, self.precoders, self.suppressors, self.config))
        for stat in stats:
            self.assertAlmostEqual(stat.get_rate_bits(), math.log2(1 + stat.get_sinr()))

    def test_energy_efficiency(self):
        self.assertAlmostEqual(energy_efficiency(12.0, self.config), 12.0 / (10.0 * 3))
        with self.assertRaises(ValueError):
            energy_efficiency(-1.0, self.config)

    def test_bad_stream(self):
        with self.assertRaises(IndexOutOfRange):
            sinr_stream(self.channels, self.precoders, self.suppressors, self.config, 3, 0)
        with self.assertRaises(IndexOutOfRange):
            mean_sinr_first_order(self.channels, self.precoders, self.suppressors, self.config, 0, 1)

    def test_first_order_is_exact_without_errors(self):
        config = self.config.model_copy(update={"sigma2": 0.0})
        for k in range(3):
            approx = mean_sinr_first_order(self.channels, self.precoders, self.suppressors, config, k, 0)
            exact = sinr_stream(self.channels, self.precoders, self.suppressors, config, k, 0)
            self.assertAlmostEqual(approx / exact, 1.0, delta=1e-10)

    def test_first_order_ignores_filter_scale(self):
        scaled = [3.0 * suppressor for suppressor in self.suppressors]
        first = mean_sinr_first_order(self.channels, self.precoders, self.suppressors, self.config, 1, 0)
        second = mean_sinr_first_order(self.channels, self.precoders, scaled, self.config, 1, 0)
        self.assertAlmostEqual(first / second, 1.0, delta=1e-12)

    def test_first_order_moments(self):
        mu1, mu2 = first_order_moments(self.channels, self.precoders, self.suppressors, self.config, 0, 0)
        u = self.suppressors[0][:, 0]
        gain = abs(u.conj() @ self.channels[0, 0] @ self.precoders[0][:, 0]) ** 2
        self.assertAlmostEqual(mu1, 10.0 * gain + 10.0 * 0.1, delta=1e-9)
        self.assertAlmostEqual(mu1 / mu2, mean_sinr_first_order(self.channels, self.precoders, self.suppressors,
                                                                 self.config, 0, 0))

    def test_numeric_mean_without_errors(self):
        config = self.config.model_copy(update={"sigma2": 0.0})
        numeric = mean_sinr_numeric(self.channels, self.precoders, self.suppressors, config, 2, 0, 10,
                                    np.random.default_rng(0))
        self.assertEqual(numeric, sinr_stream(self.channels, self.precoders, self.suppressors, config, 2, 0))

    def test_numeric_mean_single_draw(self):
        numeric = mean_sinr_numeric(self.channels, self.precoders, self.suppressors, self.config, 1, 0, 1,
                                    np.random.default_rng(5))
        errors = complex_gaussian(np.random.default_rng(5), (1, 3, 2, 2), 0.1)
        perturbed = np.array(self.channels)
        perturbed[1] = perturbed[1] + errors[0]
        expected = sinr_stream(perturbed, self.precoders, self.suppressors, self.config, 1, 0)
        self.assertAlmostEqual(numeric / expected, 1.0, delta=1e-10)

    def test_numeric_mean_is_reproducible(self):
        first = mean_sinr_numeric(self.channels, self.precoders, self.suppressors, self.config, 0, 0, 5000,
                                  np.random.default_rng(3))
        second = mean_sinr_numeric(self.channels, self.precoders, self.suppressors, self.config, 0, 0, 5000,
                                   np.random.default_rng(3))
        self.assertEqual(first, second)
        with self.assertRaises(ValueError):
            mean_sinr_numeric(self.channels, self.precoders, self.suppressors, self.config, 0, 0, 0,
                              np.random.default_rng(3))

    def test_sampled_moments_match_first_order(self):
        for k in range(3):
            mu1, mu2 = first_order_moments(self.channels, self.precoders, self.suppressors, self.config, k, 0)
            mean_a, mean_b = mean_quadratic_forms(self.channels, self.precoders, self.suppressors, self.config, k, 0,
                                                  40000, np.random.default_rng(k))
            self.assertAlmostEqual(mean_a / mu1, 1.0, delta=0.05)
            self.assertAlmostEqual(mean_b / mu2, 1.0, delta=0.05)

    def test_accuracy_alpha(self):
        self.assertAlmostEqual(accuracy_alpha(2.0, 1.0), 50.0)
        self.assertAlmostEqual(accuracy_alpha(4.0, 5.0), -25.0)
        with self.assertRaises(AccuracyUndefined):
            accuracy_alpha(0.0, 1.0)
        with self.assertRaises(ZeroDivisionError):
            accuracy_alpha(0.0, 1.0)

    def test_accuracy_row(self):
        row = AccuracyRow(30, 0.1, 8.0, 3.0)
        self.assertEqual(row.values(), (30.0, 0.1, 8.0, 3.0, 62.5))
        self.assertEqual(row.get_alpha_pct(), 62.5)
        self.assertEqual(len(AccuracyRow.HEADER), len(row.values()))

    def test_snr_at_rate(self):
        snrs = [0.0, 10.0, 20.0]
        self.assertAlmostEqual(snr_at_rate(snrs, [5.0, 10.0, 20.0], 15.0), 15.0)
        self.assertAlmostEqual(snr_at_rate(snrs, [5.0, 10.0, 20.0], 10.0), 10.0)
        self.assertEqual(snr_at_rate(snrs, [5.0, 10.0, 20.0], 1.0), 0.0)
        self.assertIsNone(snr_at_rate(snrs, [5.0, 10.0, 12.0], 14.0))


if __name__ == '__main__':
    unittest.main()
