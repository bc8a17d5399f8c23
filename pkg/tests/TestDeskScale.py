import io
import os
import unittest

import numpy as np

from main.ChannelSet import ChannelSet
from main.ExperimentRunner import ExperimentRunner, load_spec
from main.NetworkConfig import NetworkConfig
from main.PerformanceAnalysis import first_order_moments, mean_quadratic_forms, snr_at_rate
from main.RandomStreams import RandomStreams
from main.TransceiverDesign import AlgoOptions, run

DESK_SCALE = os.environ.get("DESK_SCALE") == "1"


def mean_curves(rows):
    """
    Average sweep rows over trials.

    :return: A dictionary algorithm -> (snr list, mean sum rate list).
    """
    sums = {}
    for row in rows:
        key = (row.get("algorithm"), row.get("snr_db"))
        sums.setdefault(key, []).append(row.get("sum_rate_bits"))
    curves = {}
    for (algorithm, snr_db), rates in sorted(sums.items()):
        snrs, means = curves.setdefault(algorithm, ([], []))
        snrs.append(snr_db)
        means.append(float(np.mean(rates)))
    return curves


@unittest.skipUnless(DESK_SCALE, "set DESK_SCALE=1 to run the desk-scale reproduction (minutes)")
class TestDeskScale(unittest.TestCase):

    def test_sampled_moments_on_converged_filters(self):
        for sigma2 in (0.05, 0.1):
            for seed in range(20):
                config = NetworkConfig.from_scenario("(2x2,1)^3", 20.0, sigma2)
                channels = ChannelSet.sample(config, RandomStreams(seed)).get_estimated()
                filters, _ = run(channels, config, AlgoOptions(), RandomStreams(seed).generator("filters"))
                precoders, suppressors = filters.get_precoders(), filters.get_suppressors()
                mu1, mu2 = first_order_moments(channels, precoders, suppressors, config, 0, 0)
                mean_a, mean_b = mean_quadratic_forms(channels, precoders, suppressors, config, 0, 0, 100000,
                                                      RandomStreams(seed).generator("monte_carlo"))
                self.assertAlmostEqual(mean_a / mu1, 1.0, delta=0.01)
                self.assertAlmostEqual(mean_b / mu2, 1.0, delta=0.01)

    def test_proposed_beats_max_sinr(self):
        spec = load_spec(overrides={"scenario": "(3x3,1)^4", "sigma2": "0.1", "trials": "200",
                                    "algo": "proposed,max_sinr", "workers": "4"})
        curves = mean_curves(ExperimentRunner(spec).sweep(io.StringIO()))
        snrs, proposed = curves["proposed"]
        _, baseline = curves["max_sinr"]
        for snr_db, ours, theirs in zip(snrs, proposed, baseline):
            if snr_db >= 10:
                self.assertGreaterEqual(ours, theirs)
        ours_at_target = snr_at_rate(snrs, proposed, 14.0)
        theirs_at_target = snr_at_rate(snrs, baseline, 14.0)
        self.assertIsNotNone(ours_at_target)
        if theirs_at_target is not None:
            self.assertGreaterEqual(theirs_at_target - ours_at_target, 4.0)

    def test_max_sinr_saturates(self):
        spec = load_spec(overrides={"scenario": "(3x4,2)^2", "sigma2": "0.1", "trials": "200",
                                    "algo": "proposed,max_sinr", "workers": "4"})
        curves = mean_curves(ExperimentRunner(spec).sweep(io.StringIO()))
        self.assertLess(max(curves["max_sinr"][1]), 14.0)
        self.assertGreater(max(curves["proposed"][1]), 14.0)

    def test_accuracy_trends(self):
        spec = load_spec(overrides={"scenario": "(3x3,1)^4", "sigma2": "0.05,0.1", "trials": "20",
                                    "mc_draws": "10000", "workers": "4"})
        rows = ExperimentRunner(spec).accuracy(io.StringIO())
        by_sigma2 = {}
        for row in rows:
            by_sigma2.setdefault(row.get_sigma2(), {})[row.get_snr_db()] = row.get_alpha_pct()

        for sigma2, curve in by_sigma2.items():
            alphas = [curve[snr_db] for snr_db in sorted(curve)]
            inversions = sum(1 for low, high in zip(alphas, alphas[1:]) if high < low)
            self.assertLessEqual(inversions, 1, f"sigma2={sigma2}: {alphas}")
        for snr_db in by_sigma2[0.1]:
            if snr_db >= 5:
                self.assertLessEqual(by_sigma2[0.05][snr_db], by_sigma2[0.1][snr_db])
        # With the interference aligned on H, B is a sum of K - 1 exponential
        # terms of mean sigma2 P, so at high SNR approx / numeric tends to
        # (K - 2) / (K - 1) and alpha to 100 / (K - 1).
        self.assertAlmostEqual(by_sigma2[0.1][30.0], 100.0 * (1.0 - 2.0 / 3.0), delta=3.0)

    def test_error_free_limit(self):
        spec = load_spec(overrides={"scenario": "(3x3,1)^4", "sigma2": "1e-9", "trials": "5",
                                    "mc_draws": "10000", "workers": "4"})
        for row in ExperimentRunner(spec).accuracy(io.StringIO()):
            self.assertLess(abs(row.get_alpha_pct()), 0.5)


if __name__ == '__main__':
    unittest.main()
