import math

import numpy as np

from main.ChannelSet import complex_gaussian
from main.SimulationErrors import AccuracyUndefined, DimensionMismatch, IndexOutOfRange
from main.TransceiverDesign import build_qf

# Monte Carlo error draws generated per batch.
DRAW_BATCH = 4096


class StreamStat:
    """
    The StreamStat class holds the SINR and throughput of one data stream.
    """

    def __init__(self, k, d, sinr):
        """
        Constructor for the StreamStat class.

        :param k: The receiver index.
        :param d: The stream index.
        :param sinr: The stream SINR.
        """
        self._k = k
        self._d = d
        self._sinr = float(sinr)
        self._rate_bits = math.log2(1.0 + self._sinr)

    def get_k(self):
        """
        Get the receiver index of the stream.

        :return: The receiver index k.
        """
        return self._k

    def get_d(self):
        """
        Get the stream index within its receiver.

        :return: The stream index d.
        """
        return self._d

    def get_sinr(self):
        """
        Get the stream SINR.

        :return: The SINR as a linear ratio.
        """
        return self._sinr

    def get_rate_bits(self):
        """
        Get the stream throughput log2(1 + sinr) in b/s/Hz.

        :return: The rate.
        """
        return self._rate_bits


class AccuracyRow:
    """
    The AccuracyRow class holds one point of the approximation accuracy
    study: the Monte Carlo mean SINR, its first-order approximation and
    the relative gap alpha between them, in percent.
    """

    HEADER = ("snr_db", "sigma2", "numeric_mean", "approx_mean", "alpha_pct")

    def __init__(self, snr_db, sigma2, numeric_mean, approx_mean):
        """
        Constructor for the AccuracyRow class.

        :param snr_db: The SNR of the point in dB.
        :param sigma2: The CSI error variance of the point.
        :param numeric_mean: The Monte Carlo mean SINR.
        :param approx_mean: The first-order approximate mean SINR.
        """
        self._snr_db = float(snr_db)
        self._sigma2 = float(sigma2)
        self._numeric_mean = float(numeric_mean)
        self._approx_mean = float(approx_mean)
        self._alpha_pct = accuracy_alpha(self._numeric_mean, self._approx_mean)

    def get_snr_db(self):
        """
        Get the SNR of the point.

        :return: The SNR in dB.
        """
        return self._snr_db

    def get_sigma2(self):
        """
        Get the CSI error variance of the point.

        :return: The variance sigma2.
        """
        return self._sigma2

    def get_numeric_mean(self):
        """
        Get the Monte Carlo mean SINR.

        :return: The mean over the error draws.
        """
        return self._numeric_mean

    def get_approx_mean(self):
        """
        Get the first-order approximate mean SINR.

        :return: The approximate mean.
        """
        return self._approx_mean

    def get_alpha_pct(self):
        """
        Get the relative gap between the two means.

        :return: 100 * (numeric_mean - approx_mean) / numeric_mean.
        """
        return self._alpha_pct

    def values(self):
        """
        Get the row values in HEADER order.

        :return: A tuple of floats.
        """
        return self._snr_db, self._sigma2, self._numeric_mean, self._approx_mean, self._alpha_pct


def _check_stream(channels, precoders, suppressors, config, k, d):
    """
    Validate a channel map, the filters and a stream index.
    """
    if not 0 <= k < config.K:
        raise IndexOutOfRange(f"receiver {k} outside 0..{config.K - 1}")
    if not 0 <= d < config.D[k]:
        raise IndexOutOfRange(f"stream {d} outside 0..{config.D[k] - 1} at receiver {k}")
    if np.shape(channels)[:2] != (config.K, config.K):
        raise DimensionMismatch(f"expected a {config.K} x {config.K} channel map, got shape {np.shape(channels)}")
    if len(precoders) != config.K or len(suppressors) != config.K:
        raise DimensionMismatch("expected one precoder and one suppressor per user")


def _stream_powers(gains, k, d):
    """
    Split the unit-power link gains seen by one receive filter into the
    desired power and the interference power.

    :param gains: A list, one entry per transmitter j, of arrays whose last
                  axis runs over the streams of j and holds u^H C^{kj} v_m^j.
    :param k: The receiver index.
    :param d: The stream index.
    :return: (|desired|^2, sum of |interference|^2), both unscaled by P.
    """
    desired = np.abs(gains[k][..., d]) ** 2
    interference = np.zeros_like(desired)
    for j, gain in enumerate(gains):
        powers = np.abs(gain) ** 2
        if j == k:
            powers = np.delete(powers, d, axis=-1)
        interference = interference + np.sum(powers, axis=-1)
    return desired, interference


def sinr_stream(channels, precoders, suppressors, config, k, d):
    """
    Compute the SINR of stream d at receiver k on a given channel map (the
    true channels G or the estimate H):

        P |u^H C^{kk} v_d|^2 / (P sum_{(j,m) != (k,d)} |u^H C^{kj} v_m^j|^2 + N0 |u|^2)

    The interference sum skips the desired stream instead of subtracting
    it, so the denominator never drops below N0 |u|^2.

    :return: The SINR, a non-negative float.
    """
    _check_stream(channels, precoders, suppressors, config, k, d)
    channels = np.asarray(channels)
    u = suppressors[k][:, d]
    gains = [u.conj() @ channels[k, j] @ precoder for j, precoder in enumerate(precoders)]
    desired, interference = _stream_powers(gains, k, d)
    noise = config.N0 * np.real(np.vdot(u, u))
    return float(config.P * desired / (config.P * interference + noise))


def stream_stats(channels, precoders, suppressors, config):
    """
    Compute the SINR and rate of every stream.

    :return: A list of StreamStat, receiver-major.
    """
    return [StreamStat(k, d, sinr_stream(channels, precoders, suppressors, config, k, d))
            for k in range(config.K) for d in range(config.D[k])]


def sum_rate(channels, precoders, suppressors, config):
    """
    Compute the sum rate sum_{k,d} log2(1 + sinr) in b/s/Hz.

    :return: The sum rate.
    """
    return float(sum(stat.get_rate_bits() for stat in stream_stats(channels, precoders, suppressors, config)))


def energy_efficiency(rate, config):
    """
    Divide a sum rate by the radiated power P sum_j D^j.

    :param rate: The sum rate in b/s/Hz.
    :param config: The NetworkConfig.
    :return: The energy efficiency in b/s/Hz per unit power.
    """
    if rate < 0:
        raise ValueError(f"rate must be non-negative, got {rate}")
    return rate / (config.P * config.total_streams())


def first_order_moments(channels, precoders, suppressors, config, k, d):
    """
    Compute the exact means mu1 = E[A] and mu2 = E[B] of the SINR numerator
    and denominator over the CSI error, holding the estimate fixed.

    :return: (mu1, mu2)
    """
    _check_stream(channels, precoders, suppressors, config, k, d)
    pencil = build_qf(k, d, channels, precoders, config, config.sigma2)
    u = suppressors[k][:, d]
    mu1 = np.real(np.vdot(u, pencil.get_q() @ u))
    mu2 = np.real(np.vdot(u, pencil.get_f() @ u))
    return float(mu1), float(mu2)


def mean_sinr_first_order(channels, precoders, suppressors, config, k, d):
    """
    Compute the first-order approximate mean SINR mu1 / mu2. It equals
    sinr_stream on the estimate when sigma2 = 0 and does not change when u
    is scaled.

    :return: The approximate mean SINR.
    """
    mu1, mu2 = first_order_moments(channels, precoders, suppressors, config, k, d)
    return mu1 / mu2


def _sampled_terms(channels, precoders, suppressors, config, k, d, draws, rng):
    """
    Draw fresh errors E^{kj} for every link into receiver k, in batches of
    DRAW_BATCH, and yield the SINR numerator A and denominator B of each draw
    on the channels H + E.

    Each batch draws the real parts of a (batch, K, N, M) array and then the
    imaginary parts, as complex_gaussian does.

    :return: A generator of (A, B) array pairs.
    """
    channels = np.asarray(channels)
    u = suppressors[k][:, d]
    noise = config.N0 * np.real(np.vdot(u, u))
    remaining = draws
    while remaining > 0:
        batch = min(remaining, DRAW_BATCH)
        remaining -= batch
        errors = complex_gaussian(rng, (batch,) + channels.shape[1:], config.sigma2)
        perturbed = channels[k][np.newaxis] + errors
        # u^H C^{kj} for every draw and transmitter: (batch, K, M).
        projected = np.einsum('n,bjnm->bjm', u.conj(), perturbed)
        gains = [projected[:, j, :] @ precoder for j, precoder in enumerate(precoders)]
        desired, interference = _stream_powers(gains, k, d)
        yield config.P * desired, config.P * interference + noise


def mean_sinr_numeric(channels, precoders, suppressors, config, k, d, draws, rng):
    """
    Estimate E[SINR] of stream d at receiver k by averaging the SINR over
    `draws` independent error realizations with the estimate held fixed.

    :param draws: Number of Monte Carlo draws, at least 1.
    :param rng: A numpy Generator.
    :return: The Monte Carlo mean SINR.
    """
    _check_stream(channels, precoders, suppressors, config, k, d)
    if draws < 1:
        raise ValueError(f"draws must be at least 1, got {draws}")
    if config.sigma2 == 0:
        return sinr_stream(channels, precoders, suppressors, config, k, d)
    total = 0.0
    for numerator, denominator in _sampled_terms(channels, precoders, suppressors, config, k, d, draws, rng):
        total += float(np.sum(numerator / denominator))
    return total / draws


def mean_quadratic_forms(channels, precoders, suppressors, config, k, d, draws, rng):
    """
    Estimate E[A] and E[B], the means of the SINR numerator and denominator,
    by Monte Carlo. They converge to first_order_moments.

    :return: (mean of A, mean of B)
    """
    _check_stream(channels, precoders, suppressors, config, k, d)
    if draws < 1:
        raise ValueError(f"draws must be at least 1, got {draws}")
    sum_a = 0.0
    sum_b = 0.0
    for numerator, denominator in _sampled_terms(channels, precoders, suppressors, config, k, d, draws, rng):
        sum_a += float(np.sum(numerator))
        sum_b += float(np.sum(denominator))
    return sum_a / draws, sum_b / draws


def accuracy_alpha(numeric, approx):
    """
    Compute the accuracy statistic 100 (numeric - approx) / numeric.

    :param numeric: The Monte Carlo mean.
    :param approx: The approximation.
    :return: The relative gap in percent.
    :raises AccuracyUndefined: If numeric is zero.
    """
    if numeric == 0:
        raise AccuracyUndefined("accuracy is undefined for a zero numeric mean")
    return 100.0 * (numeric - approx) / numeric


def snr_at_rate(snrs, rates, target):
    """
    Find the first SNR at which a rate curve reaches a target, interpolating
    linearly between grid points.

    :param snrs: Increasing SNR grid in dB.
    :param rates: Mean sum rate at each grid point.
    :param target: The target rate.
    :return: The SNR in dB, or None if the curve never reaches the target.
    """
    for idx, rate in enumerate(rates):
        if rate >= target:
            if idx == 0:
                return float(snrs[0])
            low_snr, high_snr = snrs[idx - 1], snrs[idx]
            low_rate = rates[idx - 1]
            fraction = (target - low_rate) / (rate - low_rate)
            return float(low_snr + fraction * (high_snr - low_snr))
    return None
