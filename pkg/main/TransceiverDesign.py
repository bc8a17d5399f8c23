import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from main.ChannelSet import reciprocal
from main.FilterBank import FilterBank, conjugate_all
from main.Numerics import hermitize, leading_generalized_eigvec, min_eigvecs, orthonormal_columns
from main.SimulationErrors import DimensionMismatch, IndexOutOfRange, NonFinite

logger = logging.getLogger(__name__)

ALGORITHMS = ("proposed", "max_sinr", "min_leakage")

# Allowed decrease of the metric between half-steps, relative to 1 + |metric|.
MONOTONE_TOLERANCE = 1e-9


class AlgoOptions(BaseModel):
    """
    Options of the alternating transceiver design.

    proposed maximizes the first-order approximate mean SINR, max_sinr is
    the same iteration with the CSI error ignored, and min_leakage picks
    receive filters in the weakest directions of the interference.
    """

    model_config = ConfigDict(frozen=True)

    max_alternations: int = Field(default=100, ge=1)
    rel_tol: float = Field(default=1e-6, ge=0.0)
    algorithm: Literal["proposed", "max_sinr", "min_leakage"] = "proposed"

    def effective_sigma2(self, config):
        """
        Get the error variance the design accounts for.

        :param config: The NetworkConfig.
        :return: config.sigma2 for the proposed design, 0 otherwise.
        """
        return config.sigma2 if self.algorithm == "proposed" else 0.0


class QFPair:
    """
    The QFPair class holds the Hermitian numerator Q and denominator F of
    one stream's approximate mean SINR, u^H Q u / u^H F u.
    """

    def __init__(self, q_matrix, f_matrix):
        """
        Constructor for the QFPair class.

        :param q_matrix: The N x N positive semi-definite numerator.
        :param f_matrix: The N x N positive definite denominator.
        """
        self._q = q_matrix
        self._f = f_matrix

    def get_q(self):
        """
        Get the numerator matrix Q.

        :return: The Q matrix.
        """
        return self._q

    def get_f(self):
        """
        Get the denominator matrix F.

        :return: The F matrix.
        """
        return self._f

    def quotient(self, vector):
        """
        Evaluate the generalized Rayleigh quotient at a vector.

        :param vector: A non-zero complex vector.
        :return: u^H Q u / u^H F u
        """
        numerator = np.real(np.vdot(vector, self._q @ vector))
        denominator = np.real(np.vdot(vector, self._f @ vector))
        return numerator / denominator


class RunTrace:
    """
    The RunTrace class records the convergence metric of one run: the
    initial value and one value after every half-step, so a run of A
    alternations holds 2A + 1 values.
    """

    def __init__(self):
        """
        Constructor for the RunTrace class.
        """
        self._metric_values = []
        self._swap_gaps = []
        self._iterations_run = 0
        self._converged = False
        self._violations = 0

    def record(self, value, monitor_monotone=True):
        """
        Append a metric value, counting and logging a decrease beyond
        MONOTONE_TOLERANCE.

        :param value: The metric after the latest half-step.
        :param monitor_monotone: False for designs that do not maximize the metric.
        """
        if not math.isfinite(value):
            raise NonFinite(f"metric became {value} after {len(self._metric_values)} half-steps")
        if monitor_monotone and self._metric_values:
            previous = self._metric_values[-1]
            if value < previous - MONOTONE_TOLERANCE * (1.0 + abs(previous)):
                self._violations += 1
                logger.debug("Metric decreased at half-step %d: %.12g -> %.12g",
                            len(self._metric_values), previous, value)
        self._metric_values.append(float(value))

    def record_swap_gap(self, gap):
        """
        Append the relative gap between the metric of the original network
        and that of the reciprocal network at the end of an alternation.

        :param gap: |metric - reciprocal metric| / |metric|.
        """
        self._swap_gaps.append(float(gap))

    def finish_alternation(self):
        """
        Count one more completed alternation.
        """
        self._iterations_run += 1

    def mark_converged(self):
        """
        Flag that the stopping rule was met.
        """
        self._converged = True

    def get_metric_values(self):
        """
        Get the recorded metric values.

        :return: A list of floats, initial value first.
        """
        return list(self._metric_values)

    def get_swap_gaps(self):
        """
        Get the swap gaps, one per alternation.

        :return: A list of floats.
        """
        return list(self._swap_gaps)

    def get_iterations_run(self):
        """
        Get the number of completed alternations.

        :return: The alternation count.
        """
        return self._iterations_run

    def is_converged(self):
        """
        Check whether the stopping rule ended the run.

        :return: True if the relative change fell below rel_tol.
        """
        return self._converged

    def get_violations(self):
        """
        Get the number of half-steps that decreased the metric.

        :return: The count of decreases beyond MONOTONE_TOLERANCE.
        """
        return self._violations

    def final_metric(self):
        """
        Get the last recorded metric value.

        :return: The final metric.
        """
        return self._metric_values[-1]


def _check_network(channels, precoders, config):
    """
    Make sure a channel map and a list of precoders describe the configured
    network in one direction.

    :param channels: A K x K x Nr x Nt channel map.
    :param precoders: One Nt x D^j matrix per transmitter.
    :param config: The NetworkConfig.
    """
    if channels.ndim != 4 or channels.shape[:2] != (config.K, config.K):
        raise DimensionMismatch(f"expected a {config.K} x {config.K} channel map, got shape {channels.shape}")
    if len(precoders) != config.K:
        raise DimensionMismatch(f"expected {config.K} precoders, got {len(precoders)}")
    for user, precoder in enumerate(precoders):
        if precoder.shape != (channels.shape[3], config.D[user]):
            raise DimensionMismatch(f"precoder {user} has shape {precoder.shape}, "
                                    f"expected {(channels.shape[3], config.D[user])}")


def _received_covariance(channels, precoders, k):
    """
    Sum over all transmitters of H^{kj} V^j V^j^H H^{kj}^H at receiver k,
    i.e. the unit-power covariance of every stream arriving at k.

    :param channels: The channel map.
    :param precoders: The precoders.
    :param k: The receiver index.
    :return: An Nr x Nr Hermitian matrix.
    """
    covariance = np.zeros((channels.shape[2], channels.shape[2]), dtype=complex)
    for j, precoder in enumerate(precoders):
        received = channels[k, j] @ precoder
        covariance += received @ received.conj().T
    return covariance


def _assemble_qf(k, d, channels, precoders, config, sigma2_eff, covariance):
    """
    Form Q and F for stream d at receiver k from a precomputed covariance.

    :return: A QFPair.
    """
    identity = np.eye(channels.shape[2])
    desired = channels[k, k] @ precoders[k][:, d]
    signal = config.P * np.outer(desired, desired.conj())
    q_matrix = signal + config.P * sigma2_eff * identity
    offset = config.P * sigma2_eff * (config.total_streams() - 1) + config.N0
    f_matrix = config.P * covariance - signal + offset * identity
    return QFPair(hermitize(q_matrix), hermitize(f_matrix))


def build_qf(k, d, channels, precoders, config, sigma2_eff):
    """
    Build the numerator and denominator matrices of the approximate mean
    SINR of stream d at receiver k:

        Q = P H^{kk} v v^H H^{kk}^H + P s I
        F = P sum_j H^{kj} V^j V^j^H H^{kj}^H - P H^{kk} v v^H H^{kk}^H
            + (P s (sum_j D^j - 1) + N0) I

    where v is column d of V^k and s is sigma2_eff.

    :param k: The receiver index.
    :param d: The stream index.
    :param channels: The K x K x Nr x Nt estimated channel map.
    :param precoders: One precoder per transmitter, unit-norm columns.
    :param config: The NetworkConfig.
    :param sigma2_eff: The error variance the design accounts for.
    :return: A QFPair.
    """
    channels = np.asarray(channels)
    _check_network(channels, precoders, config)
    if not 0 <= k < config.K:
        raise IndexOutOfRange(f"receiver {k} outside 0..{config.K - 1}")
    if not 0 <= d < config.D[k]:
        raise IndexOutOfRange(f"stream {d} outside 0..{config.D[k] - 1} at receiver {k}")
    if sigma2_eff < 0:
        raise ValueError(f"sigma2_eff must be non-negative, got {sigma2_eff}")
    covariance = _received_covariance(channels, precoders, k)
    return _assemble_qf(k, d, channels, precoders, config, sigma2_eff, covariance)


def receiver_update(channels, precoders, config, sigma2_eff):
    """
    Update every receive filter column to the leading generalized
    eigenvector of its (Q, F) pencil. Columns of one receiver are computed
    independently; no orthogonality is imposed across streams.

    :param channels: The channel map of the current direction.
    :param precoders: The precoders of the current direction.
    :param config: The NetworkConfig.
    :param sigma2_eff: The error variance the design accounts for.
    :return: One Nr x D^k suppression matrix per receiver.
    """
    channels = np.asarray(channels)
    _check_network(channels, precoders, config)
    suppressors = []
    for k in range(config.K):
        covariance = _received_covariance(channels, precoders, k)
        columns = []
        for d in range(config.D[k]):
            pencil = _assemble_qf(k, d, channels, precoders, config, sigma2_eff, covariance)
            columns.append(leading_generalized_eigvec(pencil.get_q(), pencil.get_f()).get_vector())
        suppressors.append(np.column_stack(columns))
    return suppressors


def leakage_update(channels, precoders, config):
    """
    Update every receiver to the D^k eigenvectors of smallest eigenvalue of
    its interference covariance sum_{j != k} P H^{kj} V^j V^j^H H^{kj}^H.

    :param channels: The channel map of the current direction.
    :param precoders: The precoders of the current direction.
    :param config: The NetworkConfig.
    :return: One Nr x D^k suppression matrix per receiver.
    """
    channels = np.asarray(channels)
    _check_network(channels, precoders, config)
    suppressors = []
    for k in range(config.K):
        interference = np.zeros((channels.shape[2], channels.shape[2]), dtype=complex)
        for j, precoder in enumerate(precoders):
            if j == k:
                continue
            received = channels[k, j] @ precoder
            interference += config.P * (received @ received.conj().T)
        suppressors.append(min_eigvecs(hermitize(interference), config.D[k]))
    return suppressors


def stream_quotients(channels, precoders, suppressors, config, sigma2_eff):
    """
    Evaluate the generalized Rayleigh quotient of every stream.

    :return: A list with one list of per-stream quotients per receiver.
    """
    channels = np.asarray(channels)
    _check_network(channels, precoders, config)
    quotients = []
    for k in range(config.K):
        covariance = _received_covariance(channels, precoders, k)
        per_stream = []
        for d in range(config.D[k]):
            pencil = _assemble_qf(k, d, channels, precoders, config, sigma2_eff, covariance)
            per_stream.append(pencil.quotient(suppressors[k][:, d]))
        quotients.append(per_stream)
    return quotients


def metric(channels, precoders, suppressors, config, sigma2_eff):
    """
    Evaluate the convergence metric, the sum over all streams of the
    Lagrangian u^H Q u + lambda (1 - u^H F u) with lambda taken as the
    generalized Rayleigh quotient of u. With that lambda the Lagrangian
    reduces to lambda itself for any scaling of u, so the metric is the
    sum of the per-stream quotients.

    :param channels: The channel map.
    :param precoders: The precoders.
    :param suppressors: The suppression filters.
    :param config: The NetworkConfig.
    :param sigma2_eff: The error variance the design accounts for.
    :return: The metric value.
    """
    quotients = stream_quotients(channels, precoders, suppressors, config, sigma2_eff)
    return float(sum(sum(per_stream) for per_stream in quotients))


class TransceiverDesign:
    """
    The TransceiverDesign class runs the distributed alternating design.

    Step I updates the receive filters of the original network. Step II
    moves to the reciprocal network, where the suppressors act as precoders,
    and updates its receivers; those become the new precoders of the
    original network. Only receivers ever update, and every update needs
    nothing but locally measurable covariances.

    Filters cross between the networks conjugated: with the plain-transpose
    reciprocal channel, u^H H v = conj(v)^H H^T conj(u), so conjugation is
    what keeps every link gain identical on both sides.
    """

    def __init__(self, channels, config, options=None):
        """
        Constructor for the TransceiverDesign class.

        :param channels: The K x K x N x M estimated channel map.
        :param config: The NetworkConfig.
        :param options: AlgoOptions; defaults are used when omitted.
        """
        self._channels = np.asarray(channels)
        self._reverse = reciprocal(self._channels)
        self._config = config
        self._options = options if options is not None else AlgoOptions()
        self._sigma2_eff = self._options.effective_sigma2(config)
        self._metric_sigma2 = config.sigma2 if self._options.algorithm == "min_leakage" else self._sigma2_eff
        self._filters = None
        self._trace = None

    def _update(self, channels, precoders):
        """
        Run the receiver update of the configured algorithm in one direction.

        :return: The new suppression filters of that direction.
        """
        if self._options.algorithm == "min_leakage":
            return leakage_update(channels, precoders, self._config)
        return receiver_update(channels, precoders, self._config, self._sigma2_eff)

    def _metric(self, precoders, suppressors):
        """
        Evaluate the metric of the original network.
        """
        return metric(self._channels, precoders, suppressors, self._config, self._metric_sigma2)

    def _swap_gap(self, precoders, suppressors, forward):
        """
        Relative difference between the original and the reciprocal metric.
        """
        reverse = FilterBank(precoders, suppressors).reversed()
        backward = metric(self._reverse, reverse.get_precoders(), reverse.get_suppressors(),
                          self._config, self._metric_sigma2)
        return abs(forward - backward) / max(abs(forward), np.finfo(float).tiny)

    def run(self, rng):
        """
        Run the alternation from random semi-unitary filters.

        :param rng: A numpy Generator for the initial filters.
        :return: A (FilterBank, RunTrace) pair.
        """
        config = self._config
        precoders = [orthonormal_columns(rng, config.M, streams) for streams in config.D]
        suppressors = [orthonormal_columns(rng, config.N, streams) for streams in config.D]
        monitor = self._options.algorithm != "min_leakage"

        trace = RunTrace()
        trace.record(self._metric(precoders, suppressors), monitor)
        for _ in range(self._options.max_alternations):
            # Step I, original network.
            suppressors = self._update(self._channels, precoders)
            trace.record(self._metric(precoders, suppressors), monitor)

            # Step II, reciprocal network.
            precoders = conjugate_all(self._update(self._reverse, conjugate_all(suppressors)))
            current = self._metric(precoders, suppressors)
            trace.record(current, monitor)
            trace.finish_alternation()

            gap = self._swap_gap(precoders, suppressors, current)
            trace.record_swap_gap(gap)
            logger.debug("Alternation %d: metric %.12g, swap gap %.3g", trace.get_iterations_run(), current, gap)

            values = trace.get_metric_values()
            before = values[-3]
            change = abs(values[-1] - before) / max(abs(before), np.finfo(float).tiny)
            if change < self._options.rel_tol:
                trace.mark_converged()
                break

        self._filters = FilterBank(precoders, suppressors)
        self._trace = trace
        return self._filters, trace

    def get_filters(self):
        """
        Get the filters of the latest run.

        :return: The FilterBank, or None before run().
        """
        return self._filters

    def get_trace(self):
        """
        Get the trace of the latest run.

        :return: The RunTrace, or None before run().
        """
        return self._trace


def run(channels, config, options, rng):
    """
    Design robust transceivers for an estimated channel map.

    :param channels: The K x K x N x M estimated channel map.
    :param config: The NetworkConfig.
    :param options: AlgoOptions.
    :param rng: A numpy Generator for the initial filters.
    :return: A (FilterBank, RunTrace) pair.
    """
    return TransceiverDesign(channels, config, options).run(rng)
