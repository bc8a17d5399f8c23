import json
import logging

import numpy as np

from main.NetworkConfig import NetworkConfig
from main.SimulationErrors import DimensionMismatch

logger = logging.getLogger(__name__)


def complex_gaussian(rng, shape, variance):
    """
    Draw circularly-symmetric complex Gaussian entries with the given total
    variance, i.e. variance / 2 on each of the real and imaginary parts.

    :param rng: A numpy Generator.
    :param shape: Output shape.
    :param variance: Total complex variance per entry.
    :return: A complex array.
    """
    scale = np.sqrt(variance / 2.0)
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return scale * (real + 1j * imag)


def reciprocal(channels):
    """
    Build the reciprocal (reverse-direction) channel map.

    Channel maps are arrays indexed [receiver, transmitter, row, column]. In
    the reciprocal network the roles of transmitters and receivers swap and
    each link is the plain transpose of the forward link, without
    conjugation: out[j, k] = channels[k, j]^T.

    :param channels: A K x K x N x M channel map.
    :return: The K x K x M x N reciprocal map.
    """
    channels = np.asarray(channels)
    if channels.ndim != 4 or channels.shape[0] != channels.shape[1]:
        raise DimensionMismatch(f"expected a K x K x N x M channel map, got shape {channels.shape}")
    return np.transpose(channels, (1, 0, 3, 2))


def _read_only(array):
    """
    Freeze a copy of an array.

    :param array: The array to freeze.
    :return: A read-only copy.
    """
    frozen = np.array(array, dtype=complex, copy=True)
    frozen.flags.writeable = False
    return frozen


def _to_pairs(array):
    """
    Encode a complex array as nested lists of [re, im] pairs.

    :param array: A complex array.
    :return: Nested lists of float pairs.
    """
    stacked = np.stack([array.real, array.imag], axis=-1)
    return stacked.tolist()


def _from_pairs(pairs):
    """
    Decode nested lists of [re, im] pairs back into a complex array.

    :param pairs: Nested lists as written by _to_pairs.
    :return: A complex array.
    """
    stacked = np.asarray(pairs, dtype=float)
    array = np.empty(stacked.shape[:-1], dtype=complex)
    array.real = stacked[..., 0]
    array.imag = stacked[..., 1]
    return array


class ChannelSet:
    """
    The ChannelSet class holds one fading block of a K-user interference
    network: the true channels G, the estimation errors E and the estimated
    channels H that the transceiver designer sees, with G = H + E on every
    link. All three are K x K x N x M arrays indexed [receiver, transmitter].
    """

    def __init__(self, config, true_channels, errors, estimated, seed=None):
        """
        Constructor for the ChannelSet class.

        :param config: The NetworkConfig the channels belong to.
        :param true_channels: The true channel map G.
        :param errors: The error map E.
        :param estimated: The estimated channel map H.
        :param seed: The seed the set was sampled from, if any.
        """
        expected = (config.K, config.K, config.N, config.M)
        for name, array in (("G", true_channels), ("E", errors), ("H", estimated)):
            if np.shape(array) != expected:
                raise DimensionMismatch(f"{name} has shape {np.shape(array)}, expected {expected}")
        self._config = config
        self._true = _read_only(true_channels)
        self._errors = _read_only(errors)
        self._estimated = _read_only(estimated)
        self._seed = seed

    @classmethod
    def sample(cls, config, streams):
        """
        Sample a channel set. The true channels are drawn first with unit
        variance per entry, the errors are drawn from their own stream with
        variance sigma2, and H = G - E. G is then re-formed as H + E so that
        the error model holds bit for bit; this moves G by at most one ulp.

        :param config: The NetworkConfig.
        :param streams: A RandomStreams object.
        :return: A ChannelSet.
        """
        shape = (config.K, config.K, config.N, config.M)
        true_channels = complex_gaussian(streams.generator("channels"), shape, 1.0)
        if config.sigma2 > 0:
            errors = complex_gaussian(streams.generator("errors"), shape, config.sigma2)
        else:
            errors = np.zeros(shape, dtype=complex)
        estimated = true_channels - errors
        true_channels = estimated + errors
        logger.debug("Sampled %s channel set (sigma2=%g, seed=%d)", shape, config.sigma2, streams.get_seed())
        return cls(config, true_channels, errors, estimated, seed=streams.get_seed())

    def get_config(self):
        """
        Get the network configuration.

        :return: The NetworkConfig.
        """
        return self._config

    def get_true(self):
        """
        Get the true channel map G.

        :return: A read-only K x K x N x M array.
        """
        return self._true

    def get_errors(self):
        """
        Get the error map E.

        :return: A read-only K x K x N x M array.
        """
        return self._errors

    def get_estimated(self):
        """
        Get the estimated channel map H.

        :return: A read-only K x K x N x M array.
        """
        return self._estimated

    def get_seed(self):
        """
        Get the seed the set was sampled from.

        :return: The seed, or None.
        """
        return self._seed

    def to_json(self):
        """
        Encode the channel set as a JSON document with keys "G", "E", "H",
        "config" and "seed". Floats are written with their shortest exact
        representation, so decoding gives back identical bits.

        :return: The JSON text.
        """
        document = {
            "config": self._config.model_dump(),
            "seed": self._seed,
            "G": _to_pairs(self._true),
            "E": _to_pairs(self._errors),
            "H": _to_pairs(self._estimated),
        }
        return json.dumps(document)

    @classmethod
    def from_json(cls, text):
        """
        Decode a channel set written by to_json.

        :param text: The JSON text.
        :return: A ChannelSet.
        """
        document = json.loads(text)
        config = NetworkConfig(**document["config"])
        return cls(config, _from_pairs(document["G"]), _from_pairs(document["E"]),
                   _from_pairs(document["H"]), seed=document.get("seed"))

    def dump(self, path):
        """
        Write the channel set to a JSON file.

        :param path: The output path.
        """
        with open(path, 'w') as file:
            file.write(self.to_json())

    @classmethod
    def load(cls, path):
        """
        Read a channel set from a JSON file.

        :param path: The input path.
        :return: A ChannelSet.
        """
        with open(path, 'r') as file:
            return cls.from_json(file.read())
