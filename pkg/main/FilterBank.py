import numpy as np

from main.SimulationErrors import DimensionMismatch

# Column norms must stay within this distance of one.
UNIT_NORM_TOLERANCE = 1e-12


def _freeze_all(matrices):
    """
    Copy a sequence of filter matrices into read-only complex arrays.

    :param matrices: The filter matrices.
    :return: A tuple of read-only arrays.
    """
    frozen = []
    for matrix in matrices:
        copy = np.array(matrix, dtype=complex, copy=True)
        if copy.ndim != 2:
            raise DimensionMismatch(f"filters must be 2D, got shape {copy.shape}")
        copy.flags.writeable = False
        frozen.append(copy)
    return tuple(frozen)


def conjugate_all(matrices):
    """
    Conjugate every filter of a list. Filters cross between the original
    and the reciprocal network this way (see TransceiverDesign.run).

    :param matrices: The filter matrices.
    :return: A list of conjugated matrices.
    """
    return [np.conj(matrix) for matrix in matrices]


class FilterBank:
    """
    The FilterBank class is an immutable snapshot of the transceiver filters
    of the network: one M x D^j precoder per transmitter and one N x D^k
    interference suppression filter per receiver, every column unit norm.
    """

    def __init__(self, precoders, suppressors):
        """
        Constructor for the FilterBank class.

        :param precoders: One precoder matrix per transmitter.
        :param suppressors: One suppression matrix per receiver.
        """
        self._precoders = _freeze_all(precoders)
        self._suppressors = _freeze_all(suppressors)
        if len(self._precoders) != len(self._suppressors):
            raise DimensionMismatch(f"{len(self._precoders)} precoders but {len(self._suppressors)} suppressors")
        for user, (precoder, suppressor) in enumerate(zip(self._precoders, self._suppressors)):
            if precoder.shape[1] != suppressor.shape[1]:
                raise DimensionMismatch(f"user {user} has {precoder.shape[1]} transmit and {suppressor.shape[1]} receive streams")

    def get_precoders(self):
        """
        Get the precoders V^j.

        :return: A tuple of read-only M x D^j arrays.
        """
        return self._precoders

    def get_suppressors(self):
        """
        Get the interference suppression filters U^k.

        :return: A tuple of read-only N x D^k arrays.
        """
        return self._suppressors

    def max_norm_error(self):
        """
        Get the largest distance of any column norm from one.

        :return: The largest |‖column‖ - 1| over all filters.
        """
        errors = [np.max(np.abs(np.linalg.norm(matrix, axis=0) - 1.0))
                  for matrix in self._precoders + self._suppressors]
        return float(max(errors))

    def has_unit_columns(self):
        """
        Check that every filter column is unit norm.

        :return: True if all columns are within UNIT_NORM_TOLERANCE of one.
        """
        return self.max_norm_error() <= UNIT_NORM_TOLERANCE

    def reversed(self):
        """
        Get the filters seen by the reciprocal network: the precoders are
        the conjugated suppressors and vice versa.

        :return: A new FilterBank.
        """
        return FilterBank(conjugate_all(self._suppressors), conjugate_all(self._precoders))
