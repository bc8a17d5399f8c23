class SimulationError(Exception):
    """
    Base class for every error raised by the transceiver simulator.

    The command line maps InvalidSpec to exit code 2 and every other
    SimulationError to exit code 1.
    """


class NotPositiveDefinite(SimulationError):
    """
    Raised when a matrix that must be Hermitian positive definite is not,
    which in practice signals N0 <= 0 or a numerically degenerate network.
    """


class DimensionMismatch(SimulationError, ValueError):
    """
    Raised when matrix or filter dimensions are inconsistent.
    """


class NonFinite(SimulationError, ArithmeticError):
    """
    Raised when a NaN or Inf shows up in an input or an intermediate result.
    """


class IndexOutOfRange(SimulationError, IndexError):
    """
    Raised when a receiver or stream index is outside the network.
    """


class AccuracyUndefined(SimulationError, ZeroDivisionError):
    """
    Raised when the accuracy statistic is requested for a zero numeric mean.
    """


class InvalidSpec(SimulationError, ValueError):
    """
    Raised when an experiment specification or a configuration file cannot
    be turned into a runnable experiment.
    """
