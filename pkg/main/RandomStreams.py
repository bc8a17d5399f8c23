import numpy as np


class RandomStreams:
    """
    The RandomStreams class hands out independent, reproducible numpy
    generators by name.

    Every name maps to a fixed spawn key of a SeedSequence built from the
    seed, so the channel, error, filter and Monte Carlo draws never share a
    stream and asking for the same name twice replays the same numbers.
    """

    # Spawn-key prefix of every named stream.
    STREAMS = {
        "channels": 0,
        "errors": 1,
        "filters": 2,
        "monte_carlo": 3,
    }

    def __init__(self, seed):
        """
        Constructor for the RandomStreams class.

        :param seed: A non-negative integer seed.
        """
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self._seed = int(seed)

    def get_seed(self):
        """
        Get the seed these streams were built from.

        :return: The integer seed.
        """
        return self._seed

    def generator(self, name, *keys):
        """
        Build a fresh generator for a named stream.

        :param name: One of the names in STREAMS.
        :param keys: Optional non-negative integers that split the stream
                     further, e.g. by grid point.
        :return: A numpy Generator positioned at the start of the stream.
        """
        if name not in RandomStreams.STREAMS:
            raise KeyError(f"unknown random stream '{name}'")
        spawn_key = (RandomStreams.STREAMS[name],) + tuple(int(key) for key in keys)
        sequence = np.random.SeedSequence(entropy=self._seed, spawn_key=spawn_key)
        return np.random.Generator(np.random.PCG64(sequence))

    def for_trial(self, trial):
        """
        Derive the streams of one trial. Trial t uses seed + t, so any
        subset of trials can be replayed on its own.

        :param trial: The zero-based trial index.
        :return: A RandomStreams object for that trial.
        """
        return RandomStreams(self._seed + int(trial))
