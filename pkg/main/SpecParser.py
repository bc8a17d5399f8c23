import logging
import math

from main.SimulationErrors import InvalidSpec

logger = logging.getLogger(__name__)


def parse_list(text):
    """
    Split a comma separated value into stripped, non-empty items.

    :param text: The raw value.
    :return: A list of strings.
    """
    return [item.strip() for item in text.split(",") if item.strip()]


def parse_float_list(text):
    """
    Parse a comma separated list of numbers.

    :param text: The raw value, e.g. "0.05, 0.1".
    :return: A list of floats.
    :raises InvalidSpec: If an item is not a number.
    """
    try:
        return [float(item) for item in parse_list(text)]
    except ValueError:
        raise InvalidSpec(f"'{text}' is not a comma separated list of numbers")


def parse_snr_list(text):
    """
    Parse an SNR grid. Either a comma separated list or an inclusive range
    "start:stop:step", so "-5:35:5" gives -5, 0, ..., 35.

    :param text: The raw value.
    :return: A list of floats in dB.
    :raises InvalidSpec: If the value is malformed or the range is empty.
    """
    if ":" not in text:
        return parse_float_list(text)
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidSpec(f"SNR range '{text}' must be start:stop:step")
    try:
        start, stop, step = (float(part) for part in parts)
    except ValueError:
        raise InvalidSpec(f"SNR range '{text}' must contain numbers")
    if step <= 0 or stop < start:
        raise InvalidSpec(f"SNR range '{text}' is empty")
    count = math.floor((stop - start) / step + 1e-9) + 1
    # Rounded so a grid built from 0.1 steps lands on the decimal values.
    return [round(start + idx * step, 10) for idx in range(count)]


class SpecParser:
    """
    The SpecParser class reads an experiment file: one "key = value" pair
    per line, '#' starting a comment, blank lines ignored. Values are kept
    as text; ExperimentSpec converts and validates them.
    """

    KEYS = ("scenario", "snr", "sigma2", "trials", "seed", "algo", "iters", "rel_tol",
            "mc_draws", "eval_channel", "out", "workers")
    SEPARATOR = "="
    COMMENT = "#"

    def __init__(self, path):
        """
        Constructor for the SpecParser class.

        :param path: The path to the experiment file.
        """
        self._path = path

    def parse(self):
        """
        Parse the experiment file.

        :return: A dictionary of raw values keyed by file key.
        :raises InvalidSpec: If the file cannot be read or a line is malformed.
        """
        try:
            with open(self._path, 'r') as file:
                text = file.read()
        except OSError as error:
            raise InvalidSpec(f"cannot read experiment file {self._path}: {error.strerror}")
        return SpecParser.parse_text(text, source=self._path)

    @staticmethod
    def parse_text(text, source="<text>"):
        """
        Parse the contents of an experiment file.

        :param text: The file contents.
        :param source: Name used in error messages.
        :return: A dictionary of raw values keyed by file key.
        """
        values = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split(SpecParser.COMMENT, 1)[0].strip()
            if not line:
                continue
            if SpecParser.SEPARATOR not in line:
                raise InvalidSpec(f"{source}:{number}: expected 'key = value', got '{line}'")
            key, value = (part.strip() for part in line.split(SpecParser.SEPARATOR, 1))
            key = key.replace("-", "_")
            if key not in SpecParser.KEYS:
                raise InvalidSpec(f"{source}:{number}: unknown key '{key}'")
            if key in values:
                logger.warning("%s:%d: '%s' given twice, the last value wins", source, number, key)
            values[key] = value
        return values
