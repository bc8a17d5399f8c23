import math
import re
from typing import Tuple

from pydantic import BaseModel, ConfigDict, model_validator

# "(MxN,D)^K", e.g. "(3x3,1)^4". The unicode multiplication sign is accepted too.
SCENARIO_PATTERN = re.compile(r"^\(\s*(\d+)\s*[x×]\s*(\d+)\s*,\s*(\d+)\s*\)\s*\^\s*(\d+)$")

# Networks studied so far.
SCENARIO_PRESETS = ("(3x3,1)^4", "(3x4,2)^2", "(2x2,1)^3")


def snr_db_to_power(snr_db, noise_power=1.0):
    """
    Convert an SNR in dB into the per-stream transmit power P = N0 10^(SNR/10).

    :param snr_db: The SNR in dB.
    :param noise_power: The noise power N0.
    :return: The linear per-stream power.
    """
    return noise_power * 10.0 ** (snr_db / 10.0)


def power_to_snr_db(power, noise_power=1.0):
    """
    Convert a per-stream transmit power back into an SNR in dB.

    :param power: The linear per-stream power P.
    :param noise_power: The noise power N0.
    :return: The SNR in dB.
    """
    return 10.0 * math.log10(power / noise_power)


def parse_scenario(text):
    """
    Parse a scenario string of the form "(MxN,D)^K".

    :param text: The scenario string.
    :return: A (K, M, N, D) tuple.
    :raises ValueError: If the string is not a scenario.
    """
    match = SCENARIO_PATTERN.match(text.strip())
    if match is None:
        raise ValueError(f"'{text}' is not a scenario of the form (MxN,D)^K")
    m, n, d, k = (int(group) for group in match.groups())
    return k, m, n, d


def format_scenario(k, m, n, d):
    """
    Render (K, M, N, D) as a scenario string, the inverse of parse_scenario.

    :return: The scenario string, e.g. "(3x3,1)^4".
    """
    return f"({m}x{n},{d})^{k}"


class NetworkConfig(BaseModel):
    """
    The NetworkConfig class holds the dimensions and powers of a K-user MIMO
    interference network: K pairs, M transmit antennas, N receive antennas,
    D^k streams for user k, per-stream power P, noise power N0 and the CSI
    error variance sigma2 per complex channel entry.
    """

    model_config = ConfigDict(frozen=True)

    K: int
    M: int
    N: int
    D: Tuple[int, ...]
    P: float
    N0: float = 1.0
    sigma2: float = 0.0

    @model_validator(mode="before")
    @classmethod
    def _expand_streams(cls, data):
        if isinstance(data, dict) and isinstance(data.get("D"), int) and isinstance(data.get("K"), int):
            data = dict(data)
            data["D"] = (data["D"],) * data["K"]
        return data

    @model_validator(mode="after")
    def _check_dimensions(self):
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")
        if self.M < 1 or self.N < 1:
            raise ValueError(f"antenna counts must be positive, got M={self.M}, N={self.N}")
        if len(self.D) != self.K:
            raise ValueError(f"expected {self.K} stream counts, got {len(self.D)}")
        for user, streams in enumerate(self.D):
            if not 1 <= streams <= min(self.M, self.N):
                raise ValueError(f"user {user} has {streams} streams, allowed 1..{min(self.M, self.N)}")
        if not (self.P > 0 and math.isfinite(self.P)):
            raise ValueError(f"P must be positive and finite, got {self.P}")
        if not (self.N0 > 0 and math.isfinite(self.N0)):
            raise ValueError(f"N0 must be positive and finite, got {self.N0}")
        if not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be non-negative and finite, got {self.sigma2}")
        return self

    @classmethod
    def from_snr_db(cls, k, m, n, d, snr_db, sigma2, noise_power=1.0):
        """
        Build a configuration from an SNR in dB instead of a power.

        :param k: Number of users.
        :param m: Transmit antennas.
        :param n: Receive antennas.
        :param d: Streams per user, an int or one count per user.
        :param snr_db: P / N0 in dB.
        :param sigma2: CSI error variance.
        :param noise_power: The noise power N0.
        :return: A NetworkConfig.
        """
        return cls(K=k, M=m, N=n, D=d, P=snr_db_to_power(snr_db, noise_power), N0=noise_power, sigma2=sigma2)

    @classmethod
    def from_scenario(cls, scenario, snr_db, sigma2, noise_power=1.0):
        """
        Build a configuration from a scenario string such as "(3x3,1)^4".

        :param scenario: The scenario string.
        :param snr_db: P / N0 in dB.
        :param sigma2: CSI error variance.
        :param noise_power: The noise power N0.
        :return: A NetworkConfig.
        """
        k, m, n, d = parse_scenario(scenario)
        return cls.from_snr_db(k, m, n, d, snr_db, sigma2, noise_power)

    def total_streams(self):
        """
        Get the total number of streams in the network, sum_j D^j.

        :return: The stream count.
        """
        return sum(self.D)

    def snr_db(self):
        """
        Get the network SNR P / N0 in dB.

        :return: The SNR in dB.
        """
        return power_to_snr_db(self.P, self.N0)

    def scenario(self):
        """
        Render the dimensions as a scenario string. Only networks where
        every user carries the same number of streams have one.

        :return: The scenario string.
        """
        if len(set(self.D)) != 1:
            raise ValueError("per-user stream counts differ; no scenario string exists")
        return format_scenario(self.K, self.M, self.N, self.D[0])
