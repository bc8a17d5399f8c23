import csv
import logging
import threading
from collections import OrderedDict
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from main.ChannelSet import ChannelSet
from main.NetworkConfig import NetworkConfig, parse_scenario
from main.PerformanceAnalysis import (AccuracyRow, energy_efficiency, mean_sinr_first_order, mean_sinr_numeric,
                                      snr_at_rate, sum_rate)
from main.RandomStreams import RandomStreams
from main.SimulationErrors import InvalidSpec
from main.SpecParser import SpecParser, parse_float_list, parse_list, parse_snr_list
from main.TransceiverDesign import ALGORITHMS, AlgoOptions, TransceiverDesign

logger = logging.getLogger(__name__)

RESULT_HEADER = ("scenario", "algorithm", "snr_db", "sigma2", "trial", "seed", "sum_rate_bits",
                 "energy_efficiency", "metric_final", "iterations", "alpha_pct")
ACCURACY_HEADER = ("scenario",) + AccuracyRow.HEADER
CONVERGE_HEADER = ("trial", "snr_db", "sigma2", "half_step", "metric")

# The accuracy study needs at least this many Monte Carlo draws per point.
MIN_ACCURACY_DRAWS = 10000

DEFAULT_SNR_GRID = "-5:35:5"


def format_value(value):
    """
    Render one CSV field: floats with 9 significant digits, None as an empty
    string and everything else as text.

    :param value: The field value.
    :return: The field text.
    """
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


class ExperimentSpec(BaseModel):
    """
    The ExperimentSpec class describes one experiment: the network, the SNR
    and CSI error grids, how many trials to average and how to run and
    evaluate the algorithms.
    """

    model_config = ConfigDict(frozen=True)

    scenario: str = "(3x3,1)^4"
    snr_db_list: Tuple[float, ...] = tuple(parse_snr_list(DEFAULT_SNR_GRID))
    sigma2_list: Tuple[float, ...] = (0.1,)
    trials: int = 200
    seed: int = 0
    algorithms: Tuple[str, ...] = ALGORITHMS
    eval_channel: Literal["true", "estimated"] = "true"
    alternations: int = 100
    rel_tol: float = 1e-6
    mc_draws: int = 10000
    workers: int = 1
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check_spec(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not self.snr_db_list:
            raise ValueError("the SNR list is empty")
        if not self.sigma2_list:
            raise ValueError("the sigma2 list is empty")
        if not self.algorithms:
            raise ValueError("no algorithm selected")
        unknown = [name for name in self.algorithms if name not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}, choose from {list(ALGORITHMS)}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.alternations < 1 or self.mc_draws < 1 or self.workers < 1:
            raise ValueError("alternations, mc_draws and workers must be at least 1")
        if self.rel_tol < 0:
            raise ValueError(f"rel_tol must be non-negative, got {self.rel_tol}")
        # Every grid point has to be a valid network.
        for snr_db in self.snr_db_list:
            for sigma2 in self.sigma2_list:
                self.network(snr_db, sigma2)
        return self

    @classmethod
    def build(cls, **fields):
        """
        Build a spec, reporting every validation failure as InvalidSpec.

        :param fields: ExperimentSpec fields.
        :return: An ExperimentSpec.
        :raises InvalidSpec: If the fields do not describe a valid experiment.
        """
        try:
            return cls(**fields)
        except ValidationError as error:
            causes = "; ".join(f"{'.'.join(str(part) for part in issue['loc']) or 'spec'}: {issue['msg']}"
                               for issue in error.errors())
            raise InvalidSpec(causes)
        except ValueError as error:
            raise InvalidSpec(str(error))

    def dimensions(self):
        """
        Get the network dimensions of the scenario.

        :return: A (K, M, N, D) tuple.
        """
        return parse_scenario(self.scenario)

    def network(self, snr_db, sigma2):
        """
        Build the NetworkConfig of one grid point, with N0 = 1.

        :param snr_db: The SNR in dB.
        :param sigma2: The CSI error variance.
        :return: A NetworkConfig.
        """
        return NetworkConfig.from_scenario(self.scenario, snr_db, sigma2)

    def options(self, algorithm):
        """
        Build the AlgoOptions of one algorithm.

        :param algorithm: The algorithm name.
        :return: An AlgoOptions.
        """
        return AlgoOptions(max_alternations=self.alternations, rel_tol=self.rel_tol, algorithm=algorithm)


# File key -> (ExperimentSpec field, converter of the raw text).
_FIELD_CONVERTERS = {
    "scenario": ("scenario", str.strip),
    "snr": ("snr_db_list", parse_snr_list),
    "sigma2": ("sigma2_list", parse_float_list),
    "trials": ("trials", str.strip),
    "seed": ("seed", str.strip),
    "algo": ("algorithms", parse_list),
    "iters": ("alternations", str.strip),
    "rel_tol": ("rel_tol", str.strip),
    "mc_draws": ("mc_draws", str.strip),
    "eval_channel": ("eval_channel", str.strip),
    "out": ("out", str.strip),
    "workers": ("workers", str.strip),
}


def check_experiment(spec, experiment):
    """
    Apply the checks an experiment adds on top of the ExperimentSpec
    validation.

    :param spec: The ExperimentSpec.
    :param experiment: One of "sweep", "accuracy", "converge".
    :raises InvalidSpec: If the spec cannot run that experiment.
    """
    if experiment == "accuracy" and spec.mc_draws < MIN_ACCURACY_DRAWS:
        raise InvalidSpec(f"the accuracy study needs mc_draws >= {MIN_ACCURACY_DRAWS}, got {spec.mc_draws}")


def load_spec(config_path=None, overrides=None, experiment=None):
    """
    Build an ExperimentSpec from an optional experiment file and command
    line overrides. Both use the file keys and raw text values; overrides
    that are None are ignored and the rest replace the file values.

    :param config_path: Path of a "key = value" experiment file, or None.
    :param overrides: A dictionary of raw override values.
    :param experiment: The experiment the spec is for, checked with check_experiment.
    :return: An ExperimentSpec.
    :raises InvalidSpec: If any value is malformed or the experiment is invalid.
    """
    values = SpecParser(config_path).parse() if config_path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = str(value)
    fields = {}
    for key, value in values.items():
        if key not in _FIELD_CONVERTERS:
            raise InvalidSpec(f"unknown key '{key}'")
        field, convert = _FIELD_CONVERTERS[key]
        fields[field] = convert(value)
    spec = ExperimentSpec.build(**fields)
    if experiment is not None:
        check_experiment(spec, experiment)
    return spec


class ResultRow:
    """
    The ResultRow class is one record of a sweep: one algorithm run on one
    trial at one grid point.
    """

    def __init__(self, scenario, algorithm, snr_db, sigma2, trial, seed, sum_rate_bits, efficiency,
                 metric_final, iterations, alpha_pct=None):
        """
        Constructor for the ResultRow class. Fields follow RESULT_HEADER;
        alpha_pct stays None for sweep rows.
        """
        self._fields = (scenario, algorithm, float(snr_db), float(sigma2), int(trial), int(seed),
                        float(sum_rate_bits), float(efficiency), float(metric_final), int(iterations),
                        None if alpha_pct is None else float(alpha_pct))

    def get(self, name):
        """
        Get a field by its CSV column name.

        :param name: A name from RESULT_HEADER.
        :return: The field value.
        """
        return self._fields[RESULT_HEADER.index(name)]

    def to_csv(self):
        """
        Render the row as CSV fields.

        :return: A list of strings in RESULT_HEADER order.
        """
        return [format_value(value) for value in self._fields]


class ExperimentRunner:
    """
    The ExperimentRunner class runs the sweep, accuracy and convergence
    experiments of a spec and writes their CSV output.

    Trials are independent; they are spread over `workers` threads and their
    rows are buffered per trial, then written in trial order, so the output
    does not depend on the number of workers.
    """

    def __init__(self, spec, progress=None):
        """
        Constructor for the ExperimentRunner class.

        :param spec: The ExperimentSpec.
        :param progress: Optional callable, invoked with 1 after each trial.
        """
        self._spec = spec
        self._progress = progress
        self._lock = threading.Lock()
        self._violations = 0
        self._rows_written = 0

    def _run_trials(self, work):
        """
        Run work(trial) for every trial on the worker threads.

        :param work: A callable returning the buffered result of one trial.
        :return: The results, indexed by trial.
        """
        trials = self._spec.trials
        results = [None] * trials
        failures = []

        def thread_start(first):
            for trial in range(first, trials, self._spec.workers):
                with self._lock:
                    if failures:
                        return
                try:
                    outcome = work(trial)
                except Exception as error:
                    with self._lock:
                        failures.append((trial, error))
                    return
                with self._lock:
                    results[trial] = outcome
                    if self._progress is not None:
                        self._progress(1)

        threads = []
        for first in range(min(self._spec.workers, trials)):
            t = threading.Thread(target=thread_start, args=(first,), name=f"trials-{first}")
            threads.append(t)
            t.start()

        for t in threads:
            t.join()

        if failures:
            trial, error = min(failures, key=lambda failure: failure[0])
            logger.error("Trial %d failed: %s", trial, error)
            raise error
        return results

    def _design(self, channel_set, algorithm, streams):
        """
        Run one algorithm on the estimated channels of a channel set.

        :return: A (FilterBank, RunTrace) pair.
        """
        config = channel_set.get_config()
        design = TransceiverDesign(channel_set.get_estimated(), config, self._spec.options(algorithm))
        filters, trace = design.run(streams.generator("filters"))
        with self._lock:
            self._violations += trace.get_violations()
        return filters, trace

    def _evaluation_channels(self, channel_set):
        """
        Pick the channels the designed filters are scored on.
        """
        if self._spec.eval_channel == "true":
            return channel_set.get_true()
        return channel_set.get_estimated()

    def _sweep_trial(self, trial):
        spec = self._spec
        streams = RandomStreams(spec.seed).for_trial(trial)
        rows = []
        for snr_db in spec.snr_db_list:
            for sigma2 in spec.sigma2_list:
                channel_set = ChannelSet.sample(spec.network(snr_db, sigma2), streams)
                config = channel_set.get_config()
                for algorithm in spec.algorithms:
                    filters, trace = self._design(channel_set, algorithm, streams)
                    rate = sum_rate(self._evaluation_channels(channel_set), filters.get_precoders(),
                                    filters.get_suppressors(), config)
                    rows.append(ResultRow(spec.scenario, algorithm, snr_db, sigma2, trial, streams.get_seed(),
                                          rate, energy_efficiency(rate, config), trace.final_metric(),
                                          trace.get_iterations_run()))
        return rows

    def _accuracy_trial(self, trial):
        spec = self._spec
        streams = RandomStreams(spec.seed).for_trial(trial)
        sums = []
        for snr_idx, snr_db in enumerate(spec.snr_db_list):
            for sigma2_idx, sigma2 in enumerate(spec.sigma2_list):
                channel_set = ChannelSet.sample(spec.network(snr_db, sigma2), streams)
                config = channel_set.get_config()
                estimated = channel_set.get_estimated()
                filters, _ = self._design(channel_set, "proposed", streams)
                precoders, suppressors = filters.get_precoders(), filters.get_suppressors()
                rng = streams.generator("monte_carlo", snr_idx, sigma2_idx)
                numeric = 0.0
                approx = 0.0
                for k in range(config.K):
                    for d in range(config.D[k]):
                        numeric += mean_sinr_numeric(estimated, precoders, suppressors, config, k, d,
                                                     spec.mc_draws, rng)
                        approx += mean_sinr_first_order(estimated, precoders, suppressors, config, k, d)
                sums.append((numeric, approx, config.total_streams()))
        return sums

    def _converge_trial(self, trial):
        spec = self._spec
        streams = RandomStreams(spec.seed).for_trial(trial)
        rows = []
        for snr_db in spec.snr_db_list:
            for sigma2 in spec.sigma2_list:
                channel_set = ChannelSet.sample(spec.network(snr_db, sigma2), streams)
                _, trace = self._design(channel_set, "proposed", streams)
                for half_step, value in enumerate(trace.get_metric_values()):
                    rows.append([trial, float(snr_db), float(sigma2), half_step, float(value)])
        return rows

    def _write(self, out, header, rows):
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            self._rows_written += 1

    def sweep(self, out):
        """
        Run every algorithm on every trial and grid point and write one
        ResultRow per run. Within a trial all grid points share the same
        channel and error draws, scaled by sigma2, and all algorithms start
        from the same initial filters.

        :param out: A text stream for the CSV.
        :return: The ResultRows in output order.
        """
        results = self._run_trials(self._sweep_trial)
        rows = [row for trial_rows in results for row in trial_rows]
        self._write(out, RESULT_HEADER, (row.to_csv() for row in rows))
        return rows

    def accuracy(self, out):
        """
        For every grid point, average the Monte Carlo mean SINR and its
        first-order approximation over all streams of all trials, using
        converged filters of the proposed algorithm, and write one
        AccuracyRow per point.

        :param out: A text stream for the CSV.
        :return: The AccuracyRows in output order.
        :raises InvalidSpec: If fewer than MIN_ACCURACY_DRAWS draws are requested.
        """
        check_experiment(self._spec, "accuracy")
        results = self._run_trials(self._accuracy_trial)
        points = [(snr_db, sigma2) for snr_db in self._spec.snr_db_list for sigma2 in self._spec.sigma2_list]
        rows = []
        for idx, (snr_db, sigma2) in enumerate(points):
            numeric = sum(trial_sums[idx][0] for trial_sums in results)
            approx = sum(trial_sums[idx][1] for trial_sums in results)
            count = sum(trial_sums[idx][2] for trial_sums in results)
            rows.append(AccuracyRow(snr_db, sigma2, numeric / count, approx / count))
        self._write(out, ACCURACY_HEADER,
                    ([self._spec.scenario] + [format_value(value) for value in row.values()] for row in rows))
        return rows

    def converge(self, out):
        """
        Run the proposed algorithm on every trial and grid point and write
        its full metric trace, one row per recorded half-step.

        :param out: A text stream for the CSV.
        :return: The number of rows written.
        """
        results = self._run_trials(self._converge_trial)
        rows = [[format_value(value) for value in row] for trial_rows in results for row in trial_rows]
        self._write(out, CONVERGE_HEADER, rows)
        return len(rows)

    def get_violations(self):
        """
        Get the number of half-steps, over all runs so far, that decreased
        the metric beyond tolerance.

        :return: The violation count.
        """
        return self._violations

    def get_rows_written(self):
        """
        Get the number of CSV data rows written so far.

        :return: The row count.
        """
        return self._rows_written


def cmd_sweep(spec, out, progress=None):
    """
    Run the sum rate and energy efficiency sweep.

    :return: The ExperimentRunner, for its counters.
    """
    runner = ExperimentRunner(spec, progress)
    runner.sweep(out)
    return runner


def cmd_accuracy(spec, out, progress=None):
    """
    Run the approximation accuracy study.

    :return: The ExperimentRunner, for its counters.
    """
    runner = ExperimentRunner(spec, progress)
    runner.accuracy(out)
    return runner


def cmd_converge(spec, out, progress=None):
    """
    Dump the convergence traces of the proposed algorithm.

    :return: The ExperimentRunner, for its counters.
    """
    runner = ExperimentRunner(spec, progress)
    runner.converge(out)
    return runner


class CurvePoint:
    """
    The CurvePoint class is one point of a trial-averaged sweep curve.
    """

    def __init__(self, scenario, algorithm, sigma2, snr_db, mean_rate, mean_efficiency, trials):
        """
        Constructor for the CurvePoint class.

        :param scenario: The scenario string of the curve.
        :param algorithm: The algorithm of the curve.
        :param sigma2: The CSI error variance of the curve.
        :param snr_db: The SNR of the point in dB.
        :param mean_rate: The trial-averaged sum rate.
        :param mean_efficiency: The trial-averaged energy efficiency.
        :param trials: The number of trials averaged.
        """
        self._scenario = scenario
        self._algorithm = algorithm
        self._sigma2 = sigma2
        self._snr_db = snr_db
        self._mean_rate = mean_rate
        self._mean_efficiency = mean_efficiency
        self._trials = trials

    def get_curve(self):
        """
        Get the key of the curve the point belongs to.

        :return: A (scenario, algorithm, sigma2) tuple.
        """
        return self._scenario, self._algorithm, self._sigma2

    def get_snr_db(self):
        """
        Get the SNR of the point.

        :return: The SNR in dB.
        """
        return self._snr_db

    def get_mean_rate(self):
        """
        Get the trial-averaged sum rate.

        :return: The mean sum rate in b/s/Hz.
        """
        return self._mean_rate

    def get_mean_efficiency(self):
        """
        Get the trial-averaged energy efficiency.

        :return: The mean efficiency in b/s/Hz per unit power.
        """
        return self._mean_efficiency

    def get_trials(self):
        """
        Get the number of trials averaged into the point.

        :return: The trial count.
        """
        return self._trials


def summarize(path, target_rate=14.0):
    """
    Average a sweep CSV over trials and find, for every curve, the first SNR
    at which the mean sum rate reaches the target.

    :param path: Path of a CSV written by cmd_sweep.
    :param target_rate: The target sum rate in b/s/Hz.
    :return: (list of CurvePoint sorted by curve and SNR,
              ordered dictionary curve -> SNR or None)
    :raises InvalidSpec: If the file is not a sweep CSV.
    """
    groups = OrderedDict()
    try:
        with open(path, 'r', newline='') as file:
            reader = csv.DictReader(file)
            if tuple(reader.fieldnames or ()) != RESULT_HEADER:
                raise InvalidSpec(f"{path} is not a sweep CSV")
            for record in reader:
                key = (record["scenario"], record["algorithm"], float(record["sigma2"]), float(record["snr_db"]))
                rates, efficiencies = groups.setdefault(key, ([], []))
                rates.append(float(record["sum_rate_bits"]))
                efficiencies.append(float(record["energy_efficiency"]))
    except InvalidSpec:
        raise
    except OSError as error:
        raise InvalidSpec(f"cannot read {path}: {error.strerror}")
    except (KeyError, ValueError) as error:
        raise InvalidSpec(f"{path} has a malformed record: {error}")

    points = [CurvePoint(scenario, algorithm, sigma2, snr_db, sum(rates) / len(rates),
                         sum(efficiencies) / len(efficiencies), len(rates))
              for (scenario, algorithm, sigma2, snr_db), (rates, efficiencies) in sorted(groups.items())]
    crossings = OrderedDict()
    for point in points:
        crossings.setdefault(point.get_curve(), [])
        crossings[point.get_curve()].append(point)
    for curve, curve_points in crossings.items():
        crossings[curve] = snr_at_rate([point.get_snr_db() for point in curve_points],
                                       [point.get_mean_rate() for point in curve_points], target_rate)
    return points, crossings


def dump_channels(scenario, sigma2, seed, path, snr_db=0.0):
    """
    Sample one channel set and write it as JSON.

    :param scenario: The scenario string.
    :param sigma2: The CSI error variance.
    :param seed: The seed.
    :param path: The output path.
    :param snr_db: The SNR stored in the configuration; the channels do not depend on it.
    :return: The ChannelSet written.
    """
    try:
        config = NetworkConfig.from_scenario(scenario, snr_db, sigma2)
        streams = RandomStreams(seed)
    except (ValidationError, ValueError) as error:
        raise InvalidSpec(str(error))
    channel_set = ChannelSet.sample(config, streams)
    channel_set.dump(path)
    return channel_set
