import logging
import sys
from contextlib import contextmanager
from typing import Optional

import typer
from tqdm import tqdm
from wasabi import Printer, table

from main.ExperimentRunner import cmd_accuracy, cmd_converge, cmd_sweep, dump_channels, load_spec, summarize
from main.NetworkConfig import SCENARIO_PRESETS
from main.SimulationErrors import InvalidSpec, SimulationError

app = typer.Typer(add_completion=False, help="Robust transceiver design for MIMO interference networks.")
msg = Printer(no_print=True)
quiet = False

# Options shared by the experiment commands. Values stay raw text and are
# converted by load_spec, exactly like values read from an experiment file.
CONFIG_OPTION = typer.Option(None, "--config", help="Experiment file with one 'key = value' per line.")
SCENARIO_OPTION = typer.Option(None, "--scenario", help=f"Network as (MxN,D)^K, e.g. {', '.join(SCENARIO_PRESETS)}.")
SNR_OPTION = typer.Option(None, "--snr", help="SNR grid in dB: a comma list or start:stop:step.")
SIGMA2_OPTION = typer.Option(None, "--sigma2", help="Comma list of CSI error variances.")
TRIALS_OPTION = typer.Option(None, "--trials", help="Channel realizations per grid point.")
SEED_OPTION = typer.Option(None, "--seed", help="Base seed; trial t uses seed + t.")
ALGO_OPTION = typer.Option(None, "--algo", help="Comma list of proposed, max_sinr, min_leakage.")
ITERS_OPTION = typer.Option(None, "--iters", help="Maximum number of alternations.")
REL_TOL_OPTION = typer.Option(None, "--rel-tol", help="Relative metric change that stops the alternation.")
MC_DRAWS_OPTION = typer.Option(None, "--mc-draws", help="Monte Carlo error draws per stream.")
EVAL_OPTION = typer.Option(None, "--eval-channel", help="Evaluate on the 'true' or 'estimated' channels.")
OUT_OPTION = typer.Option(None, "--out", help="CSV output file; standard output when omitted.")
WORKERS_OPTION = typer.Option(None, "--workers", help="Worker threads for the trials.")


def status(line):
    """
    Write a status line to standard error unless --quiet is set.

    :param line: The formatted line.
    """
    if not quiet:
        typer.echo(line, err=True)


@contextmanager
def csv_destination(path):
    """
    Open the CSV destination: the given file or standard output.

    :param path: The output path, or None.
    :raises InvalidSpec: If the file cannot be opened for writing.
    """
    if path is None:
        yield sys.stdout
        return
    try:
        file = open(path, 'w', newline='')
    except OSError as error:
        raise InvalidSpec(f"cannot write {path}: {error.strerror}")
    with file:
        yield file


def run_experiment(command, name, config, overrides):
    """
    Build the experiment, run one experiment command and report the outcome.
    Failures end the process with exit code 2 for an invalid spec and 1 for
    a numerical failure.

    :param command: One of cmd_sweep, cmd_accuracy, cmd_converge.
    :param name: The command name shown in status lines.
    :param config: Path of the experiment file, or None.
    :param overrides: Raw command line values keyed by file key.
    """
    try:
        spec = load_spec(config, overrides, experiment=name)
        with tqdm(total=spec.trials, desc=name, unit="trial", file=sys.stderr, disable=quiet) as bar:
            with csv_destination(spec.out) as out:
                runner = command(spec, out, progress=bar.update)
    except InvalidSpec as error:
        typer.echo(msg.fail("Invalid experiment", str(error)), err=True)
        raise typer.Exit(code=2)
    except SimulationError as error:
        typer.echo(msg.fail("Numerical failure", f"{type(error).__name__}: {error}"), err=True)
        raise typer.Exit(code=1)

    status(msg.good(f"{name}: wrote {runner.get_rows_written()} rows to {spec.out or 'standard output'}"))
    if runner.get_violations():
        status(msg.warn(f"{runner.get_violations()} half-steps decreased the metric",
                        "Run with --verbose to see each one."))


@app.callback()
def main_options(
        quiet_output: bool = typer.Option(False, "--quiet", help="No progress bar or status lines."),
        verbose: bool = typer.Option(False, "--verbose", help="Debug logging on standard error.")):
    """
    Robust transceiver design for MIMO interference networks under imperfect CSI.
    """
    global quiet
    quiet = quiet_output
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


@app.command()
def sweep(config: Optional[str] = CONFIG_OPTION, scenario: Optional[str] = SCENARIO_OPTION,
          snr: Optional[str] = SNR_OPTION, sigma2: Optional[str] = SIGMA2_OPTION,
          trials: Optional[str] = TRIALS_OPTION, seed: Optional[str] = SEED_OPTION,
          algo: Optional[str] = ALGO_OPTION, iters: Optional[str] = ITERS_OPTION,
          rel_tol: Optional[str] = REL_TOL_OPTION, eval_channel: Optional[str] = EVAL_OPTION,
          out: Optional[str] = OUT_OPTION, workers: Optional[str] = WORKERS_OPTION):
    """
    Average sum rate and energy efficiency versus SNR, one row per run.
    """
    run_experiment(cmd_sweep, "sweep", config, dict(
        scenario=scenario, snr=snr, sigma2=sigma2, trials=trials, seed=seed, algo=algo, iters=iters,
        rel_tol=rel_tol, eval_channel=eval_channel, out=out, workers=workers))


@app.command()
def accuracy(config: Optional[str] = CONFIG_OPTION, scenario: Optional[str] = SCENARIO_OPTION,
             snr: Optional[str] = SNR_OPTION, sigma2: Optional[str] = SIGMA2_OPTION,
             trials: Optional[str] = TRIALS_OPTION, seed: Optional[str] = SEED_OPTION,
             iters: Optional[str] = ITERS_OPTION, rel_tol: Optional[str] = REL_TOL_OPTION,
             mc_draws: Optional[str] = MC_DRAWS_OPTION, out: Optional[str] = OUT_OPTION,
             workers: Optional[str] = WORKERS_OPTION):
    """
    Accuracy of the first-order mean SINR approximation versus SNR.
    """
    run_experiment(cmd_accuracy, "accuracy", config, dict(
        scenario=scenario, snr=snr, sigma2=sigma2, trials=trials, seed=seed, iters=iters,
        rel_tol=rel_tol, mc_draws=mc_draws, out=out, workers=workers))


@app.command()
def converge(config: Optional[str] = CONFIG_OPTION, scenario: Optional[str] = SCENARIO_OPTION,
             snr: Optional[str] = SNR_OPTION, sigma2: Optional[str] = SIGMA2_OPTION,
             trials: Optional[str] = TRIALS_OPTION, seed: Optional[str] = SEED_OPTION,
             iters: Optional[str] = ITERS_OPTION, rel_tol: Optional[str] = REL_TOL_OPTION,
             out: Optional[str] = OUT_OPTION, workers: Optional[str] = WORKERS_OPTION):
    """
    Metric trace of the proposed algorithm, one row per half-step.
    """
    run_experiment(cmd_converge, "converge", config, dict(
        scenario=scenario, snr=snr, sigma2=sigma2, trials=trials, seed=seed, iters=iters,
        rel_tol=rel_tol, out=out, workers=workers))


@app.command(name="summarize")
def summarize_sweep(path: str = typer.Argument(..., help="CSV written by the sweep command."),
                    target_rate: float = typer.Option(14.0, "--target-rate", help="Sum rate in b/s/Hz.")):
    """
    Trial-averaged curves of a sweep and the SNR at which each curve reaches a target rate.
    """
    try:
        points, crossings = summarize(path, target_rate)
    except InvalidSpec as error:
        typer.echo(msg.fail("Cannot summarize", str(error)), err=True)
        raise typer.Exit(code=2)

    data = [(scenario, algorithm, f"{sigma2:g}", f"{point.get_snr_db():g}", f"{point.get_mean_rate():.3f}",
             f"{point.get_mean_efficiency():.4g}", point.get_trials())
            for point in points for scenario, algorithm, sigma2 in [point.get_curve()]]
    typer.echo(table(data, header=("scenario", "algorithm", "sigma2", "snr_db", "sum_rate", "efficiency",
                                   "trials"), divider=True))
    typer.echo(msg.divider(f"SNR at {target_rate:g} b/s/Hz"))
    for (scenario, algorithm, sigma2), snr_db in crossings.items():
        reached = "not reached" if snr_db is None else f"{snr_db:.2f} dB"
        typer.echo(msg.text(f"{scenario} {algorithm} sigma2={sigma2:g}: {reached}"))


@app.command()
def channels(scenario: str = typer.Option("(3x3,1)^4", "--scenario", help="Network as (MxN,D)^K."),
             sigma2: float = typer.Option(0.1, "--sigma2", help="CSI error variance."),
             seed: int = typer.Option(0, "--seed", help="Seed of the channel streams."),
             out: str = typer.Option(..., "--out", help="JSON output file.")):
    """
    Write one sampled channel set (G, E and H) as JSON.
    """
    try:
        dump_channels(scenario, sigma2, seed, out)
    except InvalidSpec as error:
        typer.echo(msg.fail("Invalid channel request", str(error)), err=True)
        raise typer.Exit(code=2)
    status(msg.good(f"channels: wrote {scenario} with sigma2={sigma2:g}, seed={seed} to {out}"))


def main():
    app()


if __name__ == "__main__":
    main()
