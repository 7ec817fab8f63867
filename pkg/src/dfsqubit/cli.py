"""Command-line interface (``dfsqubit``).

Exit status is 0 only when every requested computation succeeded: 1 for a
failed run or refused operation, 2 for invalid arguments or configuration.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .config import ConfigError, ExperimentConfig, from_mapping, known_keys, parse_state, parse_text
from .encoding import describe, encoded_dm, logical_initial_state, parse_strategy, projector
from .figures import FIGURES, reproduce as reproduce_figure, write_spectrum_csv
from .fitting import extrapolate, fit_fidelity
from .metrics import purity, sampling_faithfulness
from .model import ModelParams
from .runner import RunError, compare as compare_runs, read_series_csv, run, write_compare_csv
from .sampling import (
    enumerate_bell_grid,
    logical_grid,
    logical_grid_vectors,
    stratum_counts,
    write_ensemble_csv,
)


class ConfigUsageError(click.ClickException):
    exit_code = 2


def _config_options(fn):
    """Add one ``--key`` option per config key; unset options are not overrides."""
    for key in reversed(known_keys()):
        fn = click.option(f"--{key.replace('_', '-')}", key, default=None, help=f"config key {key}")(fn)
    return fn


def _collect(config_file, settings, options) -> dict:
    values: dict = {}
    if config_file:
        values.update(parse_text(Path(config_file).read_text()))
    for item in settings:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigUsageError(f"--set expects key=value, got {item!r}")
        values[key.strip()] = value.strip()
    values.update({k: v for k, v in options.items() if k in known_keys() and v is not None})
    return values


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.version_option(package_name="artifact")
def main(verbose: bool) -> None:
    """Two interacting qubits in an Ohmic bath: dynamics, encodings and metrics."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
    )


@main.command()
@click.option("--nu-min", type=float, default=-10.0, show_default=True)
@click.option("--nu-max", type=float, default=10.0, show_default=True)
@click.option("--points", type=int, default=201, show_default=True)
@click.option("--delta", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (stdout if omitted).")
def spectrum(nu_min, nu_max, points, delta, out):
    """Closed-pair energies and Bell mixing coefficients versus nu/delta."""
    if points < 2:
        raise ConfigUsageError("--points must be at least 2")
    ratios = np.linspace(nu_min, nu_max, points)
    if out:
        with open(out, "w", newline="") as fh:
            write_spectrum_csv(fh, ratios, delta)
    else:
        write_spectrum_csv(click.get_text_stream("stdout"), ratios, delta)


@main.command()
@click.option(
    "--ensemble",
    type=click.Choice(["bell_grid_332", "logical_grid_18"]),
    default="bell_grid_332",
    show_default=True,
)
@click.option("--strategy", default="AF", show_default=True, help="Strategy for the logical grid.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write amplitudes as CSV.")
def sample(ensemble, strategy, out):
    """Enumerate an initial-state ensemble and report its faithfulness."""
    if ensemble == "bell_grid_332":
        states = enumerate_bell_grid()
        counts = stratum_counts(states)
        click.echo(f"states: {len(states)}")
        click.echo("strata |d_S|^2: " + ", ".join(f"{k:g}:{v}" for k, v in counts.items()))
        click.echo(f"faithfulness: {sampling_faithfulness(states, 4):.3e}")
    else:
        try:
            strat = parse_strategy(strategy)
            states = [logical_initial_state(strat, th, ph) for th, ph in logical_grid()]
        except ValueError as exc:
            raise ConfigUsageError(str(exc)) from exc
        click.echo(f"states: {len(states)}")
        click.echo(f"faithfulness (logical 2x2): {sampling_faithfulness(logical_grid_vectors(), 2):.3e}")
    if out:
        write_ensemble_csv(states, out)
        click.echo(f"wrote {out}")


def _build_config(config_file, settings, options) -> ExperimentConfig:
    try:
        return from_mapping(_collect(config_file, settings, options))
    except ConfigError as exc:
        raise ConfigUsageError(str(exc)) from exc


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-s", "--set", "settings", multiple=True, help="Override as key=value.")
@click.option("--dry-run", is_flag=True, help="Print the resolved config and exit.")
@_config_options
def evolve(config_file, settings, dry_run, **options):
    """Run one configured experiment and write its output directory."""
    cfg = _build_config(config_file, settings, options)
    if dry_run:
        click.echo(cfg.dumps(), nl=False)
        return
    try:
        result = run(cfg)
    except RunError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {result.run_dir}")
    for (metric, label), ts in result.series.items():
        click.echo(f"{metric}[{label}] final mean {ts.mean[-1]:.6f} std {ts.std[-1]:.6f}")


@main.command("encode-metrics")
@click.option("--strategy", "strategy_spec", required=True, help="e.g. AF or OPTSYMM(0.866,0.5)")
@click.option("--state", default="S", show_default=True, help="Bell label, E0..E3, QF or 4 amplitudes.")
@click.option("--nu", type=float, default=-5.0, show_default=True, help="Used by E0..E3 and QF.")
def encode_metrics(strategy_spec, state, nu):
    """Encoded 2x2 state, Bloch vector, physicality and logical population."""
    try:
        strat = parse_strategy(strategy_spec)
        psi = parse_state(state, ModelParams(nu=nu))
        rho = np.outer(psi, psi.conj())
        click.echo(describe(strat))
        enc = encoded_dm(rho, strat)
    except (ValueError, ConfigError) as exc:
        raise ConfigUsageError(str(exc)) from exc
    bloch = ", ".join(f"{v:.6f}" for v in enc.bloch)
    click.echo(f"bloch: ({bloch})")
    click.echo(f"purity: {purity(enc.matrix):.6f}")
    click.echo(f"physicality (min eigenvalue): {enc.physicality:.6f}")
    click.echo(f"logical population: {np.trace(projector(strat) @ rho).real:.6f}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--column", default="mean", show_default=True)
@click.option("--extrapolate", "t_extra", type=float, default=None, help="Evaluate the fit here.")
def fit(csv_path, column, t_extra):
    """Fit a fidelity series to the damped-oscillation model."""
    data = read_series_csv(csv_path)
    if column not in data:
        raise ConfigUsageError(f"column {column!r} not in {csv_path}")
    try:
        result = fit_fidelity(data["t"], data[column])
    except ValueError as exc:
        raise ConfigUsageError(str(exc)) from exc
    failed = False
    if t_extra is not None:
        try:
            extrapolate(result, t_extra)
        except ValueError as exc:
            click.echo(f"error: {exc}", err=True)
            failed = True
    summary = result.as_dict()
    summary["tau"] = None if summary["tau"] == float("inf") else summary["tau"]
    click.echo(json.dumps(summary, indent=2))
    if failed or not result.converged:
        sys.exit(1)


@main.command()
@click.argument("run_a", type=click.Path(exists=True, file_okay=False))
@click.argument("run_b", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write |rho_13|, P1, P3 table.")
def compare(run_a, run_b, out):
    """Absolute differences between two run directories."""
    try:
        report = compare_runs(run_a, run_b)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for key, value in sorted(report["max_abs_diff"].items()):
        click.echo(f"{key}: {value:.3e}")
    if out:
        write_compare_csv(report, out)
        click.echo(f"wrote {out}")


@main.command()
@click.argument("figure_id", type=click.Choice(sorted(FIGURES)))
@click.option("-s", "--set", "settings", multiple=True, help="Override for every sub-run, key=value.")
@_config_options
def reproduce(figure_id, settings, **options):
    """Run the canned desk-scale experiment FIGURE_ID."""
    overrides = _collect(None, settings, options)
    output_dir = overrides.pop("output_dir", None) or ExperimentConfig().output_dir
    click.echo(FIGURES[figure_id].description)
    try:
        written = reproduce_figure(figure_id, output_dir, overrides)
    except ConfigError as exc:
        raise ConfigUsageError(str(exc)) from exc
    except RunError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
