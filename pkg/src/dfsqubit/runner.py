"""Ensemble runs: trajectories for every realization, metrics, aggregation and files.

Each realization yields reduced two-qubit density matrices (Bell basis,
Schrodinger picture) for the open dynamics and for the closed qubit pair. All
metrics compare those two trajectories. Results are assembled in realization
order, so output files do not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .closed_evolution import ExactOracle, closed_trajectory
from .config import ExperimentConfig, parse_state
from .encoding import EncodingStrategy, logical_initial_state, logical_state_matrix
from .fitting import extrapolate, fit_fidelity
from .lindblad import analytic_density, decay_rate, rk4_lindblad, to_schrodinger
from .metrics import aggregate, leakage, purity, uhlmann_fidelity
from .model import bell_to_energy, energy_to_bell
from .sampling import (
    GAUGE_RULE,
    LOGICAL_PHIS,
    LOGICAL_THETAS,
    enumerate_bell_grid,
    logical_grid,
    thin,
)
from .tdvp import cached_evolve_map, evolve

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
TWO_QUBIT = "TWOQUBIT"
POPULATION_COLUMNS = ("P0", "P1", "P2", "P3", "abs_rho13")


class RunError(RuntimeError):
    """At least one realization failed; the run directory holds the details."""


@dataclass
class Realization:
    """Initial state and the strategy whose metrics it feeds (``None``: all)."""

    index: int
    state: np.ndarray
    strategy: str | None = None


@dataclass
class RunResult:
    run_dir: Path
    times: np.ndarray
    series: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def fmt(x: float) -> str:
    return f"{x:.17g}"


def realizations(config: ExperimentConfig) -> list[Realization]:
    """Initial states in their fixed realization order."""
    if config.ensemble == "single":
        return [Realization(0, parse_state(config.state, config.model))]
    if config.ensemble == "bell_grid_332":
        states = thin(enumerate_bell_grid(), config.thin)
        return [Realization(i, s) for i, s in enumerate(states)]
    out = []
    for spec, strat in zip(config.strategies, config.strategy_objects):
        for theta, phi in thin(logical_grid(), config.thin):
            out.append(Realization(len(out), logical_initial_state(strat, theta, phi), spec))
    return out


def _lindblad_open(config: ExperimentConfig, psi: np.ndarray, times: np.ndarray) -> list:
    params = config.model
    rho0 = bell_to_energy(np.outer(psi, psi.conj()), params)
    if config.method == "lindblad_analytic":
        rates = decay_rate(params)
        interaction = [
            analytic_density(rho0, rates, t, config.allow_unspecified_coherences)
            for t in times
        ]
    else:
        traj = rk4_lindblad(
            rho0, params, config.tdvp.dt, config.tdvp.t_final, config.channel_rates
        )
        interaction = traj[:: config.observe_every]
    return [energy_to_bell(to_schrodinger(r, params, t), params) for r, t in zip(interaction, times)]


def _open_direct(args) -> list:
    """Worker entry point for methods evolved one realization at a time."""
    config, psi = args
    if config.method in ("lindblad_analytic", "lindblad_rk4"):
        return _lindblad_open(config, psi, config.times)
    if config.method == "closed":
        return list(closed_trajectory(psi, config.model, config.times))
    return [rho for _, rho in evolve(psi, config.model, config.tdvp, config.observe_every)]


def _open_trajectories(config: ExperimentConfig, reals: list[Realization], metadata: dict):
    """Open-system trajectories per realization; exceptions are captured, not raised."""
    results: list = [None] * len(reals)
    if config.method == "mps" and config.mps_mode == "map":
        dmap = cached_evolve_map(
            config.model, config.tdvp, config.observe_every, config.cache_dir or None
        )
        metadata["mps"] = dmap.metadata
        for k, r in enumerate(reals):
            results[k] = _safe(lambda r=r: list(dmap.apply(r.state)))
        return results
    if config.method == "exact_oracle":
        oracle = ExactOracle(config.model, config.dimension_cap)
        for k, r in enumerate(reals):
            results[k] = _safe(lambda r=r: oracle.trajectory(r.state, config.times))
        return results
    tasks = [(config, r.state) for r in reals]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_open_direct, task) for task in tasks]
            return [_safe(f.result) for f in futures]
    return [_safe(lambda t=t: _open_direct(t)) for t in tasks]


def _safe(fn):
    try:
        return fn()
    except Exception as exc:  # recorded per realization; the run fails afterwards
        return exc


def _metric_rows(strat: EncodingStrategy | None, open_traj, closed_traj, rho0) -> dict:
    """Per-time metric values for one realization and one strategy."""
    rows: dict[str, list[float]] = {"fidelity": [], "purity": []}
    if strat is not None and not strat.is_physical:
        rows["leakage"] = []
    for rho, ref in zip(open_traj, closed_traj):
        if strat is None:
            a, b = rho, ref
        else:
            a, b = logical_state_matrix(rho, strat), logical_state_matrix(ref, strat)
        rows["fidelity"].append(uhlmann_fidelity(a, b))
        rows["purity"].append(purity(a))
        if "leakage" in rows:
            rows["leakage"].append(leakage(strat, rho0, rho))
    return rows


def file_label(label: str) -> str:
    """Filesystem-safe form of a strategy label, e.g. ``OPTSYMM_0.866025_0.5``."""
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", label).strip("_")


def write_series_csv(path: Path, ts, per_realization: bool) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["t", "mean", "std"]
        if per_realization:
            header += [f"r{i}" for i in range(ts.per_realization.shape[0])]
        writer.writerow(header)
        for j, t in enumerate(ts.times):
            row = [fmt(t), fmt(ts.mean[j]), fmt(ts.std[j])]
            if per_realization:
                row += [fmt(v) for v in ts.per_realization[:, j]]
            writer.writerow(row)


def read_series_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(x) for x in row] for row in reader])
    return {name: rows[:, i] for i, name in enumerate(header)}


def run(config: ExperimentConfig, run_dir: str | Path | None = None) -> RunResult:
    """Execute a configured experiment and write its output directory.

    Files: ``<metric>_<strategy>.csv`` for fidelity, purity and leakage,
    ``eigen_populations.csv`` (ensemble means of the energy-basis populations
    and of ``|rho_13|``), ``summary.csv``, ``fits.json`` when fitting is
    enabled, ``config.txt`` and ``metadata.json``.

    Raises:
        RunError: if any realization failed. Output for the remaining
            realizations is not written; ``metadata.json`` lists the failures.
    """
    start = time.perf_counter()
    out = Path(run_dir) if run_dir is not None else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.dumps())
    times = config.times
    reals = realizations(config)
    metadata: dict = {
        "version": __version__,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "config": config.to_dict(),
        "n_realizations": len(reals),
        "gauge_rule": GAUGE_RULE,
        "bell_grid_order": "squared magnitudes descending (d_S first), then phase indices",
        "logical_grid": {"thetas": list(LOGICAL_THETAS), "phis": list(LOGICAL_PHIS)},
        "std_convention": "population",
        "picture": "schrodinger",
        "basis": "bell (S, TAF, TF+, TF-)",
        "leakage_trace": "Tr(Pi_Q rho_reduced(t))",
    }

    opens = _open_trajectories(config, reals, metadata)
    failures = {r.index: repr(o) for r, o in zip(reals, opens) if isinstance(o, Exception)}
    result = RunResult(out, times, failures=failures, metadata=metadata)
    if failures:
        metadata["failures"] = failures
        metadata["wall_time_s"] = time.perf_counter() - start
        (out / "metadata.json").write_text(json.dumps(metadata, indent=2, default=str))
        raise RunError(f"{len(failures)} of {len(reals)} realizations failed; see {out}")

    strategies = dict(zip(config.strategies, config.strategy_objects))
    per_metric: dict[tuple[str, str], list] = {}
    populations = []
    for r, open_traj in zip(reals, opens):
        closed = closed_trajectory(r.state, config.model, times)
        rho0 = np.outer(r.state, r.state.conj())
        targets = [(TWO_QUBIT, None)] if r.strategy is None else []
        targets += [
            (label, s) for label, s in strategies.items() if r.strategy in (None, label)
        ]
        for label, strat in targets:
            for metric, values in _metric_rows(strat, open_traj, closed, rho0).items():
                per_metric.setdefault((metric, label), []).append(values)
        energy = [bell_to_energy(rho, config.model) for rho in open_traj]
        populations.append(
            [[m[i, i].real for i in range(4)] + [abs(m[1, 3])] for m in energy]
        )

    summary_cols: dict[str, np.ndarray] = {}
    for (metric, label), rows in per_metric.items():
        ts = aggregate(f"{metric}[{label}]", times, rows)
        result.series[(metric, label)] = ts
        write_series_csv(out / f"{metric}_{file_label(label)}.csv", ts, config.per_realization)
        summary_cols[f"{metric}[{label}]_mean"] = ts.mean
        summary_cols[f"{metric}[{label}]_std"] = ts.std

    pop_mean = np.mean(np.asarray(populations), axis=0)
    with open(out / "eigen_populations.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t",) + POPULATION_COLUMNS)
        for j, t in enumerate(times):
            writer.writerow([fmt(t)] + [fmt(v) for v in pop_mean[j]])

    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + list(summary_cols))
        for j, t in enumerate(times):
            writer.writerow([fmt(t)] + [fmt(col[j]) for col in summary_cols.values()])

    if config.fit:
        for (metric, label), ts in result.series.items():
            if metric == "fidelity":
                result.fits[label] = _fit_summary(ts, config.fit_extrapolate)
        (out / "fits.json").write_text(json.dumps(result.fits, indent=2))

    metadata["wall_time_s"] = time.perf_counter() - start
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2, default=str))
    return result


def _fit_summary(ts, t_extra: float) -> dict:
    try:
        fit = fit_fidelity(ts.times, ts.mean)
    except ValueError as exc:
        return {"error": str(exc)}
    try:
        extrapolate(fit, t_extra)
    except ValueError as exc:
        log.info("no extrapolation for %s: %s", ts.name, exc)
    summary = fit.as_dict()
    if math.isinf(summary["tau"]):
        summary["tau"] = None
    return summary


def compare(run_a: str | Path, run_b: str | Path) -> dict:
    """Per-time absolute differences between two run directories.

    Returns a dict with ``times``, per-column maximum differences (keyed
    ``file:column``), the full difference arrays, and a side-by-side table of
    ``|rho_13|``, ``P1`` and ``P3``.

    Raises:
        ValueError: if the time grids or file sets do not match.
    """
    a, b = Path(run_a), Path(run_b)
    pops_a = read_series_csv(a / "eigen_populations.csv")
    pops_b = read_series_csv(b / "eigen_populations.csv")
    if len(pops_a["t"]) != len(pops_b["t"]) or np.max(np.abs(pops_a["t"] - pops_b["t"])) > 1e-12:
        raise ValueError("time grids do not match")
    files = sorted(
        p.name for p in a.glob("*.csv") if (b / p.name).exists() and p.name != "summary.csv"
    )
    diffs: dict[str, np.ndarray] = {}
    for name in files:
        da, db = read_series_csv(a / name), read_series_csv(b / name)
        for col in da:
            if col != "t" and col in db and not col.startswith("r"):
                diffs[f"{name[:-4]}:{col}"] = np.abs(da[col] - db[col])
    table = {
        "t": pops_a["t"],
        **{f"{col}_a": pops_a[col] for col in ("abs_rho13", "P1", "P3")},
        **{f"{col}_b": pops_b[col] for col in ("abs_rho13", "P1", "P3")},
    }
    return {
        "times": pops_a["t"],
        "max_abs_diff": {k: float(v.max()) for k, v in diffs.items()},
        "diffs": diffs,
        "table": table,
    }


def write_compare_csv(report: dict, path: str | Path) -> None:
    table = report["table"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(table))
        for j in range(len(table["t"])):
            writer.writerow([fmt(col[j]) for col in table.values()])
