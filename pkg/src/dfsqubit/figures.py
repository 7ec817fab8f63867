"""Canned desk-scale experiments, one per plot type.

Each figure id maps to a list of named sub-runs (config overrides on top of the
defaults). MPS sub-runs share their dynamical map through the cache directory,
so figures at the same couplings reuse one bath simulation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .config import ExperimentConfig, from_mapping
from .lindblad import analytic_bell_fidelity
from .model import ModelParams, bell_mixing_coeffs, spectrum
from .runner import compare, fmt, run, write_compare_csv


@dataclass(frozen=True)
class Figure:
    description: str
    runs: tuple[tuple[str, dict], ...] = ()
    compare_pairs: tuple[tuple[str, str], ...] = ()


def _optsymm_strategies() -> str:
    levels = (0.25, 0.5, 0.75)
    return ", ".join(
        f"OPTSYMM({math.sqrt(l2):.12g},{math.sqrt(k2):.12g})" for l2 in levels for k2 in levels
    )


def _optnsymm_strategies() -> str:
    ks = (0.1, 0.2, 0.3, 0.4, 0.5, 1 / math.sqrt(3), 0.65, 0.7)
    return ", ".join(f"OPTNSYMM({k:.12g})" for k in ks)


BELL = {"method": "mps", "ensemble": "bell_grid_332"}
LOGICAL = {"method": "mps", "ensemble": "logical_grid_18"}

FIGURES: dict[str, Figure] = {
    "spectrum-vs-interaction": Figure("closed-pair spectrum and Bell mixing versus nu/delta"),
    "physical-qubit-interaction-scan": Figure(
        "physical-qubit fidelity, Bell grid, nu in {-5, 0, 5}",
        tuple(
            (f"nu{nu:+g}", {**BELL, "nu": nu, "strategies": "PHYSICAL"}) for nu in (-5, 0, 5)
        ),
    ),
    "physical-qubit-coupling-scan": Figure(
        "physical-qubit fidelity, Bell grid, alpha in {0.005, 0.01, 0.02}",
        tuple(
            (f"alpha{a:g}", {**BELL, "alpha": a, "strategies": "PHYSICAL"})
            for a in (0.005, 0.01, 0.02)
        ),
    ),
    "encoding-comparison": Figure(
        "fidelity and leakage of AF, SYMM, NSYMM and one physical qubit, Bell grid",
        (("bell_grid", {**BELL, "strategies": "AF, SYMM, NSYMM, PHYSICAL"}),),
    ),
    "optsymm-scan": Figure(
        "OPTSYMM amplitude scan with damped-oscillation fits, Bell grid",
        (("optsymm", {**BELL, "strategies": _optsymm_strategies(), "fit": True}),),
    ),
    "optnsymm-scan": Figure(
        "OPTNSYMM amplitude scan with damped-oscillation fits, Bell grid",
        (("optnsymm", {**BELL, "strategies": _optnsymm_strategies(), "fit": True}),),
    ),
    "logical-grid-encodings": Figure(
        "fidelity and purity of AF, SYMM and NSYMM over the logical grid",
        (("logical_grid", {**LOGICAL, "strategies": "AF, SYMM, NSYMM"}),),
    ),
    "logical-grid-purity": Figure(
        "purity of AF and NSYMM over the logical grid, alpha in {0, 0.01}",
        tuple(
            (f"alpha{a:g}", {**LOGICAL, "alpha": a, "strategies": "AF, NSYMM"}) for a in (0.0, 0.01)
        ),
    ),
    "af-coupling-scan": Figure(
        "AF fidelity and leakage, Bell grid, alpha in {0.005, 0.01, 0.02}",
        tuple((f"alpha{a:g}", {**BELL, "alpha": a, "strategies": "AF"}) for a in (0.005, 0.01, 0.02)),
    ),
    "lindblad-vs-mps": Figure(
        "energy-basis populations and |rho_13| from MPS and Lindblad, quasi-ferromagnetic start",
        tuple(
            (f"{method}_nu{nu:+g}", {
                "method": method,
                "ensemble": "single",
                "state": "QF",
                "alpha": 0.02,
                "nu": nu,
                "mps_mode": "direct",
                "strategies": "AF",
            })
            for nu in (0, 5, -5)
            for method in ("mps", "lindblad_analytic")
        ),
        tuple((f"mps_nu{nu:+g}", f"lindblad_analytic_nu{nu:+g}") for nu in (0, 5, -5)),
    ),
    "analytic-bell-fidelities": Figure(
        "closed-form Lindblad fidelities of TF-, TF+ and TAF, nu in {0, 5, -5}",
    ),
}


def write_spectrum_csv(stream: TextIO, ratios, delta: float = 1.0) -> None:
    """Energies ``E0..E3`` and mixing coefficients ``a, b`` per ``nu/delta`` ratio."""
    writer = csv.writer(stream)
    writer.writerow(["nu_over_delta", "E0", "E1", "E2", "E3", "a", "b"])
    for x in ratios:
        params = ModelParams(delta=delta, nu=x * delta)
        a, b = bell_mixing_coeffs(params)
        writer.writerow([fmt(x)] + [fmt(e) for e in spectrum(params)] + [fmt(a), fmt(b)])


def _write_bell_fidelities(path: Path, base: ExperimentConfig) -> None:
    times = base.times
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        labels = [(nu, s) for nu in (0, 5, -5) for s in ("TF-", "TF+", "TAF")]
        writer.writerow(["t"] + [f"{s}_nu{nu:+g}" for nu, s in labels])
        params = {nu: base.model.replace(nu=float(nu), alpha=0.02) for nu in (0, 5, -5)}
        for t in times:
            row = [analytic_bell_fidelity(s, params[nu], float(t)) for nu, s in labels]
            writer.writerow([fmt(t)] + [fmt(v) for v in row])


def reproduce(figure_id: str, output_dir: str | Path, overrides: dict | None = None) -> list[Path]:
    """Run every sub-experiment of ``figure_id`` below ``output_dir``.

    ``overrides`` apply to every sub-run (e.g. a smaller ``n_modes`` for a quick
    look). Returns the written run directories and files.
    """
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; known: {', '.join(FIGURES)}")
    fig = FIGURES[figure_id]
    root = Path(output_dir) / figure_id
    root.mkdir(parents=True, exist_ok=True)
    overrides = dict(overrides or {})
    overrides.setdefault("cache_dir", str(Path(output_dir) / "cache"))
    written: list[Path] = []
    if figure_id == "spectrum-vs-interaction":
        path = root / "spectrum.csv"
        with open(path, "w", newline="") as fh:
            write_spectrum_csv(fh, np.linspace(-10, 10, 201))
        return [path]
    if figure_id == "analytic-bell-fidelities":
        base = from_mapping({k: v for k, v in overrides.items() if k != "output_dir"})
        path = root / "bell_fidelities.csv"
        _write_bell_fidelities(path, base)
        return [path]
    for name, changes in fig.runs:
        cfg = from_mapping({**changes, **overrides, "output_dir": str(root / name)})
        written.append(run(cfg).run_dir)
    for a, b in fig.compare_pairs:
        path = root / f"compare_{a}_vs_{b}.csv"
        write_compare_csv(compare(root / a, root / b), path)
        written.append(path)
    return written
