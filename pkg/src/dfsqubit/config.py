"""Experiment configuration in a flat ``key = value`` text format.

Model and integrator keys use the field names of :class:`ModelParams` and
:class:`TdvpOptions`; the remaining keys describe the run. Unknown keys are an
error, since a silently ignored typo in a physics parameter changes results.
"""

from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoding import STRATEGY_NAMES, EncodingStrategy, parse_strategy
from .model import BELL_LABELS, DEFAULT_DIMENSION_CAP, ModelParams, bell_state, eigenstates
from .tdvp import TdvpOptions

METHODS = ("closed", "lindblad_analytic", "lindblad_rk4", "mps", "exact_oracle")
ENSEMBLES = ("bell_grid_332", "logical_grid_18", "single")
MPS_MODES = ("map", "direct")
OUTPUT_DIR_ENV = "DFSQUBIT_OUTPUT_DIR"
CACHE_DIR_ENV = "DFSQUBIT_CACHE_DIR"

MODEL_KEYS = tuple(f.name for f in dataclasses.fields(ModelParams))
TDVP_KEYS = tuple(f.name for f in dataclasses.fields(TdvpOptions))


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, "runs")


def split_top_level(text: str) -> list[str]:
    """Split on commas that are not inside parentheses."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    tail = "".join(current).strip()
    if tail:
        parts.append(tail)
    return [p for p in parts if p]


def parse_state(spec: str, params: ModelParams) -> np.ndarray:
    """Initial two-qubit state as Bell-basis amplitudes.

    Accepts a Bell label (``S``, ``TAF``, ``TF+``, ``TF-``), an energy
    eigenstate ``E0`` to ``E3``, ``QF`` for ``(|1> + e^{i pi/4}|3>)/sqrt(2)``
    in the energy basis, or four comma-separated complex amplitudes.
    """
    text = spec.strip()
    if text in BELL_LABELS:
        return bell_state(text)
    vecs = eigenstates(params)
    if re.fullmatch(r"E[0-3]", text):
        return vecs[:, int(text[1])].astype(complex)
    if text.upper() == "QF":
        return (vecs[:, 1] + np.exp(1j * math.pi / 4) * vecs[:, 3]) / math.sqrt(2)
    try:
        amps = np.array([complex(x.replace(" ", "")) for x in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"cannot parse state {spec!r}") from exc
    if amps.shape != (4,):
        raise ConfigError(f"state {spec!r} needs four amplitudes")
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError(f"state {spec!r} is not normalized (norm {norm:.6g})")
    return amps


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one run."""

    model: ModelParams = field(default_factory=ModelParams)
    tdvp: TdvpOptions = field(default_factory=TdvpOptions)
    method: str = "mps"
    ensemble: str = "bell_grid_332"
    state: str = "S"
    strategies: tuple[str, ...] = ("AF", "SYMM", "NSYMM", "PHYSICAL")
    output_dir: str = field(default_factory=default_output_dir)
    workers: int = 1
    observe_every: int = 2
    thin: int = 1
    per_realization: bool = False
    fit: bool = False
    fit_extrapolate: float = 200.0
    allow_unspecified_coherences: bool = False
    dimension_cap: int = DEFAULT_DIMENSION_CAP
    channel_rates: str = "single"
    mps_mode: str = "map"
    cache_dir: str = field(default_factory=lambda: os.environ.get(CACHE_DIR_ENV, ""))

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.ensemble not in ENSEMBLES:
            raise ConfigError(f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}")
        if self.mps_mode not in MPS_MODES:
            raise ConfigError(f"mps_mode must be one of {MPS_MODES}")
        if self.channel_rates not in ("single", "cutoff"):
            raise ConfigError("channel_rates must be 'single' or 'cutoff'")
        if self.workers < 1 or self.observe_every < 1 or self.thin < 1:
            raise ConfigError("workers, observe_every and thin must be >= 1")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        for spec in self.strategies:
            self.parse_strategy(spec)
        if self.ensemble == "logical_grid_18" and "PHYSICAL" in self.strategies:
            raise ConfigError("logical_grid_18 needs logical strategies; PHYSICAL has none")
        if self.ensemble == "single":
            parse_state(self.state, self.model)
        self.tdvp.n_steps  # noqa: B018  validates t_final/dt commensurability
        if self.tdvp.n_steps % self.observe_every:
            raise ConfigError("observe_every must divide the number of time steps")
        if self.method == "exact_oracle":
            dim = 4 * self.model.n_bos**self.model.n_modes
            if dim > self.dimension_cap:
                raise ConfigError(
                    f"exact_oracle dimension {dim} exceeds dimension_cap {self.dimension_cap}"
                )

    @staticmethod
    def parse_strategy(spec: str) -> EncodingStrategy:
        try:
            return parse_strategy(spec)
        except ValueError as exc:
            raise ConfigError(f"bad strategy {spec!r}: {exc}; known: {STRATEGY_NAMES}") from exc

    @property
    def strategy_objects(self) -> list[EncodingStrategy]:
        return [self.parse_strategy(s) for s in self.strategies]

    @property
    def times(self) -> np.ndarray:
        n_obs = self.tdvp.n_steps // self.observe_every
        return np.arange(n_obs + 1) * (self.tdvp.dt * self.observe_every)

    def to_dict(self) -> dict:
        out: dict = {}
        out.update(dataclasses.asdict(self.model))
        out.update(dataclasses.asdict(self.tdvp))
        for f in dataclasses.fields(self):
            if f.name not in ("model", "tdvp"):
                value = getattr(self, f.name)
                out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def replace(self, **changes) -> ExperimentConfig:
        return from_mapping({**self.to_dict(), **changes})

    def dumps(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, list):
                value = ", ".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


_RUN_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _field_type(key: str) -> str:
    if key in MODEL_KEYS:
        return str(next(f.type for f in dataclasses.fields(ModelParams) if f.name == key))
    if key in TDVP_KEYS:
        return str(next(f.type for f in dataclasses.fields(TdvpOptions) if f.name == key))
    return str(_RUN_FIELDS[key].type)


def _coerce(key: str, value):
    kind = _field_type(key)
    if not isinstance(value, str):
        if kind.startswith("tuple") and isinstance(value, (list, tuple)):
            return tuple(value)
        return value
    text = value.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind}") from exc
    if kind.startswith("tuple"):
        return tuple(split_top_level(text))
    return text


def known_keys() -> tuple[str, ...]:
    run_keys = tuple(k for k in _RUN_FIELDS if k not in ("model", "tdvp"))
    return MODEL_KEYS + TDVP_KEYS + run_keys


def from_mapping(values: dict) -> ExperimentConfig:
    """Build a config from flat keys, rejecting anything unknown."""
    unknown = sorted(set(values) - set(known_keys()))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    coerced = {k: _coerce(k, v) for k, v in values.items()}
    try:
        model = ModelParams(**{k: coerced[k] for k in MODEL_KEYS if k in coerced})
        tdvp = TdvpOptions(**{k: coerced[k] for k in TDVP_KEYS if k in coerced})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    run = {k: v for k, v in coerced.items() if k not in MODEL_KEYS + TDVP_KEYS}
    return ExperimentConfig(model=model, tdvp=tdvp, **run)


def parse_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    values = parse_text(Path(path).read_text())
    values.update(overrides or {})
    return from_mapping(values)
