"""Damped-oscillation fits of fidelity time series.

Model: ``F(t) = c1 + c2 t + (1 - c1) cos(c3 t) exp(-c4 t)``, which equals 1 at
``t = 0`` for any parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_POINTS = 20


def fit_model(t, c) -> np.ndarray:
    c1, c2, c3, c4 = c
    t = np.asarray(t, dtype=float)
    return c1 + c2 * t + (1.0 - c1) * np.cos(c3 * t) * np.exp(-c4 * t)


def fit_jacobian(t, c) -> np.ndarray:
    """Analytic derivatives of :func:`fit_model`, shape ``(len(t), 4)``."""
    c1, _, c3, c4 = c
    t = np.asarray(t, dtype=float)
    damp = np.exp(-c4 * t)
    cos = np.cos(c3 * t)
    jac = np.empty((len(t), 4))
    jac[:, 0] = 1.0 - cos * damp
    jac[:, 1] = t
    jac[:, 2] = -(1.0 - c1) * t * np.sin(c3 * t) * damp
    jac[:, 3] = -(1.0 - c1) * t * cos * damp
    return jac


@dataclass
class FitResult:
    c1: float
    c2: float
    c3: float
    c4: float
    residual_rms: float
    iterations: int
    converged: bool
    flags: list[str] = field(default_factory=list)
    window: tuple[float, float] = (0.0, 0.0)
    extrapolated: dict[float, float] = field(default_factory=dict)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3, self.c4])

    @property
    def tau(self) -> float:
        return math.inf if self.c4 == 0 else 1.0 / self.c4

    def as_dict(self) -> dict:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "c4": self.c4,
            "tau": self.tau,
            "residual_rms": self.residual_rms,
            "iterations": self.iterations,
            "converged": self.converged,
            "flags": list(self.flags),
            "window": list(self.window),
            "extrapolated": {str(k): v for k, v in self.extrapolated.items()},
        }


def initial_guess(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    n_tail = max(1, len(t) // 10)
    c1 = float(np.mean(v[-n_tail:]))
    slope, intercept = np.polyfit(t, v, 1)
    detrended = v - (slope * t + intercept)
    spectrum = np.abs(np.fft.rfft(detrended))
    freqs = np.fft.rfftfreq(len(t), d=float(np.mean(np.diff(t))))
    c3 = 2 * math.pi * float(freqs[1 + np.argmax(spectrum[1:])]) if len(spectrum) > 1 else 0.0
    c4 = 3.0 / float(t[-1] - t[0])
    return np.array([c1, float(slope), c3, c4])


def fit_fidelity(
    times,
    values,
    max_iter: int = 500,
    rel_tol: float = 1e-10,
    init: np.ndarray | None = None,
) -> FitResult:
    """Least-squares fit by damped Gauss-Newton (Levenberg-Marquardt) iterations.

    The damping is decreased after every step that lowers the residual and
    increased otherwise; only residual-lowering steps are accepted. ``c4`` is
    clamped at zero.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < MIN_POINTS or len(t) != len(v):
        raise ValueError(f"need at least {MIN_POINTS} matching (t, value) points")
    if np.any(v <= 0) or np.any(v > 1.05):
        raise ValueError("fidelity values must lie in (0, 1.05]")

    c = initial_guess(t, v) if init is None else np.asarray(init, dtype=float).copy()
    c[3] = max(c[3], 0.0)
    resid = fit_model(t, c) - v
    cost = float(resid @ resid)
    lam = 1e-3
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if cost <= 1e-28 * len(t):
            converged = True
            break
        jac = fit_jacobian(t, c)
        jtj = jac.T @ jac
        grad = jac.T @ resid
        scale = np.diag(jtj).copy()
        scale[scale == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(scale), -grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = c + step
            trial[3] = max(trial[3], 0.0)
            trial_resid = fit_model(t, trial) - v
            trial_cost = float(trial_resid @ trial_resid)
            if trial_cost < cost:
                break
            lam *= 10
            if lam > 1e20:
                break
        if lam > 1e20:
            converged = True  # no descent direction left: stationary point
            break
        change = (cost - trial_cost) / cost
        c, resid, cost = trial, trial_resid, trial_cost
        lam = max(lam / 3, 1e-15)
        if change < rel_tol:
            converged = True
            break

    flags = []
    if not converged:
        flags.append("not_converged")
    if c[3] == 0.0:
        flags.append("no_decay")
    if abs(1.0 - c[0]) < 1e-12:
        flags.append("unidentifiable")
    return FitResult(
        c1=float(c[0]),
        c2=float(c[1]),
        c3=float(c[2]),
        c4=float(c[3]),
        residual_rms=math.sqrt(cost / len(t)),
        iterations=iterations,
        converged=converged,
        flags=flags,
        window=(float(t[0]), float(t[-1])),
    )


def extrapolate(fit: FitResult, t: float) -> float:
    """Evaluate the fitted curve at ``t``; refuses unidentifiable or unconverged fits."""
    bad = {"unidentifiable", "not_converged"} & set(fit.flags)
    if bad:
        raise ValueError(f"cannot extrapolate a flagged fit: {sorted(bad)}")
    value = float(fit_model([t], fit.params)[0])
    fit.extrapolated[float(t)] = value
    return value
